#include <cmath>

#include "doctest.h"
#include "fd.hpp"
#include "sgdct/error.hpp"
#include "sgdct/models.hpp"
#include "sgdct/sim.hpp"

using namespace sgdct;
using namespace sgdct::models;

namespace {

Vec flat_sst(const Mat& s) { return Eigen::Map<const Vec>(s.data(), s.size()); }

CirParams random_cir(Eigen::Index d, sim::Rng& rng) {
  CirParams p{Mat(d, d), Vec(d), Mat(d, d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    p.m[i] = rng.uniform(0.5, 2.0);
    for (Eigen::Index j = 0; j < d; ++j) {
      p.c(i, j) = rng.uniform(-1.0, 1.0);
      p.nu(i, j) = rng.uniform(-1.0, 1.0);
    }
  }
  return p;
}

BurgersParams small_grid(int n, double theta) {
  BurgersParams p;
  p.n_interior = n;
  p.dx_grid = 1.0 / (n + 1);
  p.theta = theta;
  return p;
}

}  // namespace

TEST_CASE("ou1d drift examples") {
  auto v = ou1d_drift(1.0, {1.0, 2.0});
  CHECK(v.f == 1.0);
  CHECK(v.grad[0] == 1.0);
  CHECK(v.grad[1] == 1.0);

  v = ou1d_drift(1.7, {1.3, 1.7});
  CHECK(v.f == 0.0);
  CHECK(v.grad[0] == 0.0);
  CHECK(v.grad[1] == 1.3);

  v = ou1d_drift(0.4, {0.0, 1.5});
  CHECK(v.f == 0.0);
  CHECK(v.grad[0] == doctest::Approx(1.1));
  CHECK(v.grad[1] == 0.0);
}

TEST_CASE("ou1d gbar closed form") {
  CHECK(ou1d_gbar({1.3, 1.8}, {1.3, 1.8}) == 0.0);
  CHECK(ou1d_gbar({2.0, 1.0}, {1.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(ou1d_gbar({1.0, 2.0}, {1.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(ou1d_gbar({1.0, 1.0}, {0.0, 1.0}), DomainError);
  CHECK_THROWS_AS(ou1d_grad_gbar({1.0, 1.0}, {-1.0, 1.0}), DomainError);
}

TEST_CASE("ou1d gbar is nonnegative and vanishes only at the truth") {
  const Ou1dParams star{1.4, 1.2};
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= 40; ++j) {
      const Ou1dParams th{0.4 + 0.05 * i, 0.2 + 0.05 * j};
      const double g = ou1d_gbar(th, star);
      CHECK(g >= 0.0);
      const bool at_truth = std::abs(th.c - star.c) < 1e-12 && std::abs(th.m - star.m) < 1e-12;
      if (!at_truth) CHECK(g > 0.0);
    }
  }
}

TEST_CASE("ou1d gbar agrees with a stationary Monte Carlo average") {
  // 4e6 draws keeps the standard error near 3.5e-4 for these instances.
  const std::pair<Ou1dParams, Ou1dParams> cases[] = {
      {{2.0, 1.0}, {1.0, 1.0}}, {{1.0, 2.0}, {1.0, 1.0}}, {{1.2, 1.9}, {1.6, 1.4}}};
  sim::Rng rng(11, 0);
  for (const auto& [th, star] : cases) {
    const double sd = std::sqrt(0.5 / star.c);
    const int n = 4000000;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = star.m + sd * rng.normal();
      const double r = ou1d_drift(x, star).f - ou1d_drift(x, th).f;
      acc += r * r;
    }
    CHECK(std::abs(acc / n - ou1d_gbar(th, star)) < 1e-3);
  }
}

TEST_CASE("ou1d gradients match finite differences") {
  sim::Rng rng(5, 1);
  for (int k = 0; k < 200; ++k) {
    const Ou1dParams star{rng.uniform(1.0, 2.0), rng.uniform(1.0, 2.0)};
    Vec p(2);
    p << rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0);
    const auto g = [&](const Vec& q) { return ou1d_gbar({q[0], q[1]}, star); };
    const Vec num = fd::gradient(g, p);
    const Vec ana = ou1d_grad_gbar({p[0], p[1]}, star);
    CHECK(fd::rel_err(ana, num) < 1e-6);

    const double x = rng.uniform(-2.0, 4.0);
    const auto f = [&](const Vec& q) { return Vec::Constant(1, ou1d_drift(x, {q[0], q[1]}).f); };
    const Mat J = fd::jacobian(f, p);
    CHECK(fd::rel_err(ou1d_drift(x, {p[0], p[1]}).grad.transpose(), J) < 1e-6);
  }
  const Eigen::Vector2d g0 = ou1d_grad_gbar({1.0, 1.0}, {1.0, 1.0});
  CHECK(g0.norm() == 0.0);
  CHECK(ou1d_grad_gbar({1.0, 2.0}, {1.0, 1.0})[1] == doctest::Approx(2.0));
}

TEST_CASE("multi-d OU drift") {
  OuMultiParams p{Vec::Ones(2), Mat::Identity(2, 2)};
  const auto v = ou_multi_drift(Vec::Ones(2), p);
  CHECK(v.f.norm() == 0.0);
  CHECK(v.jac.rows() == 2);
  CHECK(v.jac.cols() == 6);

  // d = 1 with A = 1 is the scalar OU drift with c = 1, m = M.
  OuMultiParams one{Vec::Constant(1, 1.7), Mat::Constant(1, 1, 1.0)};
  for (double x : {-1.0, 0.3, 2.5}) {
    CHECK(ou_multi_drift(Vec::Constant(1, x), one).f[0] == doctest::Approx(ou1d_drift(x, {1.0, 1.7}).f));
  }

  OuMultiParams bad{Vec::Ones(2), Mat::Identity(3, 3)};
  CHECK_THROWS_AS(ou_multi_drift(Vec::Ones(2), bad), DimensionError);
  CHECK_THROWS_AS(ou_multi_drift(Vec::Ones(3), p), DimensionError);
}

TEST_CASE("multi-d OU Jacobian matches finite differences") {
  sim::Rng rng(6, 0);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index d = 1 + k % 4;
    const OuMultiParams p = generate_diag_dominant(d, rng);
    Vec x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = rng.uniform(-2.0, 2.0);
    const Vec theta = p.flatten();
    const auto f = [&](const Vec& q) { return ou_multi_drift(x, OuMultiParams::unflatten(q, d)).f; };
    CHECK(fd::rel_err(ou_multi_drift(x, p).jac, fd::jacobian(f, theta)) < 1e-6);

    // The DriftModel wrapper agrees with the free function.
    const OuMultiDrift model(d);
    Vec fv(d);
    Mat jac(d, model.param_dim());
    model.eval(x, theta, fv, jac);
    CHECK((fv - ou_multi_drift(x, p).f).norm() < 1e-14);
    CHECK((jac - ou_multi_drift(x, p).jac).norm() < 1e-14);
  }
}

TEST_CASE("flatten and unflatten round trip") {
  sim::Rng rng(8, 0);
  const OuMultiParams p = generate_diag_dominant(3, rng);
  const Vec th = p.flatten();
  REQUIRE(th.size() == 12);
  CHECK(th[0] == p.M[0]);
  CHECK(th[3 + 1] == p.A(0, 1));
  CHECK(th[3 + 3] == p.A(1, 0));
  const OuMultiParams q = OuMultiParams::unflatten(th, 3);
  CHECK((q.A - p.A).norm() == 0.0);
  CHECK((q.M - p.M).norm() == 0.0);
}

TEST_CASE("diagonally dominant generator") {
  sim::Rng rng(9, 0);
  for (int k = 0; k < 100; ++k) {
    const OuMultiParams one = generate_diag_dominant(1, rng);
    CHECK(one.A(0, 0) >= 1.0);
    CHECK(one.A(0, 0) <= 2.0);
    CHECK(one.M[0] >= 1.0);
    CHECK(one.M[0] <= 2.0);
  }
  for (int k = 0; k < 200; ++k) {
    const Eigen::Index d = 1 + k % 6;
    const OuMultiParams p = generate_diag_dominant(d, rng);
    CHECK(strictly_diagonally_dominant(p.A));
    for (Eigen::Index i = 0; i < d; ++i) {
      double off = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        if (j != i) {
          off += std::abs(p.A(i, j));
          CHECK(p.A(i, j) >= 1.0);
          CHECK(p.A(i, j) <= 2.0);
        }
      }
      CHECK(p.A(i, i) > off);
      CHECK(p.A(i, i) - off >= 1.0);
      CHECK(p.A(i, i) - off <= 2.0);
    }
    const Eigen::VectorXcd ev = p.A.eigenvalues();
    for (Eigen::Index i = 0; i < d; ++i) CHECK(ev[i].real() > 0.0);
  }
  CHECK_THROWS(generate_diag_dominant(0, rng));
  Mat weak(2, 2);
  weak << 1.0, 1.0, 0.5, 2.0;
  CHECK_FALSE(strictly_diagonally_dominant(weak));
}

TEST_CASE("CIR diffusion examples") {
  CHECK(cir_sst(Vec::Constant(1, 1.0), Mat::Constant(1, 1, 0.3))(0, 0) == doctest::Approx(0.09));
  CHECK(cir_sst(Vec::Constant(1, 4.0), Mat::Constant(1, 1, 0.5))(0, 0) == doctest::Approx(1.0));
  sim::Rng rng(2, 0);
  const CirParams p = random_cir(3, rng);
  CHECK(cir_sst(Vec::Zero(3), p.nu).norm() == 0.0);

  // Row scaling: (sigma sigma^T)_ij = sqrt(x_i x_j) (nu nu^T)_ij.
  Vec x(3);
  x << 0.5, 1.5, 2.0;
  const Mat s = cir_sst(x, p.nu);
  const Mat nnt = p.nu * p.nu.transpose();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(s(i, j) == doctest::Approx(std::sqrt(x[i] * x[j]) * nnt(i, j)));
  }
  CHECK_THROWS_AS(cir_drift_vol(Vec::Constant(3, -0.1), p), DomainError);
}

TEST_CASE("CIR gradients match finite differences") {
  sim::Rng rng(3, 0);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index d = 1 + k % 4;
    const CirParams p = random_cir(d, rng);
    Vec x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = rng.uniform(0.05, 3.0);
    const CirValue v = cir_drift_vol(x, p);

    const Vec nu = p.vol_params();
    const auto f = [&](const Vec& th) { return cir_drift_vol(x, CirParams::from_flat(th, nu, d)).f; };
    CHECK(fd::rel_err(v.grad_f, fd::jacobian(f, p.drift_params())) < 1e-6);

    const auto s = [&](const Vec& n) {
      return flat_sst(cir_sst(x, CirParams::from_flat(p.drift_params(), n, d).nu));
    };
    CHECK(fd::rel_err(v.grad_sst, fd::jacobian(s, nu)) < 1e-6);
    CHECK((v.f - p.c * (p.m - x)).norm() < 1e-12);

    const CirDrift dm(d);
    const CirVolatility vm(d);
    Vec fv(d);
    Mat jac(d, dm.param_dim()), sst(d, d), g(d * d, vm.param_dim());
    dm.eval(x, p.drift_params(), fv, jac);
    vm.eval(x, nu, sst, g);
    CHECK((jac - v.grad_f).norm() < 1e-14);
    CHECK((g - v.grad_sst).norm() < 1e-14);
    CHECK((sst - v.sst).norm() < 1e-14);
  }
}

TEST_CASE("Burgers drift examples") {
  // One interior node with boundaries 0 and 1 on dx = 0.1.
  BurgersParams p;
  p.n_interior = 1;
  p.dx_grid = 0.1;
  p.theta = 1.0;
  p.u_left = 0.0;
  p.u_right = 1.0;
  CHECK(burgers_drift(Vec::Constant(1, 0.5), p).f[0] == doctest::Approx(-2.5));

  BurgersParams k = small_grid(9, 2.0);
  k.u_left = k.u_right = 0.7;
  CHECK(burgers_drift(Vec::Constant(9, 0.7), k).f.norm() < 1e-12);

  BurgersParams lin = small_grid(9, 0.0);
  Vec u(9);
  for (int i = 0; i < 9; ++i) u[i] = (i + 1) * lin.dx_grid;
  const Vec f = burgers_drift(u, lin).f;
  for (int i = 0; i < 9; ++i) CHECK(f[i] == doctest::Approx(-u[i]));

  CHECK_THROWS_AS(burgers_drift(Vec::Zero(8), lin), DimensionError);
}

TEST_CASE("Burgers drift is translation consistent") {
  sim::Rng rng(4, 0);
  for (int trial = 0; trial < 50; ++trial) {
    BurgersParams p = small_grid(12, rng.uniform(0.1, 10.0));
    p.u_left = rng.uniform(-1.0, 1.0);
    p.u_right = rng.uniform(-1.0, 1.0);
    Vec u(12);
    for (int i = 0; i < 12; ++i) u[i] = rng.uniform(-1.0, 1.0);
    const double shift = rng.uniform(-2.0, 2.0);
    BurgersParams q = p;
    q.u_left += shift;
    q.u_right += shift;
    const auto a = burgers_drift(u, p);
    const auto b = burgers_drift(u.array() + shift, q);
    CHECK((b.grad_theta - a.grad_theta).norm() < 1e-8 * (1.0 + a.grad_theta.norm()));
    for (int i = 0; i < 12; ++i) {
      const double lo = i == 0 ? p.u_left : u[i - 1];
      const double hi = i == 11 ? p.u_right : u[i + 1];
      const double first_diff = (hi - lo) / (2.0 * p.dx_grid);
      CHECK(b.f[i] - a.f[i] == doctest::Approx(-shift * first_diff).epsilon(1e-8).scale(1e3));
    }
  }
}

TEST_CASE("Burgers theta gradient matches finite differences") {
  sim::Rng rng(7, 0);
  for (int trial = 0; trial < 100; ++trial) {
    BurgersParams p = small_grid(10, rng.uniform(0.1, 10.0));
    Vec u(10);
    for (int i = 0; i < 10; ++i) u[i] = rng.uniform(-1.0, 1.0);
    const auto f = [&](const Vec& th) {
      BurgersParams q = p;
      q.theta = th[0];
      return burgers_drift(u, q).f;
    };
    const Mat J = fd::jacobian(f, Vec::Constant(1, p.theta));
    const Vec g = burgers_drift(u, p).grad_theta;
    // Laplacian entries scale with 1/dx^2, so compare relative to the column norm.
    CHECK((J.col(0) - g).norm() / g.norm() < 1e-6);

    Vec fi(10), lap(10);
    burgers_drift_into(u, p, p.theta, fi, lap);
    CHECK((fi - burgers_drift(u, p).f).norm() < 1e-12);
    CHECK((lap - g).norm() < 1e-12);
  }
}
