#include <cmath>
#include <sstream>

#include "doctest.h"
#include "sgdct/error.hpp"
#include "sgdct/models.hpp"
#include "sgdct/sim.hpp"

using namespace sgdct;
using namespace sgdct::sim;

namespace {

double sample_corr(const BrownianSpec& spec, int n, double dt, std::uint64_t seed, double* var0 = nullptr) {
  Rng rng(seed, 0);
  double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
  for (int k = 0; k < n; ++k) {
    const Vec w = correlated_increments(spec, dt, rng);
    s0 += w[0];
    s1 += w[1];
    s00 += w[0] * w[0];
    s11 += w[1] * w[1];
    s01 += w[0] * w[1];
  }
  const double m0 = s0 / n, m1 = s1 / n;
  const double v0 = s00 / n - m0 * m0, v1 = s11 / n - m1 * m1;
  if (var0) *var0 = v0;
  return (s01 / n - m0 * m1) / std::sqrt(v0 * v1);
}

models::CirParams cir1(double c, double m, double nu) {
  return {Mat::Constant(1, 1, c), Vec::Constant(1, m), Mat::Constant(1, 1, nu)};
}

}  // namespace

TEST_CASE("identical rng specs give identical draws") {
  Rng a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int k = 0; k < 1000; ++k) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs |= x != c.normal();
  }
  CHECK(differs);

  const models::Ou1dParams p{1.2, 1.5};
  Rng r1(3, 1), r2(3, 1);
  const SampledPath p1 = simulate_ou1d(p, 0.0, 0.01, 500, r1);
  const SampledPath p2 = simulate_ou1d(p, 0.0, 0.01, 500, r2);
  REQUIRE(p1.size() == p2.size());
  for (std::size_t k = 0; k < p1.size(); ++k) CHECK(p1.x[k][0] == p2.x[k][0]);
  std::ostringstream o1, o2;
  write_path_csv(o1, p1);
  write_path_csv(o2, p2);
  CHECK(o1.str() == o2.str());
}

TEST_CASE("correlated increments") {
  const int n = 100000;
  const double dt = 0.01;
  double v0 = 0.0;
  const double r_id = sample_corr(BrownianSpec::identity(2), n, dt, 1, &v0);
  // SE of a sample correlation is about (1 - rho^2) / sqrt(n).
  CHECK(std::abs(r_id) < 3.0 / std::sqrt(n));
  CHECK(std::abs(v0 - dt) < 3.0 * dt * std::sqrt(2.0 / n));

  const double r = sample_corr(BrownianSpec::equicorrelated(2, 0.75), n, dt, 2);
  CHECK(std::abs(r - 0.75) < 3.0 * (1.0 - 0.75 * 0.75) / std::sqrt(n));

  Rng rng(1, 1);
  CHECK(correlated_increments(BrownianSpec::equicorrelated(3, 0.5), 0.0, rng).norm() == 0.0);

  const CorrelatedBrownian cb(BrownianSpec::equicorrelated(4, 0.3));
  const Mat llt = cb.factor() * cb.factor().transpose();
  CHECK((llt - BrownianSpec::equicorrelated(4, 0.3).correlation).norm() < 1e-12);

  // Perfect correlation is only semidefinite but still admissible.
  const CorrelatedBrownian one(BrownianSpec::equicorrelated(2, 1.0));
  const Vec w = one.increments(1.0, rng);
  CHECK(w[0] == doctest::Approx(w[1]));

  BrownianSpec bad;
  bad.d = 2;
  bad.correlation = Mat(2, 2);
  bad.correlation << 1.0, 1.5, 1.5, 1.0;
  CHECK_THROWS_AS((CorrelatedBrownian(bad)), FactorizationError);
  bad.correlation << 2.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS((CorrelatedBrownian(bad)), FactorizationError);
}

TEST_CASE("euler step examples") {
  const Mat I1 = Mat::Identity(1, 1);
  CHECK(euler_step(Vec::Zero(1), Vec::Ones(1), I1, 0.01, Vec::Zero(1))[0] == doctest::Approx(0.01));
  CHECK(euler_step(Vec::Constant(1, 0.3), Vec::Zero(1), I1, 0.01, Vec::Constant(1, 0.1))[0] ==
        doctest::Approx(0.4));
  const double f = models::ou1d_drift(1.0, {1.0, 2.0}).f;
  CHECK(euler_step(Vec::Ones(1), Vec::Constant(1, f), I1, 0.01, Vec::Constant(1, 0.05))[0] ==
        doctest::Approx(1.06));

  const auto apply = [](const Eigen::Ref<const Vec>& dw) { return Vec(2.0 * dw); };
  CHECK(euler_step(Vec::Ones(1), Vec::Zero(1), apply, 0.1, Vec::Constant(1, 0.5))[0] == doctest::Approx(2.0));

  CHECK_THROWS_AS(euler_step(Vec::Ones(1), Vec::Ones(1), I1, 0.0, Vec::Zero(1)), std::invalid_argument);
  CHECK_THROWS_AS(euler_step(Vec::Ones(1), Vec::Constant(1, INFINITY), I1, 0.1, Vec::Zero(1)), DivergenceError);
}

TEST_CASE("CIR step examples") {
  CHECK(cir_step(Vec::Constant(1, 1.0), cir1(1.0, 1.0, 0.3), 0.01, Vec::Constant(1, -0.1))[0] ==
        doctest::Approx(0.97));

  Rng rng(4, 0);
  models::CirParams p{Mat::Identity(2, 2) * 1.5, Vec::Constant(2, 0.8), Mat::Constant(2, 2, 0.4)};
  CHECK((cir_step(p.m, p, 0.01, Vec::Zero(2)) - p.m).norm() < 1e-15);
  const Vec x0 = cir_step(Vec::Zero(2), p, 0.01, Vec::Constant(2, 5.0));
  CHECK(x0[0] == doctest::Approx(1.5 * 0.8 * 0.01));
  CHECK(x0[1] == doctest::Approx(1.5 * 0.8 * 0.01));
}

TEST_CASE("CIR step never goes negative") {
  // Large vol and dt to hit the boundary often.
  models::CirParams p{Mat::Identity(2, 2), Vec::Constant(2, 0.1), Mat::Constant(2, 2, 1.5)};
  p.nu(0, 1) = -0.5;
  Rng rng(5, 0);
  Vec x = Vec::Constant(2, 0.1), dw(2);
  int hits = 0;
  for (int k = 0; k < 1000000; ++k) {
    dw[0] = 0.3 * rng.normal();
    dw[1] = 0.3 * rng.normal();
    x = cir_step(x, p, 0.09, dw);
    if (!(x.minCoeff() >= 0.0)) {
      FAIL("negative CIR state at step " << k);
      break;
    }
    hits += x.minCoeff() == 0.0;
  }
  CHECK(hits > 0);
}

TEST_CASE("Burgers step") {
  models::BurgersParams p;
  p.n_interior = 9;
  p.dx_grid = 0.1;
  p.theta = 1.0;
  p.u_left = p.u_right = 0.4;
  p.sigma_noise = 0.0;
  Rng rng(1, 0);
  Vec dw(9);
  rng.fill_normal(dw);
  const Vec u = Vec::Constant(9, 0.4);
  CHECK((burgers_step(u, p, 1e-3, dw) - u).norm() < 1e-14);

  // Composition with the Euler step.
  p.sigma_noise = 0.2;
  p.u_left = 0.0;
  p.u_right = 1.0;
  Vec v(9);
  rng.fill_normal(v);
  const Vec f = models::burgers_drift(v, p).f;
  const Mat sig = Mat::Identity(9, 9) * (p.sigma_noise / std::sqrt(p.dx_grid));
  CHECK((burgers_step(v, p, 1e-3, dw) - euler_step(v, f, sig, 1e-3, dw)).norm() < 1e-13);

  Vec w = v, sf(9), sl(9);
  burgers_step_inplace(w, p, 1e-3, dw, sf, sl);
  CHECK((w - burgers_step(v, p, 1e-3, dw)).norm() == 0.0);

  CHECK(models::burgers_diffusion_number(1.0, 1e-5, 0.01) == doctest::Approx(0.1));
  CHECK(burgers_stable_substeps(1.0, 1e-5, 0.01) == 1);
  CHECK(burgers_stable_substeps(10.0, 1e-5, 0.01) == 3);
  CHECK(models::burgers_diffusion_number(10.0, 1e-5 / 3, 0.01) <= 0.4);

  Vec bad = v;
  bad[4] = NAN;
  CHECK_THROWS_AS(burgers_step(bad, p, 1e-3, dw), DivergenceError);
}

TEST_CASE("Burgers sup norm stays bounded with stable substeps") {
  models::BurgersParams p;  // dx = 0.01, 99 interior nodes
  p.theta = 10.0;
  const double dt = 1e-5;
  const int k = burgers_stable_substeps(p.theta, dt, p.dx_grid);
  const double h = dt / k;
  Vec f(p.n_interior), lap(p.n_interior), dw(p.n_interior);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, 0);
    Vec u = Vec::LinSpaced(p.n_interior, p.dx_grid, 1.0 - p.dx_grid);
    double sup = 0.0;
    // T = 1 per seed keeps the suite fast; the benchmark covers T = 10.
    for (int s = 0; s < 100000 * k; ++s) {
      rng.fill_normal(dw);
      dw *= std::sqrt(h);
      burgers_step_inplace(u, p, h, dw, f, lap);
      if (s % 1000 == 0) sup = std::max(sup, u.cwiseAbs().maxCoeff());
    }
    CHECK(sup < 1e3);
  }

  // Without substeps the same theta violates the explicit limit and blows up.
  Rng rng(0, 0);
  Vec u = Vec::LinSpaced(p.n_interior, p.dx_grid, 1.0 - p.dx_grid);
  bool blew_up = false;
  for (int s = 0; s < 100000 && !blew_up; ++s) {
    rng.fill_normal(dw);
    dw *= std::sqrt(dt);
    try {
      burgers_step_inplace(u, p, dt, dw, f, lap);
      blew_up = u.cwiseAbs().maxCoeff() > 1e3;
    } catch (const DivergenceError&) {
      blew_up = true;
    }
  }
  CHECK(blew_up);
}

TEST_CASE("path to stream") {
  SampledPath two;
  two.push(0.0, Vec::Constant(1, 0.3));
  two.push(0.01, Vec::Constant(1, 0.5));
  const auto s = path_to_stream(two, StreamMode::DriftOnly);
  REQUIRE(s.size() == 1);
  CHECK(s[0].dt == doctest::Approx(0.01));
  CHECK(s[0].dx[0] == doctest::Approx(0.2));
  CHECK(s[0].x[0] == 0.3);
  CHECK(s[0].dqv.size() == 0);

  SampledPath p2;
  Vec a(2), b(2);
  a << 1.0, 1.0;
  b << 1.1, 0.8;
  p2.push(0.0, a);
  p2.push(0.5, b);
  const auto q = path_to_stream(p2, StreamMode::DriftAndQv);
  Mat want(2, 2);
  want << 0.01, -0.02, -0.02, 0.04;
  CHECK((q[0].dqv - want).norm() < 1e-12);

  SampledPath flat;
  for (int k = 0; k < 10; ++k) flat.push(0.1 * k, Vec::Constant(3, 2.0));
  for (const auto& inc : path_to_stream(flat, StreamMode::DriftAndQv)) {
    CHECK(inc.dx.norm() == 0.0);
    CHECK(inc.dqv.norm() == 0.0);
  }
  const auto sub = path_to_stream(flat, StreamMode::DriftOnly, 3);
  REQUIRE(sub.size() == 3);
  CHECK(sub[0].dt == doctest::Approx(0.3));

  SampledPath back;
  back.push(0.0, Vec::Zero(1));
  back.push(0.2, Vec::Zero(1));
  back.push(0.1, Vec::Zero(1));
  CHECK_THROWS_AS(path_to_stream(back, StreamMode::DriftOnly), DomainError);

  std::ostringstream out;
  write_path_csv(out, p2);
  CHECK(out.str().rfind("t,x_1,x_2\n", 0) == 0);
}

TEST_CASE("realized quadratic variation converges to sigma squared") {
  // dX = -X dt + sigma dW; the realized QV per unit time is sigma^2 up to
  // O(dt) bias and sampling noise.
  const double sigma = 0.7, T = 100.0;
  for (double dt : {1e-2, 1e-3}) {
    Rng rng(12, 0);
    const auto n = static_cast<std::int64_t>(T / dt);
    double x = 0.0, qv = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      const double dx = -x * dt + sigma * std::sqrt(dt) * rng.normal();
      qv += dx * dx;
      x += dx;
    }
    const double se = sigma * sigma * std::sqrt(2.0 / n);
    CHECK(std::abs(qv / T - sigma * sigma) < 3.0 * se + 2.0 * dt * sigma * sigma);
  }
}

TEST_CASE("OU path is stationary with the right moments") {
  Rng rng(21, 0);
  const SampledPath p = simulate_ou1d({1.0, 1.0}, 1.0, 1e-2, 1000000, rng);
  double s = 0.0, s2 = 0.0;
  for (const auto& x : p.x) {
    s += x[0];
    s2 += x[0] * x[0];
  }
  const double n = static_cast<double>(p.size());
  const double mean = s / n, var = s2 / n - mean * mean;
  // Effective sample size is T / (2 tau) with correlation time tau = 1.
  const double neff = 1e4 / 2.0;
  CHECK(std::abs(mean - 1.0) < 3.0 * std::sqrt(0.5 / neff));
  CHECK(std::abs(var - 0.5) < 3.0 * 0.5 * std::sqrt(2.0 / neff));
}

TEST_CASE("CIR simulator shapes") {
  Rng rng(2, 0);
  models::CirParams p{Mat::Identity(2, 2), Vec::Constant(2, 1.0), Mat::Identity(2, 2) * 0.3};
  const SampledPath path = simulate_cir(p, Vec::Ones(2), 0.01, 100, rng);
  CHECK(path.size() == 101);
  CHECK(path.t.back() == doctest::Approx(1.0));
  for (const auto& x : path.x) CHECK(x.minCoeff() >= 0.0);
}
