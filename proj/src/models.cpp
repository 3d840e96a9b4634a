#include "sgdct/models.hpp"

#include <cmath>

#include "sgdct/error.hpp"

namespace sgdct::models {

Ou1dDriftValue ou1d_drift(double x, const Ou1dParams& p) {
  return {p.c * (p.m - x), Eigen::Vector2d(p.m - x, p.c)};
}

double ou1d_gbar(const Ou1dParams& theta, const Ou1dParams& star) {
  if (!(star.c > 0.0)) throw DomainError("ou1d_gbar: c* must be positive for a stationary measure");
  const double a = star.c * star.m - theta.c * theta.m;
  const double b = star.c - theta.c;
  return a * a + b * b * (1.0 / (2.0 * star.c) + star.m * star.m) + 2.0 * a * (theta.c - star.c) * star.m;
}

Eigen::Vector2d ou1d_grad_gbar(const Ou1dParams& theta, const Ou1dParams& star) {
  if (!(star.c > 0.0)) throw DomainError("ou1d_grad_gbar: c* must be positive for a stationary measure");
  // gbar = a^2 + b^2 (v + m*^2) - 2 a b m*, a = c*m* - c m, b = c* - c.
  const double a = star.c * star.m - theta.c * theta.m;
  const double b = star.c - theta.c;
  const double q = 1.0 / (2.0 * star.c) + star.m * star.m;
  const double dga = 2.0 * a - 2.0 * b * star.m;
  const double dgb = 2.0 * b * q - 2.0 * a * star.m;
  // da/dc = -m, da/dm = -c, db/dc = -1.
  return {-theta.m * dga - dgb, -theta.c * dga};
}

void Ou1dDrift::eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& theta,
                     Eigen::Ref<Vec> f, Eigen::Ref<Mat> jac) const {
  const double c = theta[0];
  const double m = theta[1];
  f[0] = c * (m - x[0]);
  jac(0, 0) = m - x[0];
  jac(0, 1) = c;
}

// ---------------------------------------------------------------------------

ParamVector OuMultiParams::flatten() const {
  const Eigen::Index d = dim();
  ParamVector theta(d + d * d);
  theta.head(d) = M;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) theta[d + i * d + k] = A(i, k);
  }
  return theta;
}

OuMultiParams OuMultiParams::unflatten(const Eigen::Ref<const Vec>& theta, Eigen::Index d) {
  if (theta.size() != d + d * d) throw DimensionError("OuMultiParams: theta has wrong size");
  OuMultiParams p{theta.head(d), Mat(d, d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) p.A(i, k) = theta[d + i * d + k];
  }
  return p;
}

OuMultiDriftValue ou_multi_drift(const Eigen::Ref<const Vec>& x, const OuMultiParams& p) {
  const Eigen::Index d = p.dim();
  if (p.A.rows() != d || p.A.cols() != d || x.size() != d) {
    throw DimensionError("ou_multi_drift: dimensions disagree");
  }
  OuMultiDriftValue out{Vec(d), Mat(d, d + d * d)};
  OuMultiDrift(d).eval(x, p.flatten(), out.f, out.jac);
  return out;
}

bool strictly_diagonally_dominant(const Mat& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i != j) off += std::abs(a(i, j));
    }
    if (!(std::abs(a(i, i)) > off)) return false;
  }
  return true;
}

void OuMultiDrift::eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& theta,
                        Eigen::Ref<Vec> f, Eigen::Ref<Mat> jac) const {
  const Eigen::Index d = d_;
  jac.setZero();
  for (Eigen::Index i = 0; i < d; ++i) {
    double acc = theta[i];
    const Eigen::Index row = d + i * d;
    for (Eigen::Index k = 0; k < d; ++k) {
      acc -= theta[row + k] * x[k];
      jac(i, row + k) = -x[k];
    }
    f[i] = acc;
    jac(i, i) = 1.0;
  }
}

// ---------------------------------------------------------------------------

ParamVector CirParams::drift_params() const {
  const Eigen::Index d = dim();
  ParamVector theta(d * d + d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) theta[i * d + k] = c(i, k);
  }
  theta.tail(d) = m;
  return theta;
}

ParamVector CirParams::vol_params() const {
  const Eigen::Index d = dim();
  ParamVector v(d * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) v[i * d + k] = nu(i, k);
  }
  return v;
}

CirParams CirParams::from_flat(const Eigen::Ref<const Vec>& theta, const Eigen::Ref<const Vec>& nu,
                               Eigen::Index d) {
  if (theta.size() != d * d + d || nu.size() != d * d) {
    throw DimensionError("CirParams: flat parameter sizes do not match d");
  }
  CirParams p{Mat(d, d), theta.tail(d), Mat(d, d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      p.c(i, k) = theta[i * d + k];
      p.nu(i, k) = nu[i * d + k];
    }
  }
  return p;
}

namespace {

void check_nonnegative(const Eigen::Ref<const Vec>& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) throw DomainError("CIR state must be componentwise nonnegative");
  }
}

}  // namespace

Mat cir_sst(const Eigen::Ref<const Vec>& x, const Mat& nu) {
  check_nonnegative(x);
  const Vec s = x.cwiseSqrt();
  return s.asDiagonal() * (nu * nu.transpose()) * s.asDiagonal();
}

CirValue cir_drift_vol(const Eigen::Ref<const Vec>& x, const CirParams& p) {
  const Eigen::Index d = p.dim();
  if (x.size() != d || p.c.rows() != d || p.c.cols() != d || p.nu.rows() != d || p.nu.cols() != d) {
    throw DimensionError("cir_drift_vol: dimensions disagree");
  }
  check_nonnegative(x);
  CirValue out{Vec(d), Mat(d, d * d + d), Mat(d, d), Mat(d * d, d * d)};
  CirDrift(d).eval(x, p.drift_params(), out.f, out.grad_f);
  CirVolatility(d).eval(x, p.vol_params(), out.sst, out.grad_sst);
  return out;
}

void CirDrift::eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& theta,
                    Eigen::Ref<Vec> f, Eigen::Ref<Mat> jac) const {
  const Eigen::Index d = d_;
  const auto m = theta.tail(d);
  jac.setZero();
  for (Eigen::Index i = 0; i < d; ++i) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double c_ik = theta[i * d + k];
      acc += c_ik * (m[k] - x[k]);
      jac(i, i * d + k) = m[k] - x[k];
      jac(i, d * d + k) = c_ik;
    }
    f[i] = acc;
  }
}

void CirVolatility::eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& nu,
                         Eigen::Ref<Mat> sst, Eigen::Ref<Mat> grad) const {
  const Eigen::Index d = d_;
  check_nonnegative(x);
  grad.setZero();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double scale = std::sqrt(x[i] * x[j]);
      double nnt = 0.0;
      for (Eigen::Index b = 0; b < d; ++b) nnt += nu[i * d + b] * nu[j * d + b];
      sst(i, j) = scale * nnt;
      // d (nu nu^T)_ij / d nu_ab = delta_ia nu_jb + delta_ja nu_ib
      const Eigen::Index row = i + d * j;
      for (Eigen::Index b = 0; b < d; ++b) {
        grad(row, i * d + b) += scale * nu[j * d + b];
        grad(row, j * d + b) += scale * nu[i * d + b];
      }
    }
  }
}

// ---------------------------------------------------------------------------

void burgers_drift_into(const Eigen::Ref<const Vec>& u, const BurgersParams& p, double theta,
                        Eigen::Ref<Vec> f, Eigen::Ref<Vec> laplacian) {
  const Eigen::Index n = p.n_interior;
  if (u.size() != n || f.size() != n || laplacian.size() != n) {
    throw DimensionError("burgers_drift: field size does not match n_interior");
  }
  const double inv_dx2 = 1.0 / (p.dx_grid * p.dx_grid);
  const double inv_2dx = 1.0 / (2.0 * p.dx_grid);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double left = i == 0 ? p.u_left : u[i - 1];
    const double right = i == n - 1 ? p.u_right : u[i + 1];
    const double lap = (right - 2.0 * u[i] + left) * inv_dx2;
    laplacian[i] = lap;
    f[i] = theta * lap - u[i] * (right - left) * inv_2dx;
  }
}

BurgersDriftValue burgers_drift(const Eigen::Ref<const Vec>& u, const BurgersParams& p) {
  if (p.n_interior < 1) throw DomainError("burgers_drift: n_interior must be >= 1");
  BurgersDriftValue out{Vec(p.n_interior), Vec(p.n_interior)};
  burgers_drift_into(u, p, p.theta, out.f, out.grad_theta);
  return out;
}

void BurgersDrift::eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& theta,
                        Eigen::Ref<Vec> f, Eigen::Ref<Mat> jac) const {
  burgers_drift_into(x, grid_, theta[0], f, jac.col(0));
}

}  // namespace sgdct::models
