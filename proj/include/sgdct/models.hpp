#pragma once

// Drift and volatility families: 1-d and multi-d Ornstein-Uhlenbeck, the
// multi-d CIR process and the semidiscrete stochastic Burgers equation.
//
// Parameter layouts (flat ParamVector):
//   Ou1d      theta = (c, m)
//   OuMulti   theta = (M_1..M_d, A row-major)
//   Cir       theta = (c row-major, m_1..m_d),  nu = nu row-major
//   Burgers   theta = (theta)

#include <random>
#include <utility>

#include "sgdct/core.hpp"
#include "sgdct/linalg.hpp"

namespace sgdct::models {

// ---------------------------------------------------------------------------
// 1-d Ornstein-Uhlenbeck: dX = c (m - X) dt + dW

struct Ou1dParams {
  double c = 1.0;
  double m = 1.0;
};

struct Ou1dDriftValue {
  double f;
  Eigen::Vector2d grad;  ///< (df/dc, df/dm)
};

Ou1dDriftValue ou1d_drift(double x, const Ou1dParams& p);

/// Stationary objective E_pi[(f(x, theta*) - f(x, theta))^2] with
/// pi = N(m*, 1/(2 c*)). Throws DomainError when c* <= 0.
double ou1d_gbar(const Ou1dParams& theta, const Ou1dParams& theta_star);

/// Analytic gradient of ou1d_gbar in (c, m).
Eigen::Vector2d ou1d_grad_gbar(const Ou1dParams& theta, const Ou1dParams& theta_star);

class Ou1dDrift final : public core::DriftModel {
 public:
  Eigen::Index state_dim() const override { return 1; }
  Eigen::Index param_dim() const override { return 2; }
  void eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& theta, Eigen::Ref<Vec> f,
            Eigen::Ref<Mat> jac) const override;
};

// ---------------------------------------------------------------------------
// Multi-d Ornstein-Uhlenbeck: dX = (M - A X) dt + dW

struct OuMultiParams {
  Vec M;
  Mat A;

  Eigen::Index dim() const { return M.size(); }
  ParamVector flatten() const;
  static OuMultiParams unflatten(const Eigen::Ref<const Vec>& theta, Eigen::Index d);
};

struct OuMultiDriftValue {
  Vec f;
  Mat jac;  ///< d x (d + d^2)
};

OuMultiDriftValue ou_multi_drift(const Eigen::Ref<const Vec>& x, const OuMultiParams& p);

/// Off-diagonals U[1,2]; A_ii = sum_{j != i} A_ij + U[1,2]; M_i ~ U[1,2].
template <class Rng>
OuMultiParams generate_diag_dominant(Eigen::Index d, Rng& rng) {
  if (d < 1) throw std::invalid_argument("generate_diag_dominant: d must be >= 1");
  std::uniform_real_distribution<double> u12(1.0, 2.0);
  OuMultiParams p{Vec(d), Mat(d, d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (i != j) p.A(i, j) = u12(rng);
    }
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (i != j) off += p.A(i, j);
    }
    p.A(i, i) = off + u12(rng);
  }
  for (Eigen::Index i = 0; i < d; ++i) p.M(i) = u12(rng);
  return p;
}

bool strictly_diagonally_dominant(const Mat& a);

class OuMultiDrift final : public core::DriftModel {
 public:
  explicit OuMultiDrift(Eigen::Index d) : d_(d) {}
  Eigen::Index state_dim() const override { return d_; }
  Eigen::Index param_dim() const override { return d_ + d_ * d_; }
  void eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& theta, Eigen::Ref<Vec> f,
            Eigen::Ref<Mat> jac) const override;

 private:
  Eigen::Index d_;
};

// ---------------------------------------------------------------------------
// Multi-d CIR: dX = c (m - X) dt + sqrt(X) (.) nu dW
//
// sqrt(x) (.) nu scales row i of nu by sqrt(x_i), so
// (sigma sigma^T)_ij = sqrt(x_i x_j) (nu nu^T)_ij.

struct CirParams {
  Mat c;
  Vec m;
  Mat nu;

  Eigen::Index dim() const { return m.size(); }
  ParamVector drift_params() const;  ///< (c row-major, m)
  ParamVector vol_params() const;    ///< nu row-major
  static CirParams from_flat(const Eigen::Ref<const Vec>& theta, const Eigen::Ref<const Vec>& nu,
                             Eigen::Index d);
};

struct CirValue {
  Vec f;
  Mat grad_f;    ///< d x (d^2 + d), drift Jacobian in the theta layout
  Mat sst;       ///< d x d
  Mat grad_sst;  ///< d^2 x d^2, row i + d*j, column = nu row-major index
};

/// Throws DomainError for a negative state component.
CirValue cir_drift_vol(const Eigen::Ref<const Vec>& x, const CirParams& p);

/// sigma(x, nu) sigma(x, nu)^T only.
Mat cir_sst(const Eigen::Ref<const Vec>& x, const Mat& nu);

class CirDrift final : public core::DriftModel {
 public:
  explicit CirDrift(Eigen::Index d) : d_(d) {}
  Eigen::Index state_dim() const override { return d_; }
  Eigen::Index param_dim() const override { return d_ * d_ + d_; }
  void eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& theta, Eigen::Ref<Vec> f,
            Eigen::Ref<Mat> jac) const override;

 private:
  Eigen::Index d_;
};

class CirVolatility final : public core::VolatilityModel {
 public:
  explicit CirVolatility(Eigen::Index d) : d_(d) {}
  Eigen::Index state_dim() const override { return d_; }
  Eigen::Index param_dim() const override { return d_ * d_; }
  void eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& nu, Eigen::Ref<Mat> sst,
            Eigen::Ref<Mat> grad) const override;

 private:
  Eigen::Index d_;
};

// ---------------------------------------------------------------------------
// Stochastic Burgers equation on [0, 1], central differences:
//   du_i = theta (u_{i+1} - 2u_i + u_{i-1}) / dx^2 dt
//          - u_i (u_{i+1} - u_{i-1}) / (2 dx) dt + sigma / sqrt(dx) dW_i

struct BurgersParams {
  double theta = 1.0;
  double dx_grid = 0.01;
  int n_interior = 99;
  double u_left = 0.0;
  double u_right = 1.0;
  double sigma_noise = 0.1;
};

struct BurgersDriftValue {
  Vec f;
  Vec grad_theta;  ///< discrete Laplacian
};

BurgersDriftValue burgers_drift(const Eigen::Ref<const Vec>& u, const BurgersParams& p);

/// Allocation-free variant writing into preallocated buffers.
void burgers_drift_into(const Eigen::Ref<const Vec>& u, const BurgersParams& p, double theta,
                        Eigen::Ref<Vec> f, Eigen::Ref<Vec> laplacian);

/// Explicit diffusion number theta dt / dx^2; the scheme needs it below 0.5.
inline double burgers_diffusion_number(double theta, double dt, double dx) {
  return theta * dt / (dx * dx);
}

/// Drift model with theta the only unknown; grid and boundary fixed by `grid`.
class BurgersDrift final : public core::DriftModel {
 public:
  explicit BurgersDrift(BurgersParams grid) : grid_(std::move(grid)) {}
  Eigen::Index state_dim() const override { return grid_.n_interior; }
  Eigen::Index param_dim() const override { return 1; }
  void eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& theta, Eigen::Ref<Vec> f,
            Eigen::Ref<Mat> jac) const override;

 private:
  BurgersParams grid_;
};

}  // namespace sgdct::models
