#pragma once

// Online stochastic gradient descent in continuous time.
//
// The drift parameters follow
//   d theta = alpha_t * grad_theta f(X, theta) * P * (dX - f(X, theta) dt),
// with P = (sigma sigma^T)^{-1} or I, and the diffusion parameters follow
//   d nu = alpha_t * sum_ij grad_nu (sigma sigma^T)_ij * (d<X,X>_ij - (sigma sigma^T)_ij dt).
// Both are discretized with one explicit, left-endpoint update per observed
// increment.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sgdct/linalg.hpp"

namespace sgdct::core {

// ---------------------------------------------------------------------------
// Learning-rate schedules

enum class ScheduleKind { CappedInverse, Constant, CustomTable };

/// alpha_t as a function of model time.
///
/// CappedInverse: min(alpha0, alpha0 * cap_time / t); with the default
/// cap_time = 1 this is min(alpha0, alpha0 / t) and t = 0 maps to alpha0.
/// CustomTable: piecewise constant, `values[k]` on [knots[k], knots[k+1]).
struct LearningRateSchedule {
  ScheduleKind kind = ScheduleKind::CappedInverse;
  double alpha0 = 1e-2;
  double cap_time = 1.0;
  std::vector<double> knots;
  std::vector<double> values;

  static LearningRateSchedule capped_inverse(double alpha0, double cap_time = 1.0);
  static LearningRateSchedule constant(double alpha0);
  static LearningRateSchedule table(std::vector<double> knots, std::vector<double> values);
};

/// Throws std::invalid_argument for t < 0 or a malformed table.
double learning_rate(const LearningRateSchedule& schedule, double t);

struct ScheduleReport {
  bool divergent_integral = false;
  bool convergent_square_integral = false;
  double integral = 0.0;         ///< int_0^horizon alpha
  double square_integral = 0.0;  ///< int_0^horizon alpha^2
  double square_tail_estimate = 0.0;
};

/// Numerical diagnostic for the Robbins-Monro style conditions
/// int alpha = inf and int alpha^2 < inf. Trapezoidal integration on a uniform
/// grid; growth is judged from the last two decades of [0, horizon], the
/// square-integral tail by geometric extrapolation of the same decades.
ScheduleReport check_schedule_conditions(const LearningRateSchedule& schedule, double horizon,
                                         double grid);

// ---------------------------------------------------------------------------
// Models

/// Drift model f(x, theta): R^m x R^n -> R^m.
class DriftModel {
 public:
  virtual ~DriftModel() = default;
  virtual Eigen::Index state_dim() const = 0;
  virtual Eigen::Index param_dim() const = 0;
  /// Writes f (size m) and the Jacobian jac(i, k) = d f_i / d theta_k (m x n).
  virtual void eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& theta,
                    Eigen::Ref<Vec> f, Eigen::Ref<Mat> jac) const = 0;
};

/// Volatility model through its identifiable product s(x, nu) = sigma sigma^T.
class VolatilityModel {
 public:
  virtual ~VolatilityModel() = default;
  virtual Eigen::Index state_dim() const = 0;
  virtual Eigen::Index param_dim() const = 0;
  /// Writes sst (m x m) and grad (m*m x k) with grad(i + m*j, l) =
  /// d (sigma sigma^T)_ij / d nu_l (column-major vectorization of sst).
  virtual void eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& nu,
                    Eigen::Ref<Mat> sst, Eigen::Ref<Mat> grad) const = 0;
};

// ---------------------------------------------------------------------------
// State and observations

enum class PreconditionMode { InverseSigmaSigmaT, Identity };

struct SgdctState {
  ParamVector theta;
  ParamVector nu;  ///< empty when no volatility model is estimated
  double t = 0.0;
  std::int64_t step_count = 0;
  PreconditionMode precondition_mode = PreconditionMode::InverseSigmaSigmaT;
};

/// One observed increment of the path on [t, t + dt]. `dqv` may be empty for
/// drift-only streams; otherwise it must be symmetric PSD (checked).
struct ObservationIncrement {
  double t = 0.0;
  Vec x;
  Vec dx;
  Mat dqv;
  double dt = 0.0;

  ObservationIncrement() = default;
  ObservationIncrement(double t, Vec x, Vec dx, Mat dqv, double dt);
};

/// Non-owning view used on hot paths; no validation.
struct IncrementView {
  double t;
  Eigen::Ref<const Vec> x;
  Eigen::Ref<const Vec> dx;
  const Mat* dqv;  ///< nullptr for drift-only
  double dt;
};

using ObservationStream = std::vector<ObservationIncrement>;

// ---------------------------------------------------------------------------
// Updates

/// Reusable update engine. Owns scratch buffers and the cached preconditioner so
/// the per-increment cost is allocation free. Single-writer.
class OnlineEstimator {
 public:
  /// `sigma_sigmaT` is required (m x m, invertible) for InverseSigmaSigmaT mode
  /// and ignored for Identity mode. `vol` may be null.
  OnlineEstimator(const DriftModel& drift, const VolatilityModel* vol, LearningRateSchedule schedule,
                  PreconditionMode mode, const Mat& sigma_sigmaT = Mat());

  /// Applies the drift update and, when a volatility model is present and the
  /// increment carries dqv, the diffusion update. Both use alpha at the left
  /// endpoint and the pre-update parameters. Advances t by dt.
  void update(SgdctState& state, const IncrementView& obs);

  /// Drift-only update; does not advance t.
  void drift_update(SgdctState& state, const IncrementView& obs, double alpha);
  /// Diffusion-only update; does not advance t.
  void diffusion_update(SgdctState& state, const IncrementView& obs, double alpha);

  const LearningRateSchedule& schedule() const { return schedule_; }

  /// Separate schedule for the nu update; by default both share `schedule`.
  void set_diffusion_schedule(LearningRateSchedule s) { diffusion_schedule_ = std::move(s); }

 private:
  const DriftModel& drift_;
  const VolatilityModel* vol_;
  LearningRateSchedule schedule_;
  PreconditionMode mode_;
  std::optional<LearningRateSchedule> diffusion_schedule_;
  Mat precond_;
  Vec precond_diag_;
  Vec f_, resid_, weighted_;
  Mat jac_;
  Mat sst_, vol_grad_;
  Vec qv_resid_;
};

/// theta' = theta + alpha_t grad f P (dx - f dt); t advances by obs.dt.
/// Throws PreconditionerError for singular sigma_sigmaT, DivergenceError for
/// non-finite theta'.
SgdctState drift_step(const SgdctState& state, const DriftModel& model, const Mat& sigma_sigmaT,
                      const ObservationIncrement& obs, const LearningRateSchedule& schedule);

/// nu' = nu + alpha_t sum_ij grad (sst)_ij (dqv_ij - sst_ij dt); t advances by obs.dt.
SgdctState diffusion_step(const SgdctState& state, const VolatilityModel& model,
                          const ObservationIncrement& obs, const LearningRateSchedule& schedule);

struct TrajectoryPoint {
  double t;
  ParamVector theta;
  ParamVector nu;
};

struct RunOptions {
  /// Times at which the state is recorded (first increment end >= sample time).
  std::vector<double> sample_times;
  std::function<void(const SgdctState&)> on_sample;
};

/// Folds the updates over the stream. The trajectory starts with `init`, has
/// one point per reached sample time, and ends with the final state.
std::vector<TrajectoryPoint> run_online(const ObservationStream& stream, const DriftModel& model,
                                        const VolatilityModel* vol_model, const Mat& sigma_sigmaT,
                                        const LearningRateSchedule& schedule, const SgdctState& init,
                                        const RunOptions& options = {});

}  // namespace sgdct::core
