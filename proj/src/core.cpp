#include "sgdct/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sgdct/error.hpp"

namespace sgdct::core {

LearningRateSchedule LearningRateSchedule::capped_inverse(double alpha0, double cap_time) {
  LearningRateSchedule s;
  s.kind = ScheduleKind::CappedInverse;
  s.alpha0 = alpha0;
  s.cap_time = cap_time;
  return s;
}

LearningRateSchedule LearningRateSchedule::constant(double alpha0) {
  LearningRateSchedule s;
  s.kind = ScheduleKind::Constant;
  s.alpha0 = alpha0;
  return s;
}

LearningRateSchedule LearningRateSchedule::table(std::vector<double> knots, std::vector<double> values) {
  if (knots.empty() || knots.size() != values.size()) {
    throw std::invalid_argument("custom-table schedule needs matching, nonempty knots and values");
  }
  if (!std::is_sorted(knots.begin(), knots.end())) {
    throw std::invalid_argument("custom-table knots must be nondecreasing");
  }
  for (double v : values) {
    if (!(v >= 0.0)) throw std::invalid_argument("custom-table values must be nonnegative");
  }
  LearningRateSchedule s;
  s.kind = ScheduleKind::CustomTable;
  s.knots = std::move(knots);
  s.values = std::move(values);
  return s;
}

double learning_rate(const LearningRateSchedule& schedule, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("learning_rate: t must be >= 0");
  switch (schedule.kind) {
    case ScheduleKind::CappedInverse:
      // t <= cap_time also covers t = 0.
      if (t <= schedule.cap_time) return schedule.alpha0;
      return std::min(schedule.alpha0, schedule.alpha0 * schedule.cap_time / t);
    case ScheduleKind::Constant:
      return schedule.alpha0;
    case ScheduleKind::CustomTable: {
      if (schedule.knots.empty()) throw std::invalid_argument("learning_rate: empty custom table");
      auto it = std::upper_bound(schedule.knots.begin(), schedule.knots.end(), t);
      if (it == schedule.knots.begin()) return schedule.values.front();
      return schedule.values[static_cast<std::size_t>(it - schedule.knots.begin()) - 1];
    }
  }
  return schedule.alpha0;
}

ScheduleReport check_schedule_conditions(const LearningRateSchedule& schedule, double horizon,
                                         double grid) {
  if (!(horizon > 0.0) || !(grid > 0.0)) {
    throw std::invalid_argument("check_schedule_conditions: horizon and grid must be positive");
  }
  const auto n = static_cast<std::int64_t>(std::ceil(horizon / grid));
  const double h = horizon / static_cast<double>(n);
  const double checkpoints[2] = {horizon / 100.0, horizon / 10.0};
  double at_cp[2] = {0.0, 0.0};
  double sq_at_cp[2] = {0.0, 0.0};
  int next_cp = 0;

  double integral = 0.0;
  double square = 0.0;
  double prev = learning_rate(schedule, 0.0);
  for (std::int64_t k = 1; k <= n; ++k) {
    const double t = h * static_cast<double>(k);
    const double a = learning_rate(schedule, t);
    integral += 0.5 * h * (prev + a);
    square += 0.5 * h * (prev * prev + a * a);
    prev = a;
    while (next_cp < 2 && t >= checkpoints[next_cp]) {
      at_cp[next_cp] = integral;
      sq_at_cp[next_cp] = square;
      ++next_cp;
    }
  }

  ScheduleReport report;
  report.integral = integral;
  report.square_integral = square;

  const double d_last = integral - at_cp[1];
  const double d_prev = at_cp[1] - at_cp[0];
  // Logarithmic or faster growth keeps per-decade increments from shrinking.
  report.divergent_integral = d_last > 0.0 && d_last >= 0.9 * d_prev;

  const double e_last = square - sq_at_cp[1];
  const double e_prev = sq_at_cp[1] - sq_at_cp[0];
  if (e_last <= 0.0) {
    report.square_tail_estimate = 0.0;
    report.convergent_square_integral = true;
  } else if (e_prev <= 0.0 || e_last >= e_prev) {
    report.square_tail_estimate = std::numeric_limits<double>::infinity();
    report.convergent_square_integral = false;
  } else {
    const double q = e_last / e_prev;
    report.square_tail_estimate = e_last * q / (1.0 - q);
    report.convergent_square_integral = report.square_tail_estimate <= 1e-6;
  }
  return report;
}

// ---------------------------------------------------------------------------

ObservationIncrement::ObservationIncrement(double t_, Vec x_, Vec dx_, Mat dqv_, double dt_)
    : t(t_), x(std::move(x_)), dx(std::move(dx_)), dqv(std::move(dqv_)), dt(dt_) {
  if (!(dt > 0.0)) throw DomainError("ObservationIncrement: dt must be positive");
  if (x.size() != dx.size()) throw DimensionError("ObservationIncrement: x and dx sizes differ");
  if (dqv.size() == 0) return;
  if (dqv.rows() != x.size() || dqv.cols() != x.size()) {
    throw DimensionError("ObservationIncrement: dqv must be m x m");
  }
  const double scale = std::max(1.0, dqv.cwiseAbs().maxCoeff());
  if ((dqv - dqv.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("ObservationIncrement: dqv is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(dqv, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw DomainError("ObservationIncrement: dqv is not positive semidefinite");
  }
}

OnlineEstimator::OnlineEstimator(const DriftModel& drift, const VolatilityModel* vol,
                                 LearningRateSchedule schedule, PreconditionMode mode,
                                 const Mat& sigma_sigmaT)
    : drift_(drift), vol_(vol), schedule_(std::move(schedule)), mode_(mode) {
  const Eigen::Index m = drift_.state_dim();
  const Eigen::Index n = drift_.param_dim();
  if (mode_ == PreconditionMode::InverseSigmaSigmaT) {
    if (sigma_sigmaT.rows() != m || sigma_sigmaT.cols() != m) {
      throw DimensionError("OnlineEstimator: sigma_sigmaT must be m x m");
    }
    Eigen::FullPivLU<Mat> lu(sigma_sigmaT);
    if (!lu.isInvertible()) throw PreconditionerError("sigma sigma^T is singular");
    precond_ = lu.inverse();
    if (!precond_.allFinite()) throw PreconditionerError("sigma sigma^T inverse is not finite");
    if (precond_.isDiagonal(0.0)) precond_diag_ = precond_.diagonal();
  }
  f_.resize(m);
  resid_.resize(m);
  weighted_.resize(m);
  jac_.resize(m, n);
  if (vol_ != nullptr) {
    if (vol_->state_dim() != m) throw DimensionError("volatility model state dimension mismatch");
    sst_.resize(m, m);
    vol_grad_.resize(m * m, vol_->param_dim());
    qv_resid_.resize(m * m);
  }
}

void OnlineEstimator::drift_update(SgdctState& state, const IncrementView& obs, double alpha) {
  if (obs.x.size() != drift_.state_dim() || obs.dx.size() != drift_.state_dim()) {
    throw DimensionError("drift update: observation dimension does not match model");
  }
  if (state.theta.size() != drift_.param_dim()) {
    throw DimensionError("drift update: theta dimension does not match model");
  }
  drift_.eval(obs.x, state.theta, f_, jac_);
  resid_.noalias() = obs.dx - f_ * obs.dt;
  if (mode_ == PreconditionMode::InverseSigmaSigmaT) {
    if (precond_diag_.size() > 0) {
      weighted_ = precond_diag_.cwiseProduct(resid_);
    } else {
      weighted_.noalias() = precond_ * resid_;
    }
    state.theta.noalias() += alpha * (jac_.transpose() * weighted_);
  } else {
    state.theta.noalias() += alpha * (jac_.transpose() * resid_);
  }
  if (!state.theta.allFinite()) {
    throw DivergenceError("theta became non-finite", state.step_count, obs.t);
  }
}

void OnlineEstimator::diffusion_update(SgdctState& state, const IncrementView& obs, double alpha) {
  if (vol_ == nullptr || obs.dqv == nullptr) return;
  const Eigen::Index m = vol_->state_dim();
  if (obs.dqv->rows() != m || obs.dqv->cols() != m) {
    throw DimensionError("diffusion update: dqv dimension does not match model");
  }
  if (state.nu.size() != vol_->param_dim()) {
    throw DimensionError("diffusion update: nu dimension does not match model");
  }
  vol_->eval(obs.x, state.nu, sst_, vol_grad_);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      qv_resid_[i + m * j] = (*obs.dqv)(i, j) - sst_(i, j) * obs.dt;
    }
  }
  state.nu.noalias() += alpha * (vol_grad_.transpose() * qv_resid_);
  if (!state.nu.allFinite()) {
    throw DivergenceError("nu became non-finite", state.step_count, obs.t);
  }
}

void OnlineEstimator::update(SgdctState& state, const IncrementView& obs) {
  const double alpha = learning_rate(schedule_, state.t);
  if (vol_ != nullptr && obs.dqv != nullptr) {
    // nu uses the pre-update state, so update it first; it does not read theta.
    diffusion_update(state, obs, diffusion_schedule_ ? learning_rate(*diffusion_schedule_, state.t) : alpha);
  }
  drift_update(state, obs, alpha);
  state.t += obs.dt;
  ++state.step_count;
}

namespace {

IncrementView view_of(const ObservationIncrement& obs) {
  return IncrementView{obs.t, obs.x, obs.dx, obs.dqv.size() == 0 ? nullptr : &obs.dqv, obs.dt};
}

}  // namespace

SgdctState drift_step(const SgdctState& state, const DriftModel& model, const Mat& sigma_sigmaT,
                      const ObservationIncrement& obs, const LearningRateSchedule& schedule) {
  OnlineEstimator est(model, nullptr, schedule, state.precondition_mode, sigma_sigmaT);
  SgdctState next = state;
  est.drift_update(next, view_of(obs), learning_rate(schedule, state.t));
  next.t += obs.dt;
  ++next.step_count;
  return next;
}

namespace {

// Zero-parameter drift, so the estimator can run diffusion-only updates.
class NullDrift final : public DriftModel {
 public:
  explicit NullDrift(Eigen::Index m) : m_(m) {}
  Eigen::Index state_dim() const override { return m_; }
  Eigen::Index param_dim() const override { return 0; }
  void eval(const Eigen::Ref<const Vec>&, const Eigen::Ref<const Vec>&, Eigen::Ref<Vec> f,
            Eigen::Ref<Mat>) const override {
    f.setZero();
  }

 private:
  Eigen::Index m_;
};

}  // namespace

SgdctState diffusion_step(const SgdctState& state, const VolatilityModel& model,
                          const ObservationIncrement& obs, const LearningRateSchedule& schedule) {
  if (obs.x.size() != model.state_dim()) {
    throw DimensionError("diffusion_step: observation dimension does not match model");
  }
  if (obs.dqv.size() == 0) throw DomainError("diffusion_step: increment carries no dqv");
  NullDrift null_drift(model.state_dim());
  OnlineEstimator est(null_drift, &model, schedule, PreconditionMode::Identity);
  SgdctState next = state;
  est.diffusion_update(next, view_of(obs), learning_rate(schedule, state.t));
  next.t += obs.dt;
  ++next.step_count;
  return next;
}

std::vector<TrajectoryPoint> run_online(const ObservationStream& stream, const DriftModel& model,
                                        const VolatilityModel* vol_model, const Mat& sigma_sigmaT,
                                        const LearningRateSchedule& schedule, const SgdctState& init,
                                        const RunOptions& options) {
  std::vector<TrajectoryPoint> trajectory;
  trajectory.push_back({init.t, init.theta, init.nu});
  if (stream.empty()) return trajectory;

  OnlineEstimator est(model, vol_model, schedule, init.precondition_mode, sigma_sigmaT);
  SgdctState state = init;
  std::size_t next_sample = 0;
  std::vector<double> samples = options.sample_times;
  std::sort(samples.begin(), samples.end());

  double last_t = -std::numeric_limits<double>::infinity();
  for (const auto& obs : stream) {
    if (!(obs.t > last_t)) throw DomainError("run_online: stream times must be strictly increasing");
    last_t = obs.t;
    est.update(state, view_of(obs));
    bool sampled = false;
    while (next_sample < samples.size() && state.t >= samples[next_sample] - 1e-9 * std::max(1.0, samples[next_sample])) {
      if (!sampled) {
        trajectory.push_back({state.t, state.theta, state.nu});
        if (options.on_sample) options.on_sample(state);
        sampled = true;
      }
      ++next_sample;
    }
  }
  if (trajectory.back().t != state.t || trajectory.size() == 1) {
    trajectory.push_back({state.t, state.theta, state.nu});
  }
  return trajectory;
}

}  // namespace sgdct::core
