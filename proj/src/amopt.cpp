#include "sgdct/amopt.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sgdct/error.hpp"

namespace sgdct::amopt {

OptionSpec OptionSpec::identical(Eigen::Index d, Dynamics dyn, double r, double c, double sigma, double rho,
                                 double K, double T, Payoff payoff, double x0) {
  OptionSpec s;
  s.d = d;
  s.dynamics = dyn;
  s.r = r;
  s.c = c;
  s.sigma = Vec::Constant(d, sigma);
  s.rho = Mat::Constant(d, d, rho);
  s.rho.diagonal().setOnes();
  s.K = K;
  s.T = T;
  s.payoff = payoff;
  s.x0 = Vec::Constant(d, x0);
  return s;
}

void OptionSpec::validate() const {
  if (d < 1) throw DomainError("OptionSpec: d must be >= 1");
  if (!(T > 0.0)) throw DomainError("OptionSpec: T must be positive");
  if (sigma.size() != d || x0.size() != d || rho.rows() != d || rho.cols() != d) {
    throw DimensionError("OptionSpec: sigma, x0 and rho must match d");
  }
  if ((sigma.array() < 0.0).any()) throw DomainError("OptionSpec: sigma must be nonnegative");
  // Throws FactorizationError for a non-PSD or non-unit-diagonal matrix.
  sim::CorrelatedBrownian check(sim::BrownianSpec{d, rho});
  (void)check;
}

double payoff(const OptionSpec& spec, const Eigen::Ref<const Vec>& x) {
  double level = 0.0;
  if (spec.payoff == Payoff::ArithmeticBasketCall) {
    level = x.mean();
  } else {
    double log_sum = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] <= 0.0) return 0.0;
      log_sum += std::log(x[i]);
    }
    level = std::exp(log_sum / static_cast<double>(x.size()));
  }
  return std::max(level - spec.K, 0.0);
}

QSurface::QSurface(approx::ShallowNet n) : net(std::move(n)) {
  if (net.activation != approx::Activation::Tanh || net.n_out() != 1) {
    throw UnsupportedDerivativeError("QSurface requires a scalar tanh network");
  }
}

double QSurface::value(double t, const Eigen::Ref<const Vec>& x) const {
  Vec y(x.size() + 1);
  y[0] = t;
  y.tail(x.size()) = x;
  return approx::net_eval(net, y)[0];
}

namespace {

// Coefficients of the linear functional dQ/dt + L_x Q - r Q on inputs (t, x).
struct GeneratorCoeffs {
  Vec y;
  Vec g;
  Mat H;
};

void fill_generator(const OptionSpec& spec, double t, const Eigen::Ref<const Vec>& x, GeneratorCoeffs& out) {
  const Eigen::Index d = spec.d;
  out.y[0] = t;
  out.y.tail(d) = x;
  out.g[0] = 1.0;
  out.H.setZero();
  for (Eigen::Index i = 0; i < d; ++i) {
    const bool bs = spec.dynamics == Dynamics::BlackScholes;
    out.g[1 + i] = bs ? (spec.r - spec.c) * x[i] : (spec.r - spec.c);
    for (Eigen::Index j = 0; j < d; ++j) {
      double a = spec.sigma[i] * spec.sigma[j] * spec.rho(i, j);
      if (bs) a *= x[i] * x[j];
      out.H(1 + i, 1 + j) = 0.5 * a;
    }
  }
}

GeneratorCoeffs make_coeffs(Eigen::Index d) {
  return {Vec::Zero(d + 1), Vec::Zero(d + 1), Mat::Zero(d + 1, d + 1)};
}

}  // namespace

Residual generator_residual(const QSurface& q, double t, const Eigen::Ref<const Vec>& x,
                            const OptionSpec& spec) {
  if (x.size() != spec.d || q.net.n_in() != spec.d + 1) {
    throw DimensionError("generator_residual: dimension mismatch");
  }
  GeneratorCoeffs co = make_coeffs(spec.d);
  fill_generator(spec, t, x, co);
  auto fv = approx::net_functional(q.net, co.y, -spec.r, co.g, co.H);
  return {fv.value, fv.q, std::move(fv.grad)};
}

// ---------------------------------------------------------------------------

void value_learn_step_inplace(approx::ShallowNet& net, double x, double reward, double gamma, double dt,
                              double alpha) {
  if (net.n_in() != 1) throw DimensionError("value_learn_step: network input must be 1-d");
  const Vec xv = Vec::Constant(1, x);
  const Vec g = Vec::Zero(1);
  const Mat H = Mat::Constant(1, 1, 0.5);
  const auto fv = approx::net_functional(net, xv, -gamma, g, H);
  const double inner = reward + fv.value;
  net.add_to_params(-alpha * dt * inner * fv.grad);
  if (!net.params().allFinite()) throw DivergenceError("value learner parameters became non-finite", -1, 0.0);
}

approx::ShallowNet value_learn_step(const approx::ShallowNet& net, double x, double reward, double gamma,
                                    double dt, double alpha) {
  approx::ShallowNet out = net;
  value_learn_step_inplace(out, x, reward, gamma, dt, alpha);
  return out;
}

void biased_q_step_inplace(approx::ShallowNet& net, double x, double x_next, double reward, double gamma,
                           double dt, double alpha) {
  if (net.n_in() != 1) throw DimensionError("biased_q_step: network input must be 1-d");
  if (alpha == 0.0) return;
  const Vec x0 = Vec::Constant(1, x);
  const Vec x1 = Vec::Constant(1, x_next);
  const double disc = std::exp(-gamma * dt);
  const double q0 = approx::net_eval(net, x0)[0];
  const double q1 = approx::net_eval(net, x1)[0];
  const Vec g0 = approx::net_param_grad(net, x0).row(0).transpose();
  const Vec g1 = approx::net_param_grad(net, x1).row(0).transpose();
  const double td = reward * dt + disc * q1 - q0;
  net.add_to_params(-(alpha / dt) * td * (disc * g1 - g0));
}

approx::ShallowNet biased_q_step(const approx::ShallowNet& net, double x, double x_next, double reward,
                                 double gamma, double dt, double alpha) {
  approx::ShallowNet out = net;
  biased_q_step_inplace(out, x, x_next, reward, gamma, dt, alpha);
  return out;
}

// ---------------------------------------------------------------------------

Vec sample_initial_state(const OptionSpec& spec, double spread, sim::Rng& rng) {
  Vec x(spec.d);
  for (Eigen::Index i = 0; i < spec.d; ++i) {
    const double z = rng.normal();
    if (spec.dynamics == Dynamics::BlackScholes) {
      x[i] = spec.x0[i] * std::exp(spread * z - 0.5 * spread * spread);
    } else {
      x[i] = spec.x0[i] * (1.0 + spread * z);
    }
  }
  return x;
}

void advance_state(const OptionSpec& spec, Eigen::Ref<Vec> x, double dt, const Eigen::Ref<const Vec>& dW) {
  for (Eigen::Index i = 0; i < spec.d; ++i) {
    const double s = spec.sigma[i];
    if (spec.dynamics == Dynamics::BlackScholes) {
      x[i] *= std::exp((spec.r - spec.c - 0.5 * s * s) * dt + s * dW[i]);
    } else {
      x[i] += (spec.r - spec.c) * dt + s * dW[i];
    }
  }
}

TrainResult american_train(const OptionSpec& spec, const QSurface& q0, std::int64_t n_iters,
                           const core::LearningRateSchedule& schedule, sim::Rng& rng,
                           const TrainOptions& options) {
  spec.validate();
  if (q0.net.n_in() != spec.d + 1) throw DimensionError("american_train: surface input must be (t, x)");
  TrainResult result{q0, 0.0, 0};
  approx::ShallowNet& net = result.q.net;

  const int n_steps = std::max(1, static_cast<int>(std::lround(1.0 / options.dt_fraction)));
  const double dt = spec.T / n_steps;
  const sim::CorrelatedBrownian brownian(sim::BrownianSpec{spec.d, spec.rho});
  GeneratorCoeffs co = make_coeffs(spec.d);
  const Vec zero_g = Vec::Zero(spec.d + 1);
  const Mat zero_h = Mat::Zero(spec.d + 1, spec.d + 1);
  Vec dW(spec.d), scratch(spec.d);

  const std::int64_t avg_start =
      options.average_fraction > 0.0
          ? n_iters - static_cast<std::int64_t>(std::ceil(options.average_fraction * static_cast<double>(n_iters)))
          : n_iters;
  ParamVector avg = ParamVector::Zero(net.param_count());
  std::int64_t avg_count = 0;

  for (std::int64_t n = 1; n <= n_iters; ++n) {
    const double alpha = core::learning_rate(schedule, static_cast<double>(n));
    Vec x = sample_initial_state(spec, options.initial_spread, rng);
    int k = 0;
    for (; k < n_steps; ++k) {
      const double t = dt * k;
      fill_generator(spec, t, x, co);
      const auto fv = approx::net_functional(net, co.y, -spec.r, co.g, co.H);
      if (options.early_exercise && fv.q < payoff(spec, x)) break;
      net.add_to_params(-alpha * dt * fv.value * fv.grad);
      brownian.increments_into(dt, rng, dW, scratch);
      advance_state(spec, x, dt, dW);
    }
    // Payoff matching at tau ^ T.
    co.y[0] = dt * k;
    co.y.tail(spec.d) = x;
    const auto qv = approx::net_functional(net, co.y, 1.0, zero_g, zero_h);
    net.add_to_params(alpha * (payoff(spec, x) - qv.q) * qv.grad);
    if (!net.b2.allFinite() || !net.W2.allFinite() || !net.W1.allFinite() || !net.b1.allFinite()) {
      throw DivergenceError("american_train: parameters became non-finite", n, 0.0);
    }
    if (n > avg_start) {
      avg += net.params();
      ++avg_count;
    }
    result.iterations = n;
  }
  if (avg_count > 0) net.set_params(avg / static_cast<double>(avg_count));
  result.price = result.q.value(0.0, spec.x0);
  return result;
}

StoppedPath stopped_path(const OptionSpec& spec, const QSurface& q, const Vec& x_start, double dt,
                         sim::Rng& rng) {
  const sim::CorrelatedBrownian brownian(sim::BrownianSpec{spec.d, spec.rho});
  const int n_steps = std::max(1, static_cast<int>(std::lround(spec.T / dt)));
  const double h = spec.T / n_steps;
  StoppedPath path{spec.T, false, x_start, {}, {}};
  Vec x = x_start;
  Vec dW(spec.d), scratch(spec.d);
  for (int k = 0; k <= n_steps; ++k) {
    const double t = h * k;
    path.t.push_back(t);
    path.x.push_back(x);
    if (q.value(t, x) < payoff(spec, x)) {
      path.tau = t;
      path.exercised = true;
      path.x_tau = x;
      return path;
    }
    if (k == n_steps) break;
    brownian.increments_into(h, rng, dW, scratch);
    advance_state(spec, x, h, dW);
  }
  path.x_tau = x;
  return path;
}

// ---------------------------------------------------------------------------

namespace {

double exercise_value(double s, double K, OptionKind kind) {
  return kind == OptionKind::Call ? std::max(s - K, 0.0) : std::max(K - s, 0.0);
}

double crr(double s0, double K, double r, double c, double sigma, double T, int n, OptionKind kind,
           bool american) {
  if (n < 1) throw DomainError("binomial: n_steps must be >= 1");
  if (sigma < 0.0) throw DomainError("binomial: sigma must be nonnegative");
  const double dt = T / n;
  if (sigma == 0.0) {
    // Deterministic path; the holder picks the best grid exercise time.
    double best = std::exp(-r * T) * exercise_value(s0 * std::exp((r - c) * T), K, kind);
    if (american) {
      for (int k = 0; k < n; ++k) {
        const double t = dt * k;
        best = std::max(best, std::exp(-r * t) * exercise_value(s0 * std::exp((r - c) * t), K, kind));
      }
    }
    return best;
  }
  const double u = std::exp(sigma * std::sqrt(dt));
  const double dn = 1.0 / u;
  const double p = (std::exp((r - c) * dt) - dn) / (u - dn);
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial: risk-neutral probability outside [0, 1]");
  const double disc = std::exp(-r * dt);
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    v[j] = exercise_value(s0 * std::pow(u, 2 * j - n), K, kind);
  }
  for (int step = n - 1; step >= 0; --step) {
    for (int j = 0; j <= step; ++j) {
      double cont = disc * (p * v[j + 1] + (1.0 - p) * v[j]);
      if (american) cont = std::max(cont, exercise_value(s0 * std::pow(u, 2 * j - step), K, kind));
      v[j] = cont;
    }
  }
  return v[0];
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double binomial_american(double s0, double K, double r, double c, double sigma, double T, int n_steps,
                         OptionKind kind) {
  return crr(s0, K, r, c, sigma, T, n_steps, kind, true);
}

double binomial_european(double s0, double K, double r, double c, double sigma, double T, int n_steps,
                         OptionKind kind) {
  return crr(s0, K, r, c, sigma, T, n_steps, kind, false);
}

double black_scholes_european(double s0, double K, double r, double c, double sigma, double T,
                              OptionKind kind) {
  const double fwd_disc = s0 * std::exp(-c * T);
  const double k_disc = K * std::exp(-r * T);
  if (sigma == 0.0 || T == 0.0) {
    return kind == OptionKind::Call ? std::max(fwd_disc - k_disc, 0.0) : std::max(k_disc - fwd_disc, 0.0);
  }
  const double vol = sigma * std::sqrt(T);
  const double d1 = (std::log(s0 / K) + (r - c + 0.5 * sigma * sigma) * T) / vol;
  const double d2 = d1 - vol;
  if (kind == OptionKind::Call) return fwd_disc * norm_cdf(d1) - k_disc * norm_cdf(d2);
  return k_disc * norm_cdf(-d2) - fwd_disc * norm_cdf(-d1);
}

OptionSpec geometric_reduce(const OptionSpec& spec) {
  spec.validate();
  if (spec.dynamics != Dynamics::BlackScholes) throw DomainError("geometric_reduce: needs Black-Scholes dynamics");
  if (spec.payoff != Payoff::GeometricBasketCall && spec.d > 1) {
    throw DomainError("geometric_reduce: needs a geometric basket payoff");
  }
  const double sigma = spec.sigma[0];
  const double rho = spec.d > 1 ? spec.rho(0, 1) : 1.0;
  for (Eigen::Index i = 0; i < spec.d; ++i) {
    if (spec.sigma[i] != sigma || spec.x0[i] != spec.x0[0]) {
      throw DomainError("geometric_reduce: assets are not identical");
    }
    for (Eigen::Index j = 0; j < spec.d; ++j) {
      if (i != j && spec.rho(i, j) != rho) throw DomainError("geometric_reduce: correlation is not constant");
    }
  }
  const double dd = static_cast<double>(spec.d);
  const double sigma_g = spec.d == 1 ? sigma : sigma * std::sqrt((1.0 + (dd - 1.0) * rho) / dd);
  OptionSpec out = OptionSpec::identical(1, Dynamics::BlackScholes, spec.r,
                                         spec.c + 0.5 * (sigma * sigma - sigma_g * sigma_g), sigma_g, 1.0,
                                         spec.K, spec.T, Payoff::ArithmeticBasketCall, spec.x0[0]);
  return out;
}

}  // namespace sgdct::amopt
