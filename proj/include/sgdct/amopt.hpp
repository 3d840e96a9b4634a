#pragma once

// Continuous-time value learning and the American-option trainer.
//
// The option value surface Q(t, x) is a scalar tanh ShallowNet on (t, x).
// Training minimizes the generator residual dQ/dt + L_x Q - r Q along
// simulated paths up to the first time Q < g, and matches Q to the payoff
// at the stopping time.

#include <cstdint>
#include <functional>
#include <optional>

#include "sgdct/approx.hpp"
#include "sgdct/core.hpp"
#include "sgdct/linalg.hpp"
#include "sgdct/sim.hpp"

namespace sgdct::amopt {

enum class Dynamics { Bachelier, BlackScholes };
enum class Payoff { ArithmeticBasketCall, GeometricBasketCall };

struct OptionSpec {
  Eigen::Index d = 1;
  Dynamics dynamics = Dynamics::BlackScholes;
  double r = 0.0;
  double c = 0.0;  ///< dividend rate
  Vec sigma;       ///< per-asset volatility
  Mat rho;         ///< correlation, unit diagonal
  double K = 1.0;
  double T = 1.0;
  Payoff payoff = Payoff::ArithmeticBasketCall;
  Vec x0;

  /// d identical assets with pairwise correlation `rho`.
  static OptionSpec identical(Eigen::Index d, Dynamics dyn, double r, double c, double sigma, double rho,
                              double K, double T, Payoff payoff, double x0);
  /// Throws DomainError for T <= 0, negative sigma or an invalid correlation.
  void validate() const;
};

double payoff(const OptionSpec& spec, const Eigen::Ref<const Vec>& x);

/// Q(t, x) as a scalar tanh net with input (t, x_1..x_d).
struct QSurface {
  approx::ShallowNet net;

  QSurface() = default;
  explicit QSurface(approx::ShallowNet n);

  template <class Rng>
  static QSurface random(Eigen::Index d, Eigen::Index hidden, Rng& rng) {
    return QSurface(approx::ShallowNet::random(d + 1, hidden, 1, approx::Activation::Tanh, rng));
  }

  double value(double t, const Eigen::Ref<const Vec>& x) const;
};

struct Residual {
  double residual;
  double q;
  ParamVector grad;
};

/// dQ/dt + sum_i mu_i dQ/dx_i + 1/2 sum_ij (sigma sigma^T rho)_ij d2Q/dx_i dx_j - r Q
/// and its parameter gradient.
Residual generator_residual(const QSurface& q, double t, const Eigen::Ref<const Vec>& x,
                            const OptionSpec& spec);

// ---------------------------------------------------------------------------
// Discounted value of X_t = x + W_t: V(x) = E int e^{-gamma t} r(X_t) dt.

using RewardFn = std::function<double(double)>;

/// theta' = theta - alpha dt (1/2 grad Q_xx - gamma grad Q)(r(x) + 1/2 Q_xx - gamma Q).
/// `net` is a scalar tanh net on x. Throws DivergenceError on non-finite params.
approx::ShallowNet value_learn_step(const approx::ShallowNet& net, double x, double reward, double gamma,
                                    double dt, double alpha);
void value_learn_step_inplace(approx::ShallowNet& net, double x, double reward, double gamma, double dt,
                              double alpha);

/// Discrete Q-learning update without the inner expectation:
/// theta' = theta - (alpha / dt) (e^{-gamma dt} grad Q(x') - grad Q(x))
///                                (r(x) dt + e^{-gamma dt} Q(x') - Q(x)).
approx::ShallowNet biased_q_step(const approx::ShallowNet& net, double x, double x_next, double reward,
                                 double gamma, double dt, double alpha);
void biased_q_step_inplace(approx::ShallowNet& net, double x, double x_next, double reward, double gamma,
                           double dt, double alpha);

// ---------------------------------------------------------------------------
// American option training

struct TrainOptions {
  /// Simulation step as a fraction of T.
  double dt_fraction = 1e-2;
  /// Relative spread of the initial-state law around x0.
  double initial_spread = 0.2;
  /// When false the path always runs to T (European value surface).
  bool early_exercise = true;
  /// Parameters are averaged over the last `average_fraction` of iterations
  /// (0 disables averaging).
  double average_fraction = 0.0;
};

struct TrainResult {
  QSurface q;
  double price = 0.0;  ///< Q(0, x0)
  std::int64_t iterations = 0;
};

/// Learning rate indexed by iteration count n = 1, 2, ...
/// Throws DivergenceError with the iteration index on non-finite parameters.
TrainResult american_train(const OptionSpec& spec, const QSurface& q0, std::int64_t n_iters,
                           const core::LearningRateSchedule& schedule, sim::Rng& rng,
                           const TrainOptions& options = {});

/// Draws X_0 from the initial-state law: lognormal (Black-Scholes) or normal
/// (Bachelier) around x0 with the given relative spread, independently per asset.
Vec sample_initial_state(const OptionSpec& spec, double spread, sim::Rng& rng);

/// One step of the asset dynamics. Black-Scholes uses the exact lognormal step.
void advance_state(const OptionSpec& spec, Eigen::Ref<Vec> x, double dt, const Eigen::Ref<const Vec>& dW);

struct StoppedPath {
  double tau;  ///< first grid time with Q < g, else T
  bool exercised;
  Vec x_tau;
  std::vector<double> t;
  std::vector<Vec> x;
};

/// Simulates one path under `spec` from `x_start` and applies the stopping rule of `q`.
StoppedPath stopped_path(const OptionSpec& spec, const QSurface& q, const Vec& x_start, double dt,
                         sim::Rng& rng);

// ---------------------------------------------------------------------------
// Oracles and reductions

enum class OptionKind { Call, Put };

/// Cox-Ross-Rubinstein tree with continuous dividend yield and early exercise.
double binomial_american(double s0, double K, double r, double c, double sigma, double T, int n_steps,
                         OptionKind kind);
/// Same tree without early exercise.
double binomial_european(double s0, double K, double r, double c, double sigma, double T, int n_steps,
                         OptionKind kind);

/// Closed-form Black-Scholes European price with dividend yield c.
double black_scholes_european(double s0, double K, double r, double c, double sigma, double T,
                              OptionKind kind);

/// 1-d effective spec for a geometric basket of identical, equicorrelated
/// Black-Scholes assets: sigma_g = sigma sqrt((1 + (d-1) rho) / d) and
/// dividend c_g = c + (sigma^2 - sigma_g^2) / 2, so the geometric mean is a
/// 1-d GBM. Throws DomainError otherwise.
OptionSpec geometric_reduce(const OptionSpec& spec);

}  // namespace sgdct::amopt
