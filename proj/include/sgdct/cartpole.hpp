#pragma once

// Cart-pole benchmark: physics, an SGDCT-learned dynamics model, a logistic
// policy trained by policy gradient, and the episode loop.

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <vector>

#include "sgdct/approx.hpp"
#include "sgdct/linalg.hpp"
#include "sgdct/sim.hpp"

namespace sgdct::cartpole {

inline constexpr double kForce = 10.0;
inline constexpr double kControlInterval = 0.02;
inline constexpr double kEulerStep = 1e-3;
inline constexpr double kXLimit = 2.4;
inline constexpr double kBetaLimit = 24.0 * std::numbers::pi / 360.0;

struct CartPoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double beta = 0.0;
  double beta_dot = 0.0;

  Vec to_vec() const;
  static CartPoleState from_vec(const Eigen::Ref<const Vec>& v);
};

/// |x| <= 2.4 and |beta| <= 24 pi / 360.
bool alive(const CartPoleState& s);

struct PhysicsParams {
  double g = 9.8;
  double m_c = 1.0;
  double m = 0.1;
  double l = 0.5;  ///< half pole length
  double mu_c = 0.0005;
  double mu_p = 0.000002;
  /// Use l (4/3 - (m/m_c) cos^2 / (m_c + m)) in the angular denominator
  /// instead of l (4/3 - m cos^2 / (m_c + m)).
  bool literal_denominator = false;

  static PhysicsParams frictionless();
  /// Throws DomainError unless masses and length are positive.
  void validate() const;
};

struct StateDerivs {
  double x_dot;
  double x_ddot;
  double beta_dot;
  double beta_ddot;
};

/// sgn with sgn(0) = 0.
double sgn(double v);

/// Angular acceleration first, then the cart acceleration that uses it.
StateDerivs cartpole_derivs(const CartPoleState& s, double force, const PhysicsParams& p);

// ---------------------------------------------------------------------------

/// Learned vector field: one 4 -> 4 relu net per force value.
struct DynamicsModel {
  approx::ShallowNet minus;  ///< F = -10
  approx::ShallowNet plus;   ///< F = +10

  template <class Rng>
  static DynamicsModel random(Eigen::Index hidden, Rng& rng) {
    return {approx::ShallowNet::random(4, hidden, 4, approx::Activation::Relu, rng),
            approx::ShallowNet::random(4, hidden, 4, approx::Activation::Relu, rng)};
  }

  approx::ShallowNet& for_force(double force) { return force > 0.0 ? plus : minus; }
  const approx::ShallowNet& for_force(double force) const { return force > 0.0 ? plus : minus; }
};

/// theta' = theta + alpha grad f(s) (s_dot dt - f(s) dt). Throws DivergenceError
/// on non-finite parameters.
void model_learn_step_inplace(approx::ShallowNet& net, const Eigen::Ref<const Vec>& s,
                              const Eigen::Ref<const Vec>& s_dot, double dt, double alpha);
approx::ShallowNet model_learn_step(const approx::ShallowNet& net, const Eigen::Ref<const Vec>& s,
                                    const Eigen::Ref<const Vec>& s_dot, double dt, double alpha);

// ---------------------------------------------------------------------------

/// P(F = +10 | s) = logistic(net(s)), relu hidden layer, scalar logit.
struct SoftmaxPolicy {
  approx::ShallowNet net;

  template <class Rng>
  static SoftmaxPolicy random(Eigen::Index hidden, Rng& rng) {
    SoftmaxPolicy p{approx::ShallowNet::random(4, hidden, 1, approx::Activation::Relu, rng)};
    p.net.W2 *= 0.1;
    p.net.b2.setZero();
    return p;
  }
};

double policy_prob(const SoftmaxPolicy& policy, const Eigen::Ref<const Vec>& s);

struct Transition {
  Vec s;
  double action;  ///< +-10
  double reward;  ///< reward received for the interval started at s
};

struct Episode {
  std::vector<Transition> steps;
  double reward = 0.0;
  int intervals = 0;  ///< control intervals survived
  double alive_time = 0.0;
  bool failed = false;
};

/// R_t = sum_{t' > t} gamma^{t' - t} r_{t'}, where r_{t'} is the reward
/// received at the end of interval t' - 1. Returns are standardized across the
/// episode when `normalize` is set.
std::vector<double> discounted_returns(const Episode& episode, double gamma, bool normalize);

/// theta += eta sum_t R_t grad log mu(s_t, a_t).
void policy_gradient_update_inplace(SoftmaxPolicy& policy, const Episode& episode, double gamma, double eta,
                                    bool normalize = true);
SoftmaxPolicy policy_gradient_update(const SoftmaxPolicy& policy, const Episode& episode, double gamma,
                                     double eta, bool normalize = true);

// ---------------------------------------------------------------------------

enum class EpisodeMode { Real, Model };

struct EpisodeOptions {
  EpisodeMode mode = EpisodeMode::Real;
  int max_intervals = 1000;
  /// Vector field integrated in model mode.
  const DynamicsModel* model = nullptr;
  /// In real mode, updated online by model_learn_step at every Euler step.
  DynamicsModel* learner = nullptr;
  double learn_rate = 1.0;
  /// Exploration state draw; episodes start uniform in [-init, init]^4.
  double init_half_width = 0.05;
  /// Starting state override (tests).
  const CartPoleState* start = nullptr;
  /// Forces F = +10 for every interval when set (tests).
  bool always_push_right = false;
};

Episode run_episode(const SoftmaxPolicy& policy, const PhysicsParams& physics, sim::Rng& rng,
                    const EpisodeOptions& options);

// ---------------------------------------------------------------------------

struct LoopConfig {
  bool model_based = true;
  int n_episodes = 100;
  int policy_every = 5;
  int sim_episodes = 50;
  double gamma = 0.99;
  double eta = 1e-2;
  double learn_rate = 1.0;
  Eigen::Index model_hidden = 32;
  Eigen::Index policy_hidden = 16;
  int max_intervals = 1000;
  int sim_max_intervals = 500;
  double target_reward = 100.0;
  /// Stop once the target is first reached.
  bool stop_at_target = false;
};

struct EpisodeSummary {
  int episode;  ///< 1-based
  double reward;
  int steps;
  double alive_time;
};

struct LoopResult {
  std::vector<EpisodeSummary> episodes;
  int episodes_to_target = -1;  ///< 1-based index of the first episode reaching target_reward
  SoftmaxPolicy policy;
  DynamicsModel model;
};

/// Model-based arm: real episodes train the dynamics model online; every
/// `policy_every` real episodes the policy takes one update per simulated
/// episode on the learned model. Direct arm: one update per real episode.
LoopResult run_learning_loop(const LoopConfig& config, const PhysicsParams& physics, sim::Rng& rng);

/// `episode,reward,steps,alive_time`.
void write_episode_csv(std::ostream& out, const LoopResult& result);

}  // namespace sgdct::cartpole
