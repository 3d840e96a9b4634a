#include "sgdct/cartpole.hpp"

#include <cmath>
#include <ostream>

#include "sgdct/error.hpp"
#include "sgdct/format.hpp"

namespace sgdct::cartpole {

Vec CartPoleState::to_vec() const {
  Vec v(4);
  v << x, x_dot, beta, beta_dot;
  return v;
}

CartPoleState CartPoleState::from_vec(const Eigen::Ref<const Vec>& v) {
  if (v.size() != 4) throw DimensionError("CartPoleState: expected 4 components");
  return {v[0], v[1], v[2], v[3]};
}

bool alive(const CartPoleState& s) { return std::abs(s.x) <= kXLimit && std::abs(s.beta) <= kBetaLimit; }

PhysicsParams PhysicsParams::frictionless() {
  PhysicsParams p;
  p.mu_c = 0.0;
  p.mu_p = 0.0;
  return p;
}

void PhysicsParams::validate() const {
  if (!(m_c > 0.0 && m > 0.0 && l > 0.0)) throw DomainError("PhysicsParams: masses and length must be positive");
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

StateDerivs cartpole_derivs(const CartPoleState& s, double force, const PhysicsParams& p) {
  const double total = p.m_c + p.m;
  const double sb = std::sin(s.beta), cb = std::cos(s.beta);
  const double friction = p.mu_c * sgn(s.x_dot);
  const double inner = (-force - p.m * p.l * s.beta_dot * s.beta_dot * sb + friction) / total;
  const double mass_ratio = p.literal_denominator ? p.m / p.m_c : p.m;
  const double denom = p.l * (4.0 / 3.0 - mass_ratio * cb * cb / total);
  const double beta_ddot = (p.g * sb + cb * inner - p.mu_p * s.beta_dot / (p.m * p.l)) / denom;
  const double x_ddot =
      (force + p.m * p.l * (s.beta_dot * s.beta_dot * sb - beta_ddot * cb) - friction) / total;
  return {s.x_dot, x_ddot, s.beta_dot, beta_ddot};
}

// ---------------------------------------------------------------------------

void model_learn_step_inplace(approx::ShallowNet& net, const Eigen::Ref<const Vec>& s,
                              const Eigen::Ref<const Vec>& s_dot, double dt, double alpha) {
  if (alpha == 0.0) return;
  if (s.size() != 4 || s_dot.size() != 4 || net.n_in() != 4 || net.n_out() != 4) {
    throw DimensionError("model_learn_step: expected a 4 -> 4 model");
  }
  const Vec f = approx::net_eval(net, s);
  const Mat jac = approx::net_param_grad(net, s);
  net.add_to_params(alpha * dt * (jac.transpose() * (s_dot - f)));
  if (!net.params().allFinite()) throw DivergenceError("model_learn_step: parameters became non-finite", -1, 0.0);
}

approx::ShallowNet model_learn_step(const approx::ShallowNet& net, const Eigen::Ref<const Vec>& s,
                                    const Eigen::Ref<const Vec>& s_dot, double dt, double alpha) {
  approx::ShallowNet out = net;
  model_learn_step_inplace(out, s, s_dot, dt, alpha);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double logistic(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

double policy_prob(const SoftmaxPolicy& policy, const Eigen::Ref<const Vec>& s) {
  return logistic(approx::net_eval(policy.net, s)[0]);
}

std::vector<double> discounted_returns(const Episode& episode, double gamma, bool normalize) {
  const std::size_t n = episode.steps.size();
  std::vector<double> R(n, 0.0);
  double acc = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    acc = gamma * (episode.steps[k].reward + acc);
    R[k] = acc;
  }
  if (normalize && n > 0) {
    double mean = 0.0;
    for (double v : R) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : R) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& v : R) v = sd > 1e-12 ? (v - mean) / sd : 0.0;
  }
  return R;
}

void policy_gradient_update_inplace(SoftmaxPolicy& policy, const Episode& episode, double gamma, double eta,
                                    bool normalize) {
  if (episode.steps.empty()) throw DomainError("policy_gradient_update: episode is empty");
  if (eta == 0.0) return;
  const std::vector<double> R = discounted_returns(episode, gamma, normalize);
  ParamVector step = ParamVector::Zero(policy.net.param_count());
  for (std::size_t k = 0; k < R.size(); ++k) {
    if (R[k] == 0.0) continue;
    const Transition& tr = episode.steps[k];
    const double p = policy_prob(policy, tr.s);
    const double dlog = tr.action > 0.0 ? 1.0 - p : -p;
    step += (R[k] * dlog) * approx::net_param_grad(policy.net, tr.s).row(0).transpose();
  }
  policy.net.add_to_params(eta * step);
}

SoftmaxPolicy policy_gradient_update(const SoftmaxPolicy& policy, const Episode& episode, double gamma,
                                     double eta, bool normalize) {
  SoftmaxPolicy out = policy;
  policy_gradient_update_inplace(out, episode, gamma, eta, normalize);
  return out;
}

// ---------------------------------------------------------------------------

Episode run_episode(const SoftmaxPolicy& policy, const PhysicsParams& physics, sim::Rng& rng,
                    const EpisodeOptions& options) {
  if (options.mode == EpisodeMode::Model && options.model == nullptr) {
    throw DomainError("run_episode: model mode needs a dynamics model");
  }
  const int substeps = static_cast<int>(std::lround(kControlInterval / kEulerStep));
  Episode ep;
  CartPoleState s;
  if (options.start != nullptr) {
    s = *options.start;
  } else {
    const double w = options.init_half_width;
    s = CartPoleState{rng.uniform(-w, w), rng.uniform(-w, w), rng.uniform(-w, w), rng.uniform(-w, w)};
  }
  if (!alive(s)) {
    ep.reward = -100.0;
    ep.failed = true;
    return ep;
  }
  Vec sv = s.to_vec();
  Vec sdot(4);
  for (int interval = 0; interval < options.max_intervals; ++interval) {
    const double u = rng.uniform(0.0, 1.0);
    const double action = (options.always_push_right || u < policy_prob(policy, sv)) ? kForce : -kForce;
    Transition tr{sv, action, 1.0};
    bool failed = false;
    for (int k = 0; k < substeps; ++k) {
      if (options.mode == EpisodeMode::Real) {
        const StateDerivs d = cartpole_derivs(CartPoleState::from_vec(sv), action, physics);
        sdot << d.x_dot, d.x_ddot, d.beta_dot, d.beta_ddot;
        if (options.learner != nullptr) {
          model_learn_step_inplace(options.learner->for_force(action), sv, sdot, kEulerStep, options.learn_rate);
        }
      } else {
        sdot = approx::net_eval(options.model->for_force(action), sv);
      }
      sv += sdot * kEulerStep;
      if (!sv.allFinite() || !alive(CartPoleState::from_vec(sv))) {
        failed = true;
        break;
      }
    }
    if (failed) {
      tr.reward = -100.0;
      ep.steps.push_back(std::move(tr));
      ep.reward += -100.0;
      ep.failed = true;
      break;
    }
    ep.steps.push_back(std::move(tr));
    ep.reward += 1.0;
    ++ep.intervals;
  }
  ep.alive_time = ep.intervals * kControlInterval;
  return ep;
}

LoopResult run_learning_loop(const LoopConfig& config, const PhysicsParams& physics, sim::Rng& rng) {
  physics.validate();
  LoopResult result;
  result.model = DynamicsModel::random(config.model_hidden, rng);
  result.policy = SoftmaxPolicy::random(config.policy_hidden, rng);

  EpisodeOptions real;
  real.mode = EpisodeMode::Real;
  real.max_intervals = config.max_intervals;
  real.learner = config.model_based ? &result.model : nullptr;
  real.learn_rate = config.learn_rate;

  EpisodeOptions simulated;
  simulated.mode = EpisodeMode::Model;
  simulated.max_intervals = config.sim_max_intervals;
  simulated.model = &result.model;

  for (int e = 1; e <= config.n_episodes; ++e) {
    const Episode ep = run_episode(result.policy, physics, rng, real);
    result.episodes.push_back({e, ep.reward, static_cast<int>(ep.steps.size()), ep.alive_time});
    if (result.episodes_to_target < 0 && ep.reward >= config.target_reward) {
      result.episodes_to_target = e;
      if (config.stop_at_target) break;
    }
    if (config.model_based) {
      if (e % config.policy_every == 0) {
        for (int k = 0; k < config.sim_episodes; ++k) {
          const Episode sim_ep = run_episode(result.policy, physics, rng, simulated);
          if (!sim_ep.steps.empty()) policy_gradient_update_inplace(result.policy, sim_ep, config.gamma, config.eta);
        }
      }
    } else if (!ep.steps.empty()) {
      policy_gradient_update_inplace(result.policy, ep, config.gamma, config.eta);
    }
  }
  return result;
}

void write_episode_csv(std::ostream& out, const LoopResult& result) {
  out << "episode,reward,steps,alive_time\n";
  for (const EpisodeSummary& e : result.episodes) {
    out << e.episode << ',' << format_double(e.reward) << ',' << e.steps << ',' << format_double(e.alive_time)
        << '\n';
  }
}

}  // namespace sgdct::cartpole
