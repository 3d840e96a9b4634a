#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "sgdct/amopt.hpp"
#include "sgdct/approx.hpp"
#include "sgdct/bench.hpp"
#include "sgdct/cartpole.hpp"
#include "sgdct/error.hpp"
#include "sgdct/format.hpp"
#include "sgdct/models.hpp"
#include "sgdct/sim.hpp"

namespace sgdct::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::int64_t> sample_steps(const ExperimentConfig& c, double dt) {
  std::vector<std::int64_t> out;
  for (double s : c.sample_times) out.push_back(std::llround(s / dt));
  return out;
}

std::string case_file(const std::string& dir, int id) { return dir + "/case_" + std::to_string(id) + ".csv"; }

class PathDump {
 public:
  PathDump(int stride, Eigen::Index m) : stride_(stride) {
    if (stride_ <= 0) return;
    out_ << "t";
    for (Eigen::Index i = 1; i <= m; ++i) out_ << ",x_" << i;
    out_ << '\n';
  }
  void record(std::int64_t k, double t, const Eigen::Ref<const Vec>& x) {
    if (stride_ <= 0 || k % stride_ != 0) return;
    out_ << format_double(t);
    for (Eigen::Index i = 0; i < x.size(); ++i) out_ << ',' << format_double(x[i]);
    out_ << '\n';
  }
  void attach(CaseReport& r) const {
    if (stride_ > 0) r.artifacts.emplace_back(case_file("paths", r.case_id), out_.str());
  }

 private:
  int stride_;
  std::ostringstream out_;
};

std::vector<double> to_std(const Eigen::Ref<const Vec>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// ---------------------------------------------------------------------------

void run_ou1d(const ExperimentConfig& c, sim::Rng& rng, CaseReport& r) {
  const double lo = c.real("theta_lo"), hi = c.real("theta_hi");
  const models::Ou1dParams star{rng.uniform(lo, hi), rng.uniform(lo, hi)};
  models::Ou1dParams init{rng.uniform(lo, hi), rng.uniform(lo, hi)};
  double x = star.m + rng.normal() / std::sqrt(2.0 * star.c);

  const models::Ou1dDrift model;
  core::OnlineEstimator est(model, nullptr, c.schedule, core::PreconditionMode::InverseSigmaSigmaT,
                            Mat::Identity(1, 1));
  core::SgdctState st;
  st.theta = Vec(2);
  st.theta << init.c, init.m;
  const double dt = c.dt;
  const double sdt = std::sqrt(dt);
  const std::int64_t n = std::llround(c.horizon / dt);
  const std::vector<std::int64_t> samples = sample_steps(c, dt);
  std::size_t next = 0;
  PathDump dump(c.path_stride, 1);
  Vec xv(1), dxv(1);

  auto record = [&](std::int64_t k) {
    while (next < samples.size() && samples[next] == k) {
      const double t = c.sample_times[next];
      const models::Ou1dParams est_p{st.theta[0], st.theta[1]};
      add_group_rows(r, t, "theta", {"c", "m"}, {star.c, star.m}, to_std(st.theta));
      const double g = models::ou1d_gbar(est_p, star);
      const double gn = models::ou1d_grad_gbar(est_p, star).norm();
      r.rows.push_back({t, "gbar", 0.0, g, g, kNaN});
      r.rows.push_back({t, "grad_gbar_norm", 0.0, gn, gn, kNaN});
      ++next;
    }
  };
  record(0);
  dump.record(0, 0.0, Vec::Constant(1, x));
  for (std::int64_t k = 0; k < n; ++k) {
    const double x_new = x + star.c * (star.m - x) * dt + sdt * rng.normal();
    xv[0] = x;
    dxv[0] = x_new - x;
    est.update(st, core::IncrementView{dt * static_cast<double>(k), xv, dxv, nullptr, dt});
    x = x_new;
    dump.record(k + 1, dt * static_cast<double>(k + 1), Vec::Constant(1, x));
    record(k + 1);
  }
  dump.attach(r);
}

void run_ou_multi(const ExperimentConfig& c, sim::Rng& rng, CaseReport& r) {
  const Eigen::Index d = c.integer("d");
  if (d < 1) throw ConfigError("model.d must be >= 1");
  const models::OuMultiParams star = models::generate_diag_dominant(d, rng);
  const models::OuMultiParams init = models::generate_diag_dominant(d, rng);
  Vec x = star.A.lu().solve(star.M);

  const models::OuMultiDrift model(d);
  core::OnlineEstimator est(model, nullptr, c.schedule, core::PreconditionMode::InverseSigmaSigmaT,
                            Mat::Identity(d, d));
  core::SgdctState st;
  st.theta = init.flatten();
  const ParamVector truth = star.flatten();
  std::vector<std::string> names;
  for (Eigen::Index i = 1; i <= d; ++i) names.push_back("M_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= d; ++i) {
    for (Eigen::Index j = 1; j <= d; ++j) names.push_back("A_" + std::to_string(i) + "_" + std::to_string(j));
  }

  const double dt = c.dt;
  const double sdt = std::sqrt(dt);
  const std::int64_t n = std::llround(c.horizon / dt);
  const std::vector<std::int64_t> samples = sample_steps(c, dt);
  std::size_t next = 0;
  PathDump dump(c.path_stride, d);
  Vec dx(d), noise(d);
  auto record = [&](std::int64_t k) {
    while (next < samples.size() && samples[next] == k) {
      add_group_rows(r, c.sample_times[next], "theta", names, to_std(truth), to_std(st.theta));
      ++next;
    }
  };
  record(0);
  dump.record(0, 0.0, x);
  for (std::int64_t k = 0; k < n; ++k) {
    rng.fill_normal(noise);
    dx.noalias() = (star.M - star.A * x) * dt;
    dx += sdt * noise;
    est.update(st, core::IncrementView{dt * static_cast<double>(k), x, dx, nullptr, dt});
    x += dx;
    if (!x.allFinite()) throw DivergenceError("ou-multi path became non-finite", k, dt * static_cast<double>(k));
    dump.record(k + 1, dt * static_cast<double>(k + 1), x);
    record(k + 1);
  }
  dump.attach(r);
}

void run_burgers(const ExperimentConfig& c, sim::Rng& rng, CaseReport& r) {
  const double lo = c.real("theta_lo"), hi = c.real("theta_hi");
  const double theta_star = rng.uniform(lo, hi);
  const double theta0 = rng.uniform(lo, hi);
  models::BurgersParams p;
  p.theta = theta_star;
  p.dx_grid = c.real("dx");
  p.n_interior = static_cast<int>(std::lround(1.0 / p.dx_grid)) - 1;
  p.u_left = c.real("u_left");
  p.u_right = c.real("u_right");
  p.sigma_noise = c.real("sigma");
  if (p.n_interior < 1 || !(p.sigma_noise > 0.0)) throw ConfigError("burgers: need dx < 1 and sigma > 0");

  // Simulate and observe at dt / k so the explicit scheme stays stable.
  const int k_sub = sim::burgers_stable_substeps(theta_star, c.dt, p.dx_grid, c.real("max_diffusion_number"));
  const double h = c.dt / k_sub;
  const Eigen::Index m = p.n_interior;
  Vec u(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    u[i] = p.u_left + (p.u_right - p.u_left) * static_cast<double>(i + 1) * p.dx_grid;
  }
  const models::BurgersDrift model(p);
  const Mat sst = Mat::Identity(m, m) * (p.sigma_noise * p.sigma_noise / p.dx_grid);
  core::OnlineEstimator est(model, nullptr, c.schedule, core::PreconditionMode::InverseSigmaSigmaT, sst);
  core::SgdctState st;
  st.theta = Vec::Constant(1, theta0);

  const std::int64_t n = std::llround(c.horizon / h);
  const std::vector<std::int64_t> samples = sample_steps(c, h);
  std::size_t next = 0;
  PathDump dump(c.path_stride, m);
  Vec u_prev(m), du(m), dW(m), f(m), lap(m);
  const double sh = std::sqrt(h);
  auto record = [&](std::int64_t k) {
    while (next < samples.size() && samples[next] == k) {
      add_group_rows(r, c.sample_times[next], "theta", {"theta"}, {theta_star}, {st.theta[0]});
      ++next;
    }
  };
  record(0);
  dump.record(0, 0.0, u);
  for (std::int64_t k = 0; k < n; ++k) {
    u_prev = u;
    rng.fill_normal(dW);
    dW *= sh;
    sim::burgers_step_inplace(u, p, h, dW, f, lap);
    du = u - u_prev;
    est.update(st, core::IncrementView{h * static_cast<double>(k), u_prev, du, nullptr, h});
    dump.record(k + 1, h * static_cast<double>(k + 1), u);
    record(k + 1);
  }
  r.rows.push_back({c.horizon, "substeps", 1.0, static_cast<double>(k_sub), kNaN, kNaN});
  dump.attach(r);
}

// Truth and prior law for the multi-d CIR experiment: c from the diagonally
// dominant generator, redrawn until its symmetric part is positive definite;
// m uniform in [1, 2]; nu with diagonal uniform in [nu_lo, nu_hi] and
// off-diagonal uniform in [0, nu_off].
models::CirParams draw_cir(Eigen::Index d, double nu_lo, double nu_hi, double nu_off, sim::Rng& rng) {
  models::CirParams p;
  for (;;) {
    const models::OuMultiParams g = models::generate_diag_dominant(d, rng);
    const Mat sym = 0.5 * (g.A + g.A.transpose());
    if (Eigen::SelfAdjointEigenSolver<Mat>(sym).eigenvalues().minCoeff() > 0.0) {
      p.c = g.A;
      p.m = g.M;
      break;
    }
  }
  p.nu = Mat(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p.nu(i, j) = i == j ? rng.uniform(nu_lo, nu_hi) : rng.uniform(0.0, nu_off);
  }
  return p;
}

void run_cir(const ExperimentConfig& c, sim::Rng& rng, CaseReport& r) {
  const Eigen::Index d = c.integer("d");
  if (d < 1) throw ConfigError("model.d must be >= 1");
  const double nu_lo = c.real("nu_lo"), nu_hi = c.real("nu_hi"), nu_off = c.real("nu_off");
  const models::CirParams star = draw_cir(d, nu_lo, nu_hi, nu_off, rng);
  const models::CirParams init = draw_cir(d, nu_lo, nu_hi, nu_off, rng);
  Vec x = star.m;

  const models::CirDrift drift(d);
  const models::CirVolatility vol(d);
  core::OnlineEstimator est(drift, &vol, c.schedule, core::PreconditionMode::Identity);
  est.set_diffusion_schedule(core::LearningRateSchedule::capped_inverse(c.real("vol_alpha0"), c.real("vol_cap_time")));
  core::SgdctState st;
  st.theta = init.drift_params();
  st.nu = init.vol_params();
  st.precondition_mode = core::PreconditionMode::Identity;

  std::vector<std::string> c_names, m_names;
  std::vector<double> c_true, m_true;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      c_names.push_back("c_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
      c_true.push_back(star.c(i, j));
    }
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    m_names.push_back("m_" + std::to_string(i + 1));
    m_true.push_back(star.m[i]);
  }

  const long qv_points = c.integer("qv_points");
  const long qv_stride = c.integer("qv_stride");
  if (qv_points < 1 || qv_stride < 1) throw ConfigError("model.qv_points and model.qv_stride must be >= 1");
  std::vector<Vec> ring;
  std::size_t ring_pos = 0;

  const double dt = c.dt;
  const double sdt = std::sqrt(dt);
  const std::int64_t n = std::llround(c.horizon / dt);
  const std::vector<std::int64_t> samples = sample_steps(c, dt);
  std::size_t next = 0;
  PathDump dump(c.path_stride, d);
  Vec dW(d), dx(d);
  Mat dqv(d, d);
  auto record = [&](std::int64_t k) {
    while (next < samples.size() && samples[next] == k) {
      const double t = c.sample_times[next];
      const std::vector<double> th = to_std(st.theta);
      add_group_rows(r, t, "c", c_names, c_true, std::vector<double>(th.begin(), th.begin() + d * d));
      add_group_rows(r, t, "m", m_names, m_true, std::vector<double>(th.begin() + d * d, th.end()));
      Mat nu_t(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) nu_t(i, j) = st.nu[i * d + j];
      }
      double n_true = 0.0, n_est = 0.0, err = 0.0, pct = 0.0;
      int used = 0;
      for (const Vec& xp : ring) {
        const Mat s_true = models::cir_sst(xp, star.nu);
        const Mat s_est = models::cir_sst(xp, nu_t);
        const double nt = s_true.norm();
        if (!(nt > 0.0)) continue;
        n_true += nt;
        n_est += s_est.norm();
        err += (s_est - s_true).norm();
        pct += 100.0 * (s_est - s_true).norm() / nt;
        ++used;
      }
      if (used > 0) {
        const double u = static_cast<double>(used);
        r.rows.push_back({t, "norm:qv", n_true / u, n_est / u, err / u, pct / u});
      }
      ++next;
    }
  };
  record(0);
  dump.record(0, 0.0, x);
  for (std::int64_t k = 0; k < n; ++k) {
    rng.fill_normal(dW);
    dW *= sdt;
    const Vec x_new = sim::cir_step(x, star, dt, dW);
    dx = x_new - x;
    dqv.noalias() = dx * dx.transpose();
    est.update(st, core::IncrementView{dt * static_cast<double>(k), x, dx, &dqv, dt});
    x = x_new;
    if ((k + 1) % qv_stride == 0) {
      if (static_cast<long>(ring.size()) < qv_points) {
        ring.push_back(x);
      } else {
        ring[ring_pos] = x;
        ring_pos = (ring_pos + 1) % ring.size();
      }
    }
    dump.record(k + 1, dt * static_cast<double>(k + 1), x);
    record(k + 1);
  }
  dump.attach(r);
}

void run_cartpole(const ExperimentConfig& c, sim::Rng& rng, CaseReport& r) {
  cartpole::LoopConfig lc;
  const std::string arm = c.text("arm");
  if (arm == "model-based") {
    lc.model_based = true;
  } else if (arm == "direct") {
    lc.model_based = false;
  } else {
    throw ConfigError("model.arm must be model-based or direct");
  }
  lc.n_episodes = static_cast<int>(c.integer("n_episodes"));
  lc.policy_every = static_cast<int>(c.integer("policy_every"));
  lc.sim_episodes = static_cast<int>(c.integer("sim_episodes"));
  lc.gamma = c.real("gamma");
  lc.eta = c.real("eta");
  lc.learn_rate = c.real("learn_rate");
  lc.model_hidden = c.integer("model_hidden");
  lc.policy_hidden = c.integer("policy_hidden");
  lc.max_intervals = static_cast<int>(c.integer("max_intervals"));
  lc.sim_max_intervals = static_cast<int>(c.integer("sim_max_intervals"));
  lc.target_reward = c.real("target_reward");
  lc.stop_at_target = c.flag("stop_at_target");
  if (lc.n_episodes < 1 || lc.policy_every < 1) throw ConfigError("model.n_episodes and model.policy_every must be >= 1");
  cartpole::PhysicsParams phys;
  phys.g = c.real("g");
  phys.m_c = c.real("m_c");
  phys.m = c.real("m");
  phys.l = c.real("l");
  phys.mu_c = c.real("mu_c");
  phys.mu_p = c.real("mu_p");
  phys.literal_denominator = c.flag("literal_denominator");

  const cartpole::LoopResult res = cartpole::run_learning_loop(lc, phys, rng);
  const double t = static_cast<double>(lc.n_episodes);
  r.rows.push_back({t, "episodes_to_target", lc.target_reward, static_cast<double>(res.episodes_to_target), kNaN, kNaN});
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& e : res.episodes) best = std::max(best, e.reward);
  r.rows.push_back({t, "best_reward", kNaN, best, kNaN, kNaN});
  std::ostringstream log;
  cartpole::write_episode_csv(log, res);
  r.artifacts.emplace_back(case_file("episodes", r.case_id), log.str());
}

void run_value_learn(const ExperimentConfig& c, sim::Rng& rng, CaseReport& r) {
  const double gamma = c.real("gamma");
  const long hidden = c.integer("hidden");
  std::vector<double> dts = c.reals("dts");
  if (dts.empty() || hidden < 1) throw ConfigError("value-learn: need dts and hidden >= 1");
  const double fine = *std::min_element(dts.begin(), dts.end());
  if (!(fine > 0.0)) throw ConfigError("value-learn: dts must be positive");
  // Every case starts from the same net so the spread across cases comes
  // from the Brownian paths alone.
  sim::Rng init_rng(c.seed, std::numeric_limits<std::uint64_t>::max());
  const approx::ShallowNet net0 = approx::ShallowNet::random(1, hidden, 1, approx::Activation::Tanh, init_rng);

  // One fine Brownian path shared by every step size.
  const std::int64_t n_fine = std::llround(c.horizon / fine);
  std::vector<double> w(static_cast<std::size_t>(n_fine) + 1, 0.0);
  const double sf = std::sqrt(fine);
  for (std::int64_t k = 1; k <= n_fine; ++k) w[k] = w[k - 1] + sf * rng.normal();
  const double x0 = c.real("x0");

  for (double dt : dts) {
    const std::int64_t stride = std::llround(dt / fine);
    if (stride < 1 || std::abs(static_cast<double>(stride) * fine - dt) > 1e-9 * dt) {
      throw ConfigError("value-learn: every dt must be a multiple of the smallest dt");
    }
    approx::ShallowNet a = net0, b = net0;
    const std::int64_t n = n_fine / stride;
    for (std::int64_t k = 0; k < n; ++k) {
      const double t = dt * static_cast<double>(k);
      const double alpha = core::learning_rate(c.schedule, t);
      const double x = x0 + w[k * stride];
      const double x_next = x0 + w[(k + 1) * stride];
      amopt::value_learn_step_inplace(a, x, std::cos(x), gamma, dt, alpha);
      amopt::biased_q_step_inplace(b, x, x_next, std::cos(x), gamma, dt, alpha);
    }
    const ParamVector pa = a.params(), pb = b.params();
    for (Eigen::Index i = 0; i < pa.size(); ++i) {
      r.rows.push_back({dt, "sgdct.theta_" + std::to_string(i), kNaN, pa[i], kNaN, kNaN});
    }
    for (Eigen::Index i = 0; i < pb.size(); ++i) {
      const double v = std::isfinite(pb[i]) ? pb[i] : std::numeric_limits<double>::infinity();
      r.rows.push_back({dt, "biased.theta_" + std::to_string(i), kNaN, v, kNaN, kNaN});
    }
    // V(x) = cos(x) when gamma = 1/2 and r = cos.
    double se = 0.0;
    int cnt = 0;
    for (double x = -2.0; x <= 2.0 + 1e-12; x += 0.1, ++cnt) {
      const double e = approx::net_eval(a, Vec::Constant(1, x))[0] - std::cos(x);
      se += e * e;
    }
    r.rows.push_back({dt, "sgdct.value_rmse", 0.0, std::sqrt(se / cnt), std::sqrt(se / cnt), kNaN});
  }
}

amopt::OptionSpec american_spec(const ExperimentConfig& c) {
  const std::string dyn = c.text("dynamics");
  const std::string pay = c.text("payoff");
  amopt::Dynamics dynamics;
  if (dyn == "black-scholes") {
    dynamics = amopt::Dynamics::BlackScholes;
  } else if (dyn == "bachelier") {
    dynamics = amopt::Dynamics::Bachelier;
  } else {
    throw ConfigError("model.dynamics must be black-scholes or bachelier");
  }
  amopt::Payoff payoff;
  if (pay == "arithmetic-basket-call") {
    payoff = amopt::Payoff::ArithmeticBasketCall;
  } else if (pay == "geometric-basket-call") {
    payoff = amopt::Payoff::GeometricBasketCall;
  } else {
    throw ConfigError("model.payoff must be arithmetic-basket-call or geometric-basket-call");
  }
  const long d = c.integer("d");
  if (d < 1) throw ConfigError("model.d must be >= 1");
  amopt::OptionSpec s = amopt::OptionSpec::identical(d, dynamics, c.real("r"), c.real("c"), c.real("sigma"),
                                                     d > 1 ? c.real("rho") : 1.0, c.real("K"), c.real("T"), payoff,
                                                     c.real("x0"));
  try {
    s.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("american: ") + e.what());
  }
  return s;
}

void run_american(const ExperimentConfig& c, sim::Rng& rng, CaseReport& r) {
  const amopt::OptionSpec spec = american_spec(c);
  amopt::TrainOptions o;
  o.dt_fraction = c.real("dt_fraction");
  o.initial_spread = c.real("initial_spread");
  o.average_fraction = c.real("average_fraction");
  o.early_exercise = c.flag("early_exercise");
  const std::int64_t n_iters = c.integer("n_iters");
  const amopt::QSurface q0 = amopt::QSurface::random(spec.d, c.integer("hidden"), rng);
  const amopt::TrainResult res = amopt::american_train(spec, q0, n_iters, c.schedule, rng, o);

  double oracle = kNaN;
  const bool reducible = spec.dynamics == amopt::Dynamics::BlackScholes &&
                         (spec.d == 1 || spec.payoff == amopt::Payoff::GeometricBasketCall);
  if (reducible) {
    const amopt::OptionSpec e = amopt::geometric_reduce(spec);
    const int steps = static_cast<int>(c.integer("oracle_steps"));
    oracle = o.early_exercise
                 ? amopt::binomial_american(e.x0[0], e.K, e.r, e.c, e.sigma[0], e.T, steps, amopt::OptionKind::Call)
                 : amopt::binomial_european(e.x0[0], e.K, e.r, e.c, e.sigma[0], e.T, steps, amopt::OptionKind::Call);
  }
  const double t = static_cast<double>(n_iters);
  if (std::isfinite(oracle)) {
    add_group_rows(r, t, "price", {"price"}, {oracle}, {res.price});
  } else {
    r.rows.push_back({t, "price", kNaN, res.price, kNaN, kNaN});
  }
  std::ostringstream net;
  approx::write_net_csv(net, res.q.net);
  r.artifacts.emplace_back(case_file("nets", r.case_id), net.str());
}

}  // namespace

CaseReport run_case(const ExperimentConfig& config, int case_id) {
  CaseReport r;
  r.case_id = case_id;
  sim::Rng rng(config.seed, static_cast<std::uint64_t>(case_id));
  try {
    switch (config.experiment) {
      case Experiment::Ou1d:
        run_ou1d(config, rng, r);
        break;
      case Experiment::OuMulti:
        run_ou_multi(config, rng, r);
        break;
      case Experiment::Burgers:
        run_burgers(config, rng, r);
        break;
      case Experiment::Cir:
        run_cir(config, rng, r);
        break;
      case Experiment::Cartpole:
        run_cartpole(config, rng, r);
        break;
      case Experiment::ValueLearn:
        run_value_learn(config, rng, r);
        break;
      case Experiment::American:
        run_american(config, rng, r);
        break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = e.what();
  }
  return r;
}

RunResult run_experiment(const ExperimentConfig& config, int workers) {
  const int n = config.n_cases;
  RunResult result;
  result.reports.resize(static_cast<std::size_t>(n));
  workers = std::max(1, std::min(workers, n));
  std::atomic<int> next{0};
  std::exception_ptr config_error;
  std::mutex err_mu;
  auto work = [&]() {
    for (;;) {
      const int id = next.fetch_add(1);
      if (id >= n) return;
      try {
        result.reports[static_cast<std::size_t>(id)] = run_case(config, id);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!config_error) config_error = std::current_exception();
        next.store(n);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (config_error) std::rethrow_exception(config_error);
  for (const CaseReport& r : result.reports) result.failures += r.failed ? 1 : 0;
  result.summary = summarize(result.reports);
  return result;
}

}  // namespace sgdct::bench
