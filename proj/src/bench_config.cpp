#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "sgdct/bench.hpp"
#include "sgdct/error.hpp"
#include "sgdct/format.hpp"

namespace sgdct::bench {

namespace {

const std::vector<std::pair<Experiment, std::string>>& experiment_names() {
  static const std::vector<std::pair<Experiment, std::string>> names = {
      {Experiment::Ou1d, "ou1d"},         {Experiment::OuMulti, "ou-multi"},
      {Experiment::Burgers, "burgers"},   {Experiment::Cir, "cir"},
      {Experiment::Cartpole, "cartpole"}, {Experiment::ValueLearn, "value-learn"},
      {Experiment::American, "american"},
  };
  return names;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool parse_real(const std::string& s, double& out) {
  const std::string v = trim(s);
  if (v.empty()) return false;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_int(const std::string& s, long& out) {
  const std::string v = trim(s);
  if (v.empty()) return false;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec == std::errc() && ptr == end) return true;
  // Accept integral reals such as 1e4.
  double d = 0.0;
  if (!parse_real(v, d) || d != static_cast<double>(static_cast<long>(d))) return false;
  out = static_cast<long>(d);
  return true;
}

bool parse_bool(const std::string& s, bool& out) {
  const std::string v = trim(s);
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

bool parse_list(const std::string& s, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!parse_real(item, v)) return false;
    out.push_back(v);
  }
  return true;
}

enum class Kind { Real, Int, Bool, Text, List };

struct ModelKey {
  std::string name;
  Kind kind;
  std::string value;
};

std::vector<ModelKey> model_defaults(Experiment e) {
  switch (e) {
    case Experiment::Ou1d:
      return {{"theta_lo", Kind::Real, "1"}, {"theta_hi", Kind::Real, "2"}};
    case Experiment::OuMulti:
      return {{"d", Kind::Int, "3"}};
    case Experiment::Burgers:
      return {{"theta_lo", Kind::Real, "0.1"}, {"theta_hi", Kind::Real, "10"},
              {"dx", Kind::Real, "0.01"},      {"sigma", Kind::Real, "0.1"},
              {"u_left", Kind::Real, "0"},     {"u_right", Kind::Real, "1"},
              {"max_diffusion_number", Kind::Real, "0.4"}};
    case Experiment::Cir:
      return {{"d", Kind::Int, "3"},
              {"nu_lo", Kind::Real, "0.5"},
              {"nu_hi", Kind::Real, "1"},
              {"nu_off", Kind::Real, "0.1"},
              {"vol_alpha0", Kind::Real, "0.2"},
              {"vol_cap_time", Kind::Real, "20"},
              {"qv_points", Kind::Int, "1000"},
              {"qv_stride", Kind::Int, "100"}};
    case Experiment::Cartpole:
      return {{"arm", Kind::Text, "model-based"},
              {"n_episodes", Kind::Int, "150"},
              {"policy_every", Kind::Int, "5"},
              {"sim_episodes", Kind::Int, "50"},
              {"gamma", Kind::Real, "0.99"},
              {"eta", Kind::Real, "0.01"},
              {"learn_rate", Kind::Real, "1"},
              {"model_hidden", Kind::Int, "32"},
              {"policy_hidden", Kind::Int, "16"},
              {"max_intervals", Kind::Int, "1000"},
              {"sim_max_intervals", Kind::Int, "500"},
              {"target_reward", Kind::Real, "100"},
              {"stop_at_target", Kind::Bool, "false"},
              {"literal_denominator", Kind::Bool, "false"},
              {"g", Kind::Real, "9.8"},
              {"m_c", Kind::Real, "1"},
              {"m", Kind::Real, "0.1"},
              {"l", Kind::Real, "0.5"},
              {"mu_c", Kind::Real, "0.0005"},
              {"mu_p", Kind::Real, "0.000002"}};
    case Experiment::ValueLearn:
      return {{"gamma", Kind::Real, "0.5"},
              {"hidden", Kind::Int, "8"},
              {"dts", Kind::List, "0.1,0.01,0.001"},
              {"x0", Kind::Real, "0"}};
    case Experiment::American:
      return {{"d", Kind::Int, "1"},
              {"dynamics", Kind::Text, "black-scholes"},
              {"payoff", Kind::Text, "arithmetic-basket-call"},
              {"r", Kind::Real, "0"},
              {"c", Kind::Real, "0.02"},
              {"sigma", Kind::Real, "0.25"},
              {"rho", Kind::Real, "0.75"},
              {"K", Kind::Real, "1"},
              {"T", Kind::Real, "2"},
              {"x0", Kind::Real, "1"},
              {"hidden", Kind::Int, "50"},
              {"n_iters", Kind::Int, "200000"},
              {"dt_fraction", Kind::Real, "0.01"},
              {"initial_spread", Kind::Real, "0.2"},
              {"average_fraction", Kind::Real, "0.5"},
              {"early_exercise", Kind::Bool, "true"},
              {"oracle_steps", Kind::Int, "5000"}};
  }
  return {};
}

bool uses_horizon(Experiment e) {
  return e == Experiment::Ou1d || e == Experiment::OuMulti || e == Experiment::Burgers || e == Experiment::Cir ||
         e == Experiment::ValueLearn;
}

std::string schedule_kind_name(core::ScheduleKind k) {
  switch (k) {
    case core::ScheduleKind::CappedInverse:
      return "capped-inverse";
    case core::ScheduleKind::Constant:
      return "constant";
    case core::ScheduleKind::CustomTable:
      return "table";
  }
  return "capped-inverse";
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [k, name] : experiment_names()) {
    if (k == e) return name;
  }
  return "ou1d";
}

Experiment experiment_from_string(const std::string& s) {
  for (const auto& [k, name] : experiment_names()) {
    if (name == s) return k;
  }
  throw ConfigError("unknown experiment '" + s + "'");
}

double ExperimentConfig::real(const std::string& key) const {
  double v = 0.0;
  if (!parse_real(text(key), v)) throw ConfigError("model." + key + " is not a number");
  return v;
}

long ExperimentConfig::integer(const std::string& key) const {
  long v = 0;
  if (!parse_int(text(key), v)) throw ConfigError("model." + key + " is not an integer");
  return v;
}

bool ExperimentConfig::flag(const std::string& key) const {
  bool v = false;
  if (!parse_bool(text(key), v)) throw ConfigError("model." + key + " is not a boolean");
  return v;
}

const std::string& ExperimentConfig::text(const std::string& key) const {
  auto it = model.find(key);
  if (it == model.end()) throw ConfigError("model." + key + " is not defined for " + to_string(experiment));
  return it->second;
}

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
  std::vector<double> v;
  if (!parse_list(text(key), v)) throw ConfigError("model." + key + " is not a list of numbers");
  return v;
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  for (const ModelKey& k : model_defaults(e)) c.model[k.name] = k.value;
  switch (e) {
    case Experiment::Ou1d:
      c.n_cases = 100;
      c.horizon = 1e4;
      c.dt = 1e-2;
      c.sample_times = {1e2, 1e3, 1e4};
      c.schedule = core::LearningRateSchedule::capped_inverse(1e-2);
      break;
    case Experiment::OuMulti:
      c.n_cases = 50;
      c.horizon = 1e4;
      c.dt = 1e-2;
      c.sample_times = {1e2, 1e3, 1e4};
      c.schedule = core::LearningRateSchedule::capped_inverse(1e-1);
      break;
    case Experiment::Burgers:
      c.n_cases = 20;
      c.horizon = 10.0;
      c.dt = 1e-5;
      c.sample_times = {0.1, 1.0, 10.0};
      c.schedule = core::LearningRateSchedule::capped_inverse(1e-3);
      break;
    case Experiment::Cir:
      c.n_cases = 20;
      c.horizon = 1e4;
      c.dt = 1e-3;
      c.sample_times = {1e2, 1e3, 1e4};
      c.schedule = core::LearningRateSchedule::capped_inverse(1.0, 20.0);
      break;
    case Experiment::Cartpole:
      c.n_cases = 20;
      c.horizon = 0.0;
      c.dt = 1e-3;
      c.schedule = core::LearningRateSchedule::constant(1.0);
      break;
    case Experiment::ValueLearn:
      c.n_cases = 20;
      c.horizon = 10.0;
      c.dt = 1e-3;
      c.sample_times = {10.0};
      c.schedule = core::LearningRateSchedule::constant(1e-3);
      break;
    case Experiment::American:
      c.n_cases = 1;
      c.horizon = 0.0;
      c.dt = 0.0;
      c.schedule = core::LearningRateSchedule::capped_inverse(1e-1, 2e4);
      break;
  }
  return c;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, std::map<std::string, Entry>> sections;
  std::string section;
  std::string raw;
  int line_no = 0;
  auto fail = [&source](int line, const std::string& msg) -> ConfigError {
    return ConfigError(source + ":" + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "schedule" && section != "model") throw fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw fail(line_no, "empty key");
    auto& sec = sections[section];
    if (sec.count(key)) throw fail(line_no, "duplicate key '" + key + "'");
    sec[key] = {value, line_no};
  }

  auto& top = sections[""];
  if (!top.count("experiment")) throw ConfigError(source + ": missing required key 'experiment'");
  Experiment e;
  try {
    e = experiment_from_string(top["experiment"].value);
  } catch (const ConfigError& err) {
    throw fail(top["experiment"].line, err.what());
  }
  ExperimentConfig c = default_config(e);

  for (const auto& [key, entry] : top) {
    const std::string& v = entry.value;
    long iv = 0;
    double dv = 0.0;
    if (key == "experiment") {
      continue;
    } else if (key == "n_cases") {
      if (!parse_int(v, iv)) throw fail(entry.line, "n_cases must be an integer");
      c.n_cases = static_cast<int>(iv);
    } else if (key == "horizon") {
      if (!parse_real(v, dv)) throw fail(entry.line, "horizon must be a number");
      c.horizon = dv;
    } else if (key == "dt") {
      if (!parse_real(v, dv)) throw fail(entry.line, "dt must be a number");
      c.dt = dv;
    } else if (key == "seed") {
      if (!parse_int(v, iv) || iv < 0) throw fail(entry.line, "seed must be a nonnegative integer");
      c.seed = static_cast<std::uint64_t>(iv);
    } else if (key == "output_dir") {
      c.output_dir = v;
    } else if (key == "sample_times") {
      if (!parse_list(v, c.sample_times)) throw fail(entry.line, "sample_times must be a list of numbers");
    } else if (key == "path_stride") {
      if (!parse_int(v, iv) || iv < 0) throw fail(entry.line, "path_stride must be a nonnegative integer");
      c.path_stride = static_cast<int>(iv);
    } else {
      throw fail(entry.line, "unknown key '" + key + "'");
    }
  }

  if (sections.count("schedule")) {
    auto& sec = sections["schedule"];
    core::LearningRateSchedule s = c.schedule;
    std::string kind = schedule_kind_name(s.kind);
    std::vector<double> knots, values;
    for (const auto& [key, entry] : sec) {
      double dv = 0.0;
      if (key == "kind") {
        kind = entry.value;
      } else if (key == "alpha0") {
        if (!parse_real(entry.value, dv)) throw fail(entry.line, "alpha0 must be a number");
        s.alpha0 = dv;
      } else if (key == "cap_time") {
        if (!parse_real(entry.value, dv)) throw fail(entry.line, "cap_time must be a number");
        s.cap_time = dv;
      } else if (key == "knots") {
        if (!parse_list(entry.value, knots)) throw fail(entry.line, "knots must be a list of numbers");
      } else if (key == "values") {
        if (!parse_list(entry.value, values)) throw fail(entry.line, "values must be a list of numbers");
      } else {
        throw fail(entry.line, "unknown schedule key '" + key + "'");
      }
    }
    try {
      if (kind == "capped-inverse") {
        c.schedule = core::LearningRateSchedule::capped_inverse(s.alpha0, s.cap_time);
      } else if (kind == "constant") {
        c.schedule = core::LearningRateSchedule::constant(s.alpha0);
      } else if (kind == "table") {
        c.schedule = core::LearningRateSchedule::table(knots, values);
      } else {
        throw ConfigError("unknown schedule kind '" + kind + "'");
      }
    } catch (const std::exception& err) {
      throw ConfigError(source + ": [schedule]: " + err.what());
    }
  }

  const std::vector<ModelKey> keys = model_defaults(e);
  if (sections.count("model")) {
    for (const auto& [key, entry] : sections["model"]) {
      auto it = std::find_if(keys.begin(), keys.end(), [&](const ModelKey& k) { return k.name == key; });
      if (it == keys.end()) throw fail(entry.line, "unknown model key '" + key + "' for " + to_string(e));
      c.model[key] = entry.value;
    }
  }
  for (const ModelKey& k : keys) {
    const std::string& v = c.model[k.name];
    double dv = 0.0;
    long iv = 0;
    bool bv = false;
    std::vector<double> lv;
    const bool ok = k.kind == Kind::Real   ? parse_real(v, dv)
                    : k.kind == Kind::Int  ? parse_int(v, iv)
                    : k.kind == Kind::Bool ? parse_bool(v, bv)
                    : k.kind == Kind::List ? parse_list(v, lv)
                                           : !v.empty();
    if (!ok) throw ConfigError(source + ": model." + k.name + " has an invalid value '" + v + "'");
  }

  if (c.n_cases < 1) throw ConfigError(source + ": n_cases must be >= 1");
  if (uses_horizon(e)) {
    if (!(c.horizon > 0.0)) throw ConfigError(source + ": horizon must be positive");
    if (!(c.dt > 0.0) || c.dt > c.horizon) throw ConfigError(source + ": dt must be in (0, horizon]");
    for (double t : c.sample_times) {
      if (!(t >= 0.0 && t <= c.horizon)) {
        throw ConfigError(source + ": sample time " + format_double(t) + " outside [0, horizon]");
      }
    }
    std::sort(c.sample_times.begin(), c.sample_times.end());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "experiment = " << to_string(c.experiment) << '\n'
      << "n_cases = " << c.n_cases << '\n'
      << "horizon = " << format_double(c.horizon) << '\n'
      << "dt = " << format_double(c.dt) << '\n'
      << "seed = " << c.seed << '\n'
      << "output_dir = " << c.output_dir << '\n'
      << "sample_times = " << join(c.sample_times) << '\n'
      << "path_stride = " << c.path_stride << '\n'
      << "\n[schedule]\n"
      << "kind = " << schedule_kind_name(c.schedule.kind) << '\n'
      << "alpha0 = " << format_double(c.schedule.alpha0) << '\n'
      << "cap_time = " << format_double(c.schedule.cap_time) << '\n';
  if (c.schedule.kind == core::ScheduleKind::CustomTable) {
    out << "knots = " << join(c.schedule.knots) << '\n' << "values = " << join(c.schedule.values) << '\n';
  }
  out << "\n[model]\n";
  for (const auto& [k, v] : c.model) out << k << " = " << v << '\n';
  return out.str();
}

}  // namespace sgdct::bench
