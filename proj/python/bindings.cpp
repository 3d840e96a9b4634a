#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sgdct/amopt.hpp"
#include "sgdct/bench.hpp"
#include "sgdct/core.hpp"
#include "sgdct/error.hpp"
#include "sgdct/models.hpp"

namespace py = pybind11;
using namespace sgdct;

namespace {

amopt::OptionKind kind_from(const std::string& s) {
  if (s == "call") return amopt::OptionKind::Call;
  if (s == "put") return amopt::OptionKind::Put;
  throw py::value_error("kind must be 'call' or 'put'");
}

py::dict run_config(const std::string& text, int workers) {
  std::istringstream in(text);
  const bench::ExperimentConfig c = bench::parse_config(in, "<python>");
  bench::RunResult r;
  {
    py::gil_scoped_release release;
    r = bench::run_experiment(c, workers);
  }
  std::ostringstream cases, summary;
  bench::write_cases_csv(cases, r.reports);
  bench::write_summary_csv(summary, r.summary);
  py::dict out;
  out["cases_csv"] = cases.str();
  out["summary_csv"] = summary.str();
  out["failures"] = r.failures;
  py::dict stats;
  for (const auto& row : r.summary) stats[py::make_tuple(row.statistic, row.t)] = row.value;
  out["summary"] = stats;
  return out;
}

}  // namespace

PYBIND11_MODULE(_sgdct, m) {
  m.doc() = "Online continuous-time parameter estimation";
  m.attr("__version__") = SGDCT_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  m.def(
      "learning_rate",
      [](double alpha0, double cap_time, double t) {
        return core::learning_rate(core::LearningRateSchedule::capped_inverse(alpha0, cap_time), t);
      },
      py::arg("alpha0"), py::arg("cap_time"), py::arg("t"), "min(alpha0, alpha0 cap_time / t)");

  m.def(
      "ou1d_drift",
      [](double x, double c, double mu) {
        const auto v = models::ou1d_drift(x, {c, mu});
        return py::make_tuple(v.f, Eigen::Vector2d(v.grad));
      },
      py::arg("x"), py::arg("c"), py::arg("m"), "(f, (df/dc, df/dm)) for f = c (m - x)");
  m.def(
      "ou1d_gbar", [](double c, double mu, double c_star, double m_star) { return models::ou1d_gbar({c, mu}, {c_star, m_star}); },
      py::arg("c"), py::arg("m"), py::arg("c_star"), py::arg("m_star"));
  m.def(
      "ou1d_grad_gbar",
      [](double c, double mu, double c_star, double m_star) {
        return Eigen::Vector2d(models::ou1d_grad_gbar({c, mu}, {c_star, m_star}));
      },
      py::arg("c"), py::arg("m"), py::arg("c_star"), py::arg("m_star"));

  m.def(
      "binomial_american",
      [](double s0, double K, double r, double c, double sigma, double T, int n, const std::string& kind) {
        return amopt::binomial_american(s0, K, r, c, sigma, T, n, kind_from(kind));
      },
      py::arg("s0"), py::arg("K"), py::arg("r"), py::arg("c"), py::arg("sigma"), py::arg("T"), py::arg("n_steps"),
      py::arg("kind") = "call");
  m.def(
      "black_scholes_european",
      [](double s0, double K, double r, double c, double sigma, double T, const std::string& kind) {
        return amopt::black_scholes_european(s0, K, r, c, sigma, T, kind_from(kind));
      },
      py::arg("s0"), py::arg("K"), py::arg("r"), py::arg("c"), py::arg("sigma"), py::arg("T"),
      py::arg("kind") = "call");

  m.def("quantile", &bench::quantile, py::arg("values"), py::arg("q"));
  m.def("run_config", &run_config, py::arg("text"), py::arg("workers") = 1,
        "Runs a benchmark config given as text; returns CSV strings, failure count and a summary dict.");
}
