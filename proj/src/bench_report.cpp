#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "sgdct/bench.hpp"
#include "sgdct/error.hpp"
#include "sgdct/format.hpp"

namespace sgdct::bench {

double abs_error(const std::vector<double>& estimate, const std::vector<double>& truth) {
  if (estimate.size() != truth.size()) throw DimensionError("abs_error: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += (estimate[i] - truth[i]) * (estimate[i] - truth[i]);
  return std::sqrt(s);
}

double pct_error(const std::vector<double>& estimate, const std::vector<double>& truth) {
  double n = 0.0;
  for (double v : truth) n += v * v;
  return 100.0 * abs_error(estimate, truth) / std::sqrt(n);
}

void add_group_rows(CaseReport& report, double t, const std::string& group, const std::vector<std::string>& names,
                    const std::vector<double>& truth, const std::vector<double>& estimate) {
  if (names.size() != truth.size() || truth.size() != estimate.size()) {
    throw DimensionError("add_group_rows: size mismatch");
  }
  double nt = 0.0, ne = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double err = std::abs(estimate[i] - truth[i]);
    report.rows.push_back({t, names[i], truth[i], estimate[i], err, 100.0 * err / std::abs(truth[i])});
    nt += truth[i] * truth[i];
    ne += estimate[i] * estimate[i];
  }
  report.rows.push_back(
      {t, "norm:" + group, std::sqrt(nt), std::sqrt(ne), abs_error(estimate, truth), pct_error(estimate, truth)});
}

// ---------------------------------------------------------------------------

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

QuantileTable quantile_table(const std::vector<double>& errors, const std::vector<double>& quantiles) {
  if (errors.empty()) throw DomainError("quantile_table: empty input");
  QuantileTable t{{}, -std::numeric_limits<double>::infinity(), 0.0, 0.0};
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  for (double q : quantiles) t.quantiles.emplace_back(q, quantile(sorted, q));
  for (double e : errors) {
    t.max = std::max(t.max, e);
    t.mean += e;
    t.mse += e * e;
  }
  t.mean /= static_cast<double>(errors.size());
  t.mse /= static_cast<double>(errors.size());
  return t;
}

namespace {

std::vector<double> finite_only(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

// Sample variance summed over components, one column per parameter.
double total_variance(const std::vector<std::vector<double>>& samples) {
  if (samples.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t p = samples.front().size();
  double total = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s[k];
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const auto& s : samples) var += (s[k] - mean) * (s[k] - mean);
    total += var / static_cast<double>(samples.size() - 1);
  }
  return total;
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<CaseReport>& reports) {
  using Key = std::pair<std::string, double>;
  std::map<Key, std::vector<double>> abs_by, pct_by, gbar_by, grad_by;
  std::map<double, std::vector<double>> episodes_by;
  // (arm, dt) -> case -> parameter vector
  std::map<Key, std::map<int, std::vector<double>>> terminal;
  int failures = 0;
  for (const CaseReport& r : reports) {
    if (r.failed) ++failures;
    for (const ErrorRow& row : r.rows) {
      if (row.param.rfind("norm:", 0) == 0) {
        const Key k{row.param.substr(5), row.t};
        abs_by[k].push_back(row.abs_err);
        pct_by[k].push_back(row.pct_err);
      } else if (row.param == "gbar") {
        gbar_by[{"", row.t}].push_back(row.estimate);
      } else if (row.param == "grad_gbar_norm") {
        grad_by[{"", row.t}].push_back(row.estimate);
      } else if (row.param == "episodes_to_target") {
        episodes_by[row.t].push_back(row.estimate < 0.0 ? std::numeric_limits<double>::infinity() : row.estimate);
      } else if (row.param.rfind("sgdct.theta_", 0) == 0 || row.param.rfind("biased.theta_", 0) == 0) {
        const std::string arm = row.param.substr(0, row.param.find('.'));
        terminal[{arm, row.t}][r.case_id].push_back(row.estimate);
      }
    }
  }

  std::vector<SummaryRow> out;
  for (const auto& [key, abs] : abs_by) {
    const auto& [group, t] = key;
    const std::string prefix = group == "theta" ? "" : group + ".";
    const std::vector<double> a = finite_only(abs);
    const std::vector<double> p = finite_only(pct_by[key]);
    if (a.empty() || p.empty()) continue;
    const QuantileTable ta = quantile_table(a, {0.99, 0.999});
    const QuantileTable tp = quantile_table(p, {0.99, 0.999});
    out.push_back({prefix + "maximum_error", t, ta.max});
    out.push_back({prefix + "99_quantile_of_error", t, ta.quantiles[0].second});
    out.push_back({prefix + "99_9_quantile_of_error", t, ta.quantiles[1].second});
    out.push_back({prefix + "mean_squared_error", t, ta.mse});
    out.push_back({prefix + "mean_error_in_percent", t, tp.mean});
    out.push_back({prefix + "maximum_error_in_percent", t, tp.max});
    out.push_back({prefix + "99_quantile_of_error_in_percent", t, tp.quantiles[0].second});
    out.push_back({prefix + "99_9_quantile_of_error_in_percent", t, tp.quantiles[1].second});
  }
  for (const auto& [key, g] : gbar_by) {
    out.push_back({"median_gbar", key.second, quantile(g, 0.5)});
    out.push_back({"mean_gbar", key.second, quantile_table(g, {}).mean});
  }
  for (const auto& [key, g] : grad_by) {
    const double below = static_cast<double>(std::count_if(g.begin(), g.end(), [](double v) { return v < 0.1; }));
    out.push_back({"fraction_grad_gbar_norm_below_0_1", key.second, below / static_cast<double>(g.size())});
  }
  for (const auto& [t, e] : episodes_by) {
    const double never = static_cast<double>(std::count_if(e.begin(), e.end(), [](double v) { return std::isinf(v); }));
    out.push_back({"episodes_to_target.maximum", t, *std::max_element(e.begin(), e.end())});
    out.push_back({"episodes_to_target.90_quantile", t, quantile(e, 0.9)});
    out.push_back({"episodes_to_target.mean", t, quantile_table(e, {}).mean});
    out.push_back({"episodes_to_target.median", t, quantile(e, 0.5)});
    out.push_back({"episodes_to_target.10_quantile", t, quantile(e, 0.1)});
    out.push_back({"episodes_to_target.minimum", t, *std::min_element(e.begin(), e.end())});
    out.push_back({"episodes_to_target.never_reached", t, never});
  }
  for (const auto& [key, by_case] : terminal) {
    std::vector<std::vector<double>> samples;
    for (const auto& [id, v] : by_case) samples.push_back(v);
    out.push_back({key.first + ".terminal_param_variance", key.second, total_variance(samples)});
  }
  out.push_back({"failed_cases", 0.0, static_cast<double>(failures)});
  return out;
}

// ---------------------------------------------------------------------------

void write_cases_csv(std::ostream& out, const std::vector<CaseReport>& reports) {
  out << "case_id,t,param_name,true,estimate,abs_err,pct_err\n";
  for (const CaseReport& r : reports) {
    for (const ErrorRow& row : r.rows) {
      out << r.case_id << ',' << format_double(row.t) << ',' << row.param << ',' << format_double(row.truth) << ','
          << format_double(row.estimate) << ',' << format_double(row.abs_err) << ',' << format_double(row.pct_err)
          << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "statistic,t,value\n";
  for (const SummaryRow& r : rows) out << r.statistic << ',' << format_double(r.t) << ',' << format_double(r.value) << '\n';
}

namespace {

double parse_cell(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw DomainError("cases.csv: bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<CaseReport> read_cases_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "case_id,t,param_name,true,estimate,abs_err,pct_err") {
    throw DomainError("cases.csv: unexpected header");
  }
  std::vector<CaseReport> reports;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw DomainError("cases.csv: line " + std::to_string(line_no) + " needs 7 fields");
    try {
      const int id = std::stoi(cells[0]);
      if (reports.empty() || reports.back().case_id != id) {
        reports.push_back({});
        reports.back().case_id = id;
      }
      reports.back().rows.push_back({parse_cell(cells[1]), cells[2], parse_cell(cells[3]), parse_cell(cells[4]),
                                     parse_cell(cells[5]), parse_cell(cells[6])});
    } catch (const std::invalid_argument&) {
      throw DomainError("cases.csv: line " + std::to_string(line_no) + " is malformed");
    } catch (const std::out_of_range&) {
      throw DomainError("cases.csv: line " + std::to_string(line_no) + " is out of range");
    }
  }
  return reports;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << contents;
  out.close();
  if (!out) throw Error("writing " + path.string() + " failed");
}

}  // namespace

void emit_reports(const RunResult& result, const ExperimentConfig& config, const std::filesystem::path& dir,
                  int workers) {
  (void)workers;  // output must not depend on the worker count
  std::ostringstream cases, summary, meta;
  write_cases_csv(cases, result.reports);
  write_summary_csv(summary, result.summary);
  meta << "sgdct_version = " << SGDCT_VERSION << '\n'
       << "eigen_version = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION
       << '\n'
#if defined(__clang__)
       << "compiler = clang " << __clang_major__ << '.' << __clang_minor__ << '\n'
#elif defined(__GNUC__)
       << "compiler = gcc " << __GNUC__ << '.' << __GNUC_MINOR__ << '\n'
#endif
       << "error_norm = euclidean\n"
       << "rng = mt19937_64, splitmix64-mixed (seed, case_id) substreams\n"
       << "cases = " << result.reports.size() << '\n'
       << "failures = " << result.failures << '\n';
  for (const CaseReport& r : result.reports) {
    if (r.failed) meta << "failure.case_" << r.case_id << " = " << r.error << '\n';
  }
  meta << "\n# resolved config\n" << render_config(config);

  write_file(dir / "cases.csv", cases.str());
  write_file(dir / "summary.csv", summary.str());
  write_file(dir / "run.meta", meta.str());
  for (const CaseReport& r : result.reports) {
    for (const auto& [rel, contents] : r.artifacts) write_file(dir / rel, contents);
  }
}

}  // namespace sgdct::bench
