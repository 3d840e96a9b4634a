#pragma once

// Experiment runner: config ingestion, seeded parallel cases, error
// statistics and CSV emission.
//
// Config format: `key = value` lines, `[schedule]` and `[model]` sections,
// `#` comments. Top-level keys: experiment, n_cases, horizon, dt, seed,
// output_dir, sample_times, path_stride.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sgdct/core.hpp"

namespace sgdct::bench {

enum class Experiment { Ou1d, OuMulti, Burgers, Cir, Cartpole, ValueLearn, American };

std::string to_string(Experiment e);
/// Throws ConfigError for an unknown name.
Experiment experiment_from_string(const std::string& s);

struct ExperimentConfig {
  Experiment experiment = Experiment::Ou1d;
  int n_cases = 1;
  double horizon = 1e4;
  double dt = 1e-2;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::vector<double> sample_times;
  /// Write every `path_stride`-th simulated state to paths/case_<id>.csv (0 = off).
  int path_stride = 0;
  core::LearningRateSchedule schedule;
  /// Resolved [model] entries, defaults included.
  std::map<std::string, std::string> model;

  double real(const std::string& key) const;
  long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
};

/// Defaults for an experiment before any file is read.
ExperimentConfig default_config(Experiment e);

/// Parses and validates; every problem is a ConfigError naming the source and line.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config in the input format.
std::string render_config(const ExperimentConfig& config);

// ---------------------------------------------------------------------------

/// One cases.csv row. Aggregate rows carry param = "norm:<group>" with
/// truth = |theta*|, estimate = |theta_t| and abs_err = |theta_t - theta*|
/// (Euclidean over the group).
struct ErrorRow {
  double t;
  std::string param;
  double truth;
  double estimate;
  double abs_err;
  double pct_err;
};

struct CaseReport {
  int case_id = 0;
  bool failed = false;
  std::string error;
  std::vector<ErrorRow> rows;
  /// Extra files relative to the output directory (path, contents).
  std::vector<std::pair<std::string, std::string>> artifacts;
};

/// pct_err = 100 |estimate - truth| / |truth| over stacked vectors.
double abs_error(const std::vector<double>& estimate, const std::vector<double>& truth);
double pct_error(const std::vector<double>& estimate, const std::vector<double>& truth);

/// Appends one row per component and the aggregate row for `group`.
void add_group_rows(CaseReport& report, double t, const std::string& group, const std::vector<std::string>& names,
                    const std::vector<double>& truth, const std::vector<double>& estimate);

// ---------------------------------------------------------------------------

struct QuantileTable {
  std::vector<std::pair<double, double>> quantiles;  ///< (q, value)
  double max;
  double mean;
  double mse;  ///< mean of squares
};

/// Linear-interpolation empirical quantiles (position (n-1) q in the sorted
/// list). Throws DomainError for empty input or q outside [0, 1].
QuantileTable quantile_table(const std::vector<double>& errors, const std::vector<double>& quantiles);
double quantile(std::vector<double> values, double q);

struct SummaryRow {
  std::string statistic;
  double t;
  double value;
};

/// Statistics over the aggregate rows of every group and sample time, plus
/// experiment-specific rows. Group "theta" uses the bare names
/// (maximum_error, 99_quantile_of_error, ..., 99_9_quantile_of_error_in_percent);
/// other groups are prefixed "<group>.".
std::vector<SummaryRow> summarize(const std::vector<CaseReport>& reports);

// ---------------------------------------------------------------------------

struct RunResult {
  std::vector<CaseReport> reports;  ///< ordered by case_id
  std::vector<SummaryRow> summary;
  int failures = 0;
};

/// Runs one case on its own RNG substream (seed, case_id).
CaseReport run_case(const ExperimentConfig& config, int case_id);

/// Cases are distributed over `workers` threads and merged by case_id.
RunResult run_experiment(const ExperimentConfig& config, int workers);

void write_cases_csv(std::ostream& out, const std::vector<CaseReport>& reports);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<CaseReport> read_cases_csv(std::istream& in);

/// cases.csv, summary.csv, run.meta and artifacts under `dir`. I/O failures
/// throw Error naming the path.
void emit_reports(const RunResult& result, const ExperimentConfig& config, const std::filesystem::path& dir,
                  int workers);

}  // namespace sgdct::bench
