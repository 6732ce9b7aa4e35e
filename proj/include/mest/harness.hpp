#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mest/certify.hpp"
#include "mest/datagen.hpp"
#include "mest/solver.hpp"

namespace mest {

enum class Regime { LassoHard, LassoWeak, GroupLasso, LogisticL1 };

const char* to_string(Regime r);
Regime parse_regime(const std::string& text);

struct LambdaPolicy {
  enum class Kind { PaperRule, OracleGradient, Fixed };
  Kind kind = Kind::PaperRule;
  /// lambda for Fixed
  double value = 0.0;
  /// added to 2 R*(grad L(theta*)) under OracleGradient
  double offset = 0.0;
};

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File that could not be read or written; the message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Regime regime = Regime::LassoHard;
  std::vector<Index> n_grid{400};
  /// LassoHard, LassoWeak, LogisticL1
  std::vector<Index> p_grid{128};
  /// LassoHard, LogisticL1
  std::vector<Index> s_grid{8};
  /// LassoWeak
  double q = 0.5;
  double radius = 2.0;
  /// GroupLasso: equal groups of `group_size`, N_G from the grid
  Index group_size = 4;
  std::vector<Index> num_groups_grid{32};
  Index active_groups = 4;
  double alpha = 2.0;

  Index trials = 10;
  double sigma = 1.0;
  std::string covariance = "identity";
  NoiseKind noise = NoiseKind::Gaussian;
  double magnitude = 1.0;
  LambdaPolicy lambda;
  std::uint64_t seed = 1;
  std::string out_dir = ".";

  /// Restricted-eigenvalue / RSC probes per trial; 0 skips certification.
  Index re_probes = 1500;
  /// leading constant of the weakly sparse Lasso bound
  double c0 = 64.0;
  SolverConfig solver;
  /// 0: hardware concurrency, still capped by MEST_THREADS
  Index threads = 0;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses key = value text. Unknown keys, bad values and empty grids throw
/// ConfigError.
ExperimentConfig parse_config(const std::string& text);
/// Same, from already split pairs.
ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv);
/// Reads and parses a file. Throws IoError when unreadable.
ExperimentConfig load_config(const std::string& path);
/// Inverse of parse_config.
std::string format_config(const ExperimentConfig& cfg);
/// Raw key = value pairs; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(const std::string& text);

struct Cell {
  Index n = 0;
  Index p = 0;
  Index s = 0;
  double q = 0.0;
  Index s_g = 0;
  Index num_groups = 0;
  Index group_size = 0;
};

/// Cartesian grid in config order: n varies slowest.
std::vector<Cell> expand_grid(const ExperimentConfig& cfg);

struct TrialRecord {
  Regime regime = Regime::LassoHard;
  Index n = 0;
  Index p = 0;
  Index s = 0;
  double q = 0.0;
  Index s_g = 0;
  Index trial = 0;
  double lambda = 0.0;
  double err_l2_sq = 0.0;
  double err_reg = 0.0;
  /// NaN when curvature was not certified.
  double bound = 0.0;
  bool cone_ok = false;
  double kappa1_hat = 0.0;
  double kappa2_hat = 0.0;
  Index iters = 0;
  double wall_ms = 0.0;
  /// Not part of the CSV schema; reported in the summary.
  bool converged = true;
  bool certified = true;
};

/// The regularizer matching the regime's estimator in `cell`.
RegularizerSpec regularizer_for(const ExperimentConfig& cfg, const Cell& cell);
/// Instance for (cell, trial), seeded by derive_seed(cfg.seed, cell index, trial).
ProblemInstance instance_for(const ExperimentConfig& cfg, const Cell& cell, Index cell_index, Index trial);
/// Lambda under the configured policy.
double choose_lambda(const ExperimentConfig& cfg, const Cell& cell, const ProblemInstance& inst,
                     const RegularizerSpec& reg);

TrialRecord run_trial(const ExperimentConfig& cfg, const Cell& cell, Index cell_index, Index trial);

struct CellSummary {
  Cell cell;
  Index trials = 0;
  double median_err = 0.0;
  double mean_err = 0.0;
  double median_bound = 0.0;
  /// err_l2_sq > bound among trials with a finite bound
  double bound_violation_freq = 0.0;
  Index certificate_failures = 0;
  Index cone_failures = 0;
  Index nonconverged = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<Cell> cells;
  /// Cell-major, trial-minor.
  std::vector<TrialRecord> records;
  std::vector<CellSummary> summary;
};

/// Worker count: `requested` (hardware concurrency when 0), capped by the
/// MEST_THREADS environment variable when set.
Index resolve_threads(Index requested);

/// Runs every (cell, trial) pair; records come back in grid order whatever the
/// thread count.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Per-cell aggregation of records that share (n, p, s, q, s_G).
std::vector<CellSummary> summarize(const std::vector<Cell>& cells, const std::vector<TrialRecord>& records,
                                   Index trials_per_cell);

enum class RatePredictor { SLogPOverN, LqRate, GroupRate };

double predictor_value(RatePredictor pred, const Cell& cell, const ExperimentConfig& cfg);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  Index points = 0;
};

/// Least squares of log y on log x. Needs at least four points and
/// max x / min x >= min_span_ratio; throws std::invalid_argument otherwise.
RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double min_span_ratio = 10.0);

/// log(median err_l2_sq) against log(predictor) across cells.
RateFit rate_regression(const ExperimentReport& report, RatePredictor pred, double min_span_ratio = 10.0);

/// CSV header in schema order.
const std::vector<std::string>& csv_columns();
std::string to_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> from_csv(const std::string& text);
void write_csv(const std::string& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_csv(const std::string& path);
/// key = value text: configuration echo followed by one block per cell.
std::string summary_text(const ExperimentReport& report);
/// results.csv and summary.txt under `dir` (created when missing).
void emit(const ExperimentReport& report, const std::string& dir);

/// Whitespace-separated text with a key = value header; see README.
void write_instance(const std::string& path, const ProblemInstance& inst);
ProblemInstance read_instance(const std::string& path);

}  // namespace mest
