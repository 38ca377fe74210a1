#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmnes/distribution.hpp"
#include "fmnes/problems.hpp"

namespace fmnes {

/// A strategy mode, optionally wrapped in the resampling constraint handler
/// (named with an "-r" suffix, e.g. "xnes-r").
struct Strategy {
  StrategyMode mode = StrategyMode::fm_nes;
  bool resampling = false;

  [[nodiscard]] std::string name() const;
  static Strategy parse(std::string_view name);

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// Sample sizes searched when picking the best lambda per method.
const std::vector<std::size_t>& lambda_grid();

struct ExperimentSpec {
  Strategy strategy;
  std::string problem = "sphere";
  std::size_t dim = 40;
  std::vector<std::size_t> lambdas{8};
  std::size_t trials = 50;
  std::uint64_t budget = 1'000'000;
  double target = 1e-10;
  std::uint64_t base_seed = 0;
  bool trajectory = false;
  std::uint64_t resample_cap = kDefaultResampleCap;
  KeyValues config_overrides;  // StrategyConfig keys applied over the defaults
  std::size_t workers = 0;     // 0: one per hardware thread

  void validate() const;
};

/// Builds the engine configuration for one sample size: defaults for the mode,
/// then the overrides. Unknown override keys are rejected.
StrategyConfig make_config(const ExperimentSpec& spec, std::size_t lambda);

enum class FailureReason { none, budget_exhausted, sigma_guard, resample_cap };

std::string_view to_string(FailureReason reason);
FailureReason parse_failure_reason(std::string_view text);

struct TrajectoryPoint {
  std::uint64_t evals = 0;
  double best_value = kInfeasible;

  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct EigenPoint {
  std::uint64_t evals = 0;
  std::vector<double> sqrt_eigenvalues;  // of B B^T, descending

  friend bool operator==(const EigenPoint&, const EigenPoint&) = default;
};

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::uint64_t evals_used = 0;
  std::uint64_t infeasible_evals = 0;
  std::uint64_t generations = 0;
  double best_value = kInfeasible;
  FailureReason failure = FailureReason::none;
  std::string failure_detail;
  std::vector<TrajectoryPoint> trajectory;  // one point per generation when enabled
  std::vector<EigenPoint> eig_trajectory;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Largest sqrt(l1 / l2) seen along the eigenvalue trajectory.
double max_ridge_ratio(const TrialRecord& record);

TrialRecord run_trial(const ExperimentSpec& spec, std::size_t lambda, std::uint64_t seed);

struct SummaryRow {
  std::string strategy;
  std::string problem;
  std::size_t dim = 0;
  std::size_t lambda = 0;
  std::size_t trials = 0;
  std::size_t n_success = 0;
  double mean_evals = 0.0;  // over successful trials; NaN when none
  double std_evals = 0.0;   // sample standard deviation over successful trials
  std::uint64_t base_seed = 0;
};

SummaryRow summarize(const ExperimentSpec& spec, std::size_t lambda,
                     const std::vector<TrialRecord>& records);

struct LambdaResult {
  SummaryRow summary;
  std::vector<TrialRecord> records;  // indexed by trial
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<LambdaResult> runs;  // one per lambda, in spec order
};

/// Runs spec.trials trials per lambda with seeds base_seed + trial index.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// ---- output ------------------------------------------------------------

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const SummaryRow& row);
void write_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

nlohmann::json to_json(const TrialRecord& record);
TrialRecord trial_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SummaryRow& row);
SummaryRow summary_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentResult& result);
/// Reads back the summaries and trial records; the spec is restored as far as it was recorded.
ExperimentResult experiment_from_json(const nlohmann::json& j);

/// Dual-axis SVG: sqrt eigenvalues of B B^T (left, linear) and best value
/// (right, log10) against evaluations. Throws std::invalid_argument when the
/// record carries no eigenvalue trajectory.
void write_eig_plot(std::ostream& out, const TrialRecord& record, std::string_view title);

}  // namespace fmnes
