// Command-line front end: run / sweep experiments, plot eigenvalue
// trajectories, and dump strategy configurations.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fmnes/distribution.hpp"
#include "fmnes/harness.hpp"

namespace {

struct RunOptions {
  std::string config_path;
  std::string strategy;
  std::string problem;
  std::size_t dim = 0;
  std::vector<std::size_t> lambdas;
  std::size_t trials = 0;
  std::uint64_t budget = 0;
  double target = 0.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  bool trajectory = false;
  std::size_t workers = 0;
};

std::vector<std::size_t> parse_lambda_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  return out;
}

// Experiment-level keys of a run config; everything else goes to the strategy config.
fmnes::ExperimentSpec spec_from_config(fmnes::KeyValues values) {
  fmnes::ExperimentSpec spec;
  const auto take = [&](const char* key) -> std::optional<std::string> {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    std::string v = it->second;
    values.erase(it);
    return v;
  };
  if (auto v = take("strategy")) spec.strategy = fmnes::Strategy::parse(*v);
  if (auto v = take("problem")) spec.problem = *v;
  if (auto v = take("dim")) spec.dim = std::stoul(*v);
  if (auto v = take("lambda")) spec.lambdas = parse_lambda_list(*v);
  if (auto v = take("trials")) spec.trials = std::stoul(*v);
  if (auto v = take("budget")) spec.budget = std::stoull(*v);
  if (auto v = take("target")) spec.target = std::stod(*v);
  if (auto v = take("seed")) spec.base_seed = std::stoull(*v);
  if (auto v = take("trajectory")) spec.trajectory = (*v == "true" || *v == "1");
  if (auto v = take("workers")) spec.workers = std::stoul(*v);
  if (auto v = take("resample_cap")) spec.resample_cap = std::stoull(*v);
  spec.config_overrides = std::move(values);
  return spec;
}

fmnes::ExperimentSpec build_spec(const RunOptions& o, bool sweep) {
  fmnes::ExperimentSpec spec;
  if (!o.config_path.empty()) spec = spec_from_config(fmnes::read_key_values_file(o.config_path));
  if (sweep && o.lambdas.empty() && o.config_path.empty()) spec.lambdas = fmnes::lambda_grid();
  if (!o.strategy.empty()) spec.strategy = fmnes::Strategy::parse(o.strategy);
  if (!o.problem.empty()) spec.problem = o.problem;
  if (o.dim) spec.dim = o.dim;
  if (!o.lambdas.empty()) spec.lambdas = o.lambdas;
  if (o.trials) spec.trials = o.trials;
  if (o.budget) spec.budget = o.budget;
  if (o.target > 0.0) spec.target = o.target;
  if (o.seed_set) spec.base_seed = o.seed;
  if (o.trajectory) spec.trajectory = true;
  if (o.workers) spec.workers = o.workers;
  return spec;
}

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_path, "key = value experiment/strategy config file");
  cmd->add_option("--strategy", o.strategy,
                  "fm-nes, dx-nes-ic, xnes, method-a, method-b, method-c; append -r for resampling");
  cmd->add_option("--problem", o.problem, "benchmark name, e.g. rosenbrock or ic-cigar");
  cmd->add_option("--dim", o.dim, "problem dimension");
  cmd->add_option("--lambda", o.lambdas, "sample size(s)")->delimiter(',');
  cmd->add_option("--trials", o.trials, "trials per sample size");
  cmd->add_option("--budget", o.budget, "evaluation budget per trial");
  cmd->add_option("--target", o.target, "success threshold on the best value");
  cmd->add_option("--seed", o.seed, "base seed; trial k uses seed + k")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--out", o.out, "output prefix: writes <out>.csv and <out>.json");
  cmd->add_flag("--trajectory", o.trajectory, "record per-generation best value and eigenvalues");
  cmd->add_option("--workers", o.workers, "worker threads (default: hardware concurrency)");
}

int run_experiment_command(const RunOptions& o, bool sweep) {
  const fmnes::ExperimentSpec spec = build_spec(o, sweep);
  const fmnes::ExperimentResult result = fmnes::run_experiment(spec);

  std::vector<fmnes::SummaryRow> rows;
  for (const auto& run : result.runs) rows.push_back(run.summary);

  if (o.out.empty()) {
    fmnes::write_csv(std::cout, rows);
    return 0;
  }
  std::ofstream csv(o.out + ".csv");
  std::ofstream json(o.out + ".json");
  if (!csv || !json) throw std::runtime_error("cannot write output files with prefix '" + o.out + "'");
  fmnes::write_csv(csv, rows);
  json << fmnes::to_json(result).dump(1) << '\n';
  for (const auto& row : rows) {
    std::printf("%-12s %-14s d=%zu lambda=%-3zu success %zu/%zu  mean evals %.4g  std %.4g\n",
                row.strategy.c_str(), row.problem.c_str(), row.dim, row.lambda, row.n_success,
                row.trials, row.mean_evals, row.std_evals);
  }
  std::printf("wrote %s.csv and %s.json\n", o.out.c_str(), o.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural evolution strategies for unconstrained and implicitly constrained problems"};
  app.require_subcommand(1);

  RunOptions run_opts, sweep_opts;
  auto* run = app.add_subcommand("run", "run an experiment (one row per lambda)");
  add_run_options(run, run_opts);
  auto* sweep = app.add_subcommand("sweep", "run an experiment over the lambda grid");
  add_run_options(sweep, sweep_opts);

  std::string plot_in, plot_out;
  std::size_t plot_run = 0, plot_trial = 0;
  auto* plot = app.add_subcommand("plot", "render the eigenvalue/best-value plot of one trial");
  plot->add_option("--in", plot_in, "experiment JSON written by run --trajectory")->required();
  plot->add_option("--run", plot_run, "index of the lambda run inside the JSON");
  plot->add_option("--trial", plot_trial, "trial index");
  plot->add_option("--out", plot_out, "SVG output path")->required();

  std::string dump_strategy = "fm-nes", dump_out;
  std::size_t dump_dim = 40, dump_lambda = 16;
  auto* dump = app.add_subcommand("dump-config", "print the default strategy configuration");
  dump->add_option("--strategy", dump_strategy, "strategy name");
  dump->add_option("--dim", dump_dim, "problem dimension");
  dump->add_option("--lambda", dump_lambda, "sample size");
  dump->add_option("--out", dump_out, "write to a file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_experiment_command(run_opts, false);
    if (sweep->parsed()) return run_experiment_command(sweep_opts, true);
    if (plot->parsed()) {
      std::ifstream in(plot_in);
      if (!in) throw std::runtime_error("cannot open '" + plot_in + "'");
      const fmnes::ExperimentResult result =
          fmnes::experiment_from_json(nlohmann::json::parse(in));
      if (plot_run >= result.runs.size() || plot_trial >= result.runs[plot_run].records.size()) {
        throw std::out_of_range("no such run/trial in '" + plot_in + "'");
      }
      const auto& summary = result.runs[plot_run].summary;
      std::ofstream out(plot_out);
      if (!out) throw std::runtime_error("cannot write '" + plot_out + "'");
      const std::string title = summary.strategy + " on " + summary.problem +
                                " (d=" + std::to_string(summary.dim) +
                                ", lambda=" + std::to_string(summary.lambda) + ")";
      fmnes::write_eig_plot(out, result.runs[plot_run].records[plot_trial], title);
      return 0;
    }
    if (dump->parsed()) {
      const fmnes::Strategy strategy = fmnes::Strategy::parse(dump_strategy);
      const fmnes::StrategyConfig config =
          fmnes::default_config(strategy.mode, dump_dim, dump_lambda);
      std::ostringstream text;
      fmnes::write_config(text, config, strategy.mode);
      text << "strategy = " << strategy.name() << '\n';
      if (dump_out.empty()) {
        std::cout << text.str();
      } else {
        std::ofstream out(dump_out);
        if (!out) throw std::runtime_error("cannot write '" + dump_out + "'");
        out << text.str();
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
