#include "fmnes/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fmnes/engine.hpp"

namespace fmnes {

namespace {

constexpr std::string_view kResamplingSuffix = "-r";

std::vector<double> sqrt_eigenvalues(const Matrix& transform) {
  const Matrix cov = linalg::symmetrize(transform * transform.transpose());
  const Vector values = linalg::sym_eigen(cov).values;
  std::vector<double> out(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, values(i)));
  }
  return out;
}

// Full round-trip precision for CSV numbers.
std::string number(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double value_or_inf(const nlohmann::json& j) {
  return j.is_null() ? kInfeasible : j.get<double>();
}

}  // namespace

std::string Strategy::name() const {
  std::string n(to_string(mode));
  if (resampling) n += kResamplingSuffix;
  return n;
}

Strategy Strategy::parse(std::string_view name) {
  Strategy s;
  if (name.ends_with(kResamplingSuffix) || name.ends_with("/r")) {
    s.resampling = true;
    name.remove_suffix(2);
  }
  s.mode = parse_strategy_mode(name);
  return s;
}

const std::vector<std::size_t>& lambda_grid() {
  static const std::vector<std::size_t> grid{4, 8, 12, 16, 20, 24, 28, 32, 40, 60, 80};
  return grid;
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw std::invalid_argument("experiment needs at least one trial");
  if (lambdas.empty()) throw std::invalid_argument("experiment needs at least one lambda");
  if (!(target > 0.0)) throw std::invalid_argument("target must be positive");
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  for (std::size_t lambda : lambdas) {
    if (lambda < 2 || lambda % 2 != 0) {
      throw std::invalid_argument("lambda must be even and at least 2, got " +
                                  std::to_string(lambda));
    }
    if (budget < lambda) {
      throw std::invalid_argument("budget " + std::to_string(budget) +
                                  " is smaller than lambda " + std::to_string(lambda));
    }
  }
  (void)make_benchmark(problem, dim);
}

StrategyConfig make_config(const ExperimentSpec& spec, std::size_t lambda) {
  StrategyConfig config = default_config(spec.strategy.mode, spec.dim, lambda);
  KeyValues rest = spec.config_overrides;
  apply_config_values(config, rest);
  if (!rest.empty()) {
    throw std::invalid_argument("unknown strategy config key '" + rest.begin()->first + "'");
  }
  if (config.dim != spec.dim || config.lambda != lambda) {
    throw std::invalid_argument("config overrides may not change dim or lambda");
  }
  config.validate();
  return config;
}

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::none:
      return "none";
    case FailureReason::budget_exhausted:
      return "budget_exhausted";
    case FailureReason::sigma_guard:
      return "sigma_guard";
    case FailureReason::resample_cap:
      return "resample_cap";
  }
  return "unknown";
}

FailureReason parse_failure_reason(std::string_view text) {
  for (auto r : {FailureReason::none, FailureReason::budget_exhausted, FailureReason::sigma_guard,
                 FailureReason::resample_cap}) {
    if (to_string(r) == text) return r;
  }
  throw std::invalid_argument("unknown failure reason '" + std::string(text) + "'");
}

double max_ridge_ratio(const TrialRecord& record) {
  double best = 1.0;
  for (const auto& p : record.eig_trajectory) {
    if (p.sqrt_eigenvalues.size() >= 2 && p.sqrt_eigenvalues[1] > 0.0) {
      best = std::max(best, p.sqrt_eigenvalues[0] / p.sqrt_eigenvalues[1]);
    }
  }
  return best;
}

TrialRecord run_trial(const ExperimentSpec& spec, std::size_t lambda, std::uint64_t seed) {
  const Problem problem = make_benchmark(spec.problem, spec.dim);
  Engine engine(make_config(spec, lambda), SearchState::initial(problem.init_mean, problem.init_sigma),
                seed);

  TrialRecord rec;
  rec.seed = seed;
  EvalCounter counter;

  const auto reached = [&] { return rec.best_value - problem.optimum_value < spec.target; };
  const auto track = [&](const std::vector<EvaluatedSolution>& pop) {
    for (const auto& s : pop) {
      if (s.feasible) rec.best_value = std::min(rec.best_value, s.value);
    }
  };
  const auto record_point = [&] {
    if (!spec.trajectory) return;
    rec.trajectory.push_back({counter.total, rec.best_value});
    rec.eig_trajectory.push_back({counter.total, sqrt_eigenvalues(engine.state().transform)});
  };

  record_point();
  while (true) {
    std::vector<EvaluatedSolution> pop;
    if (spec.strategy.resampling) {
      ResampleResult res = resample_ask(engine, problem, counter, spec.budget, spec.resample_cap);
      track(res.population);
      if (res.status != ResampleStatus::complete && !reached()) {
        rec.failure = res.status == ResampleStatus::cap_reached ? FailureReason::resample_cap
                                                                : FailureReason::budget_exhausted;
        break;
      }
      pop = std::move(res.population);
    } else {
      if (counter.total + lambda > spec.budget) {
        rec.failure = FailureReason::budget_exhausted;
        break;
      }
      pop = engine.ask();
      for (auto& s : pop) evaluate(problem, s, counter);
      track(pop);
    }
    if (reached()) {
      rec.success = true;
      break;
    }
    try {
      engine.tell(std::move(pop));
    } catch (const SigmaGuardError& e) {
      rec.failure = FailureReason::sigma_guard;
      rec.failure_detail = e.what();
      break;
    }
    record_point();
  }
  if (rec.success) rec.failure = FailureReason::none;
  rec.evals_used = counter.total;
  rec.infeasible_evals = counter.infeasible;
  rec.generations = engine.state().generation;
  return rec;
}

SummaryRow summarize(const ExperimentSpec& spec, std::size_t lambda,
                     const std::vector<TrialRecord>& records) {
  SummaryRow row;
  row.strategy = spec.strategy.name();
  row.problem = spec.problem;
  row.dim = spec.dim;
  row.lambda = lambda;
  row.trials = records.size();
  row.base_seed = spec.base_seed;

  std::vector<double> evals;
  for (const auto& r : records) {
    if (r.success) evals.push_back(static_cast<double>(r.evals_used));
  }
  row.n_success = evals.size();
  if (evals.empty()) {
    row.mean_evals = std::numeric_limits<double>::quiet_NaN();
    row.std_evals = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  double sum = 0.0;
  for (double e : evals) sum += e;
  row.mean_evals = sum / static_cast<double>(evals.size());
  double sq = 0.0;
  for (double e : evals) sq += (e - row.mean_evals) * (e - row.mean_evals);
  row.std_evals = evals.size() > 1 ? std::sqrt(sq / static_cast<double>(evals.size() - 1)) : 0.0;
  return row;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  for (std::size_t lambda : spec.lambdas) (void)make_config(spec, lambda);

  ExperimentResult result;
  result.spec = spec;
  result.runs.resize(spec.lambdas.size());
  for (auto& run : result.runs) run.records.resize(spec.trials);

  const std::size_t jobs = spec.lambdas.size() * spec.trials;
  std::size_t workers = spec.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, jobs);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  const auto work = [&] {
    for (std::size_t job = next++; job < jobs && !failed; job = next++) {
      const std::size_t li = job / spec.trials;
      const std::size_t trial = job % spec.trials;
      try {
        TrialRecord rec = run_trial(spec, spec.lambdas[li], spec.base_seed + trial);
        rec.trial = trial;
        result.runs[li].records[trial] = std::move(rec);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  for (std::size_t li = 0; li < spec.lambdas.size(); ++li) {
    result.runs[li].summary = summarize(spec, spec.lambdas[li], result.runs[li].records);
  }
  return result;
}

void write_csv_header(std::ostream& out) {
  out << "strategy,problem,d,lambda,trials,n_success,mean_evals,std_evals,base_seed\n";
}

void write_csv_row(std::ostream& out, const SummaryRow& row) {
  out << row.strategy << ',' << row.problem << ',' << row.dim << ',' << row.lambda << ','
      << row.trials << ',' << row.n_success << ',' << number(row.mean_evals) << ','
      << number(row.std_evals) << ',' << row.base_seed << '\n';
}

void write_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  write_csv_header(out);
  for (const auto& row : rows) write_csv_row(out, row);
}

nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json j{
      {"trial", r.trial},
      {"seed", r.seed},
      {"success", r.success},
      {"evals_used", r.evals_used},
      {"infeasible_evals", r.infeasible_evals},
      {"generations", r.generations},
      {"best_value", finite_or_null(r.best_value)},
      {"failure_reason", to_string(r.failure)},
  };
  if (!r.failure_detail.empty()) j["failure_detail"] = r.failure_detail;
  if (!r.trajectory.empty()) {
    auto& t = j["trajectory"] = nlohmann::json::array();
    for (const auto& p : r.trajectory) t.push_back({p.evals, finite_or_null(p.best_value)});
  }
  if (!r.eig_trajectory.empty()) {
    auto& t = j["eig_trajectory"] = nlohmann::json::array();
    for (const auto& p : r.eig_trajectory) {
      t.push_back({{"evals", p.evals}, {"sqrt_eigenvalues", p.sqrt_eigenvalues}});
    }
  }
  return j;
}

TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.trial = j.at("trial").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.success = j.at("success").get<bool>();
  r.evals_used = j.at("evals_used").get<std::uint64_t>();
  r.infeasible_evals = j.value("infeasible_evals", std::uint64_t{0});
  r.generations = j.value("generations", std::uint64_t{0});
  r.best_value = value_or_inf(j.at("best_value"));
  r.failure = parse_failure_reason(j.at("failure_reason").get<std::string>());
  r.failure_detail = j.value("failure_detail", std::string{});
  if (const auto it = j.find("trajectory"); it != j.end()) {
    for (const auto& p : *it) r.trajectory.push_back({p.at(0).get<std::uint64_t>(), value_or_inf(p.at(1))});
  }
  if (const auto it = j.find("eig_trajectory"); it != j.end()) {
    for (const auto& p : *it) {
      r.eig_trajectory.push_back({p.at("evals").get<std::uint64_t>(),
                                  p.at("sqrt_eigenvalues").get<std::vector<double>>()});
    }
  }
  return r;
}

nlohmann::json to_json(const SummaryRow& row) {
  return {{"strategy", row.strategy},   {"problem", row.problem},
          {"d", row.dim},               {"lambda", row.lambda},
          {"trials", row.trials},       {"n_success", row.n_success},
          {"mean_evals", finite_or_null(row.mean_evals)},
          {"std_evals", finite_or_null(row.std_evals)},
          {"base_seed", row.base_seed}};
}

SummaryRow summary_from_json(const nlohmann::json& j) {
  SummaryRow row;
  row.strategy = j.at("strategy").get<std::string>();
  row.problem = j.at("problem").get<std::string>();
  row.dim = j.at("d").get<std::size_t>();
  row.lambda = j.at("lambda").get<std::size_t>();
  row.trials = j.at("trials").get<std::size_t>();
  row.n_success = j.at("n_success").get<std::size_t>();
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  row.mean_evals = j.at("mean_evals").is_null() ? nan : j.at("mean_evals").get<double>();
  row.std_evals = j.at("std_evals").is_null() ? nan : j.at("std_evals").get<double>();
  row.base_seed = j.at("base_seed").get<std::uint64_t>();
  return row;
}

nlohmann::json to_json(const ExperimentResult& result) {
  const ExperimentSpec& s = result.spec;
  nlohmann::json j;
  j["spec"] = {{"strategy", s.strategy.name()}, {"problem", s.problem}, {"d", s.dim},
               {"lambdas", s.lambdas},          {"trials", s.trials},   {"budget", s.budget},
               {"target", s.target},            {"base_seed", s.base_seed},
               {"trajectory", s.trajectory},    {"config_overrides", s.config_overrides}};
  auto& runs = j["runs"] = nlohmann::json::array();
  for (const auto& run : result.runs) {
    nlohmann::json r;
    r["summary"] = to_json(run.summary);
    auto& trials = r["trials"] = nlohmann::json::array();
    for (const auto& rec : run.records) trials.push_back(to_json(rec));
    runs.push_back(std::move(r));
  }
  return j;
}

ExperimentResult experiment_from_json(const nlohmann::json& j) {
  ExperimentResult result;
  const auto& s = j.at("spec");
  result.spec.strategy = Strategy::parse(s.at("strategy").get<std::string>());
  result.spec.problem = s.at("problem").get<std::string>();
  result.spec.dim = s.at("d").get<std::size_t>();
  result.spec.lambdas = s.at("lambdas").get<std::vector<std::size_t>>();
  result.spec.trials = s.at("trials").get<std::size_t>();
  result.spec.budget = s.at("budget").get<std::uint64_t>();
  result.spec.target = s.at("target").get<double>();
  result.spec.base_seed = s.at("base_seed").get<std::uint64_t>();
  result.spec.trajectory = s.value("trajectory", false);
  result.spec.config_overrides = s.value("config_overrides", KeyValues{});
  for (const auto& r : j.at("runs")) {
    LambdaResult run;
    run.summary = summary_from_json(r.at("summary"));
    for (const auto& t : r.at("trials")) run.records.push_back(trial_from_json(t));
    result.runs.push_back(std::move(run));
  }
  return result;
}

void write_eig_plot(std::ostream& out, const TrialRecord& record, std::string_view title) {
  if (record.eig_trajectory.empty()) {
    throw std::invalid_argument("record has no eigenvalue trajectory (trajectory disabled)");
  }
  constexpr double width = 800, height = 480;
  constexpr double left = 70, right = 80, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  const double max_evals =
      std::max<double>(1.0, static_cast<double>(record.eig_trajectory.back().evals));
  double eig_max = 0.0;
  for (const auto& p : record.eig_trajectory) {
    for (double v : p.sqrt_eigenvalues) eig_max = std::max(eig_max, v);
  }
  eig_max = eig_max > 0.0 ? eig_max * 1.05 : 1.0;

  double log_lo = std::numeric_limits<double>::infinity();
  double log_hi = -std::numeric_limits<double>::infinity();
  for (const auto& p : record.trajectory) {
    if (std::isfinite(p.best_value) && p.best_value > 0.0) {
      const double l = std::log10(p.best_value);
      log_lo = std::min(log_lo, l);
      log_hi = std::max(log_hi, l);
    }
  }
  if (!std::isfinite(log_lo)) {
    log_lo = -10.0;
    log_hi = 0.0;
  }
  log_lo = std::floor(log_lo);
  log_hi = std::max(std::ceil(log_hi), log_lo + 1.0);

  const auto px = [&](double evals) { return left + plot_w * evals / max_evals; };
  const auto py_eig = [&](double v) { return top + plot_h * (1.0 - v / eig_max); };
  const auto py_log = [&](double l) { return top + plot_h * (1.0 - (l - log_lo) / (log_hi - log_lo)); };

  out << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << xml_escape(title) << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

  // axes ticks
  for (int k = 0; k <= 5; ++k) {
    const double e = max_evals * k / 5.0;
    out << "<text x=\"" << px(e) << "\" y=\"" << top + plot_h + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << e << "</text>\n";
    const double v = eig_max * k / 5.0;
    out << "<text x=\"" << left - 6 << "\" y=\"" << py_eig(v) + 4
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"red\">" << v << "</text>\n";
  }
  for (double l = log_lo; l <= log_hi; l += std::max(1.0, std::ceil((log_hi - log_lo) / 8.0))) {
    out << "<text x=\"" << left + plot_w + 6 << "\" y=\"" << py_log(l) + 4
        << "\" font-size=\"11\" fill=\"blue\">1e" << l << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">evaluations</text>\n";
  out << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" font-size=\"12\" fill=\"red\" "
      << "transform=\"rotate(-90 16 " << top + plot_h / 2
      << ")\" text-anchor=\"middle\">sqrt(eigenvalue of B B^T)</text>\n";
  out << "<text x=\"" << width - 14 << "\" y=\"" << top + plot_h / 2
      << "\" font-size=\"12\" fill=\"blue\" transform=\"rotate(90 " << width - 14 << ' '
      << top + plot_h / 2 << ")\" text-anchor=\"middle\">best value</text>\n";

  const std::size_t curves = record.eig_trajectory.front().sqrt_eigenvalues.size();
  for (std::size_t k = 0; k < curves; ++k) {
    out << "<polyline class=\"eigenvalue\" fill=\"none\" stroke=\"red\" stroke-width=\"1\" points=\"";
    for (const auto& p : record.eig_trajectory) {
      if (k < p.sqrt_eigenvalues.size()) {
        out << px(static_cast<double>(p.evals)) << ',' << py_eig(p.sqrt_eigenvalues[k]) << ' ';
      }
    }
    out << "\"/>\n";
  }
  out << "<polyline class=\"best-value\" fill=\"none\" stroke=\"blue\" stroke-width=\"1.5\" points=\"";
  for (const auto& p : record.trajectory) {
    if (std::isfinite(p.best_value) && p.best_value > 0.0) {
      out << px(static_cast<double>(p.evals)) << ',' << py_log(std::log10(p.best_value)) << ' ';
    }
  }
  out << "\"/>\n</svg>\n";
}

}  // namespace fmnes
