#include "fmnes/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fmnes {

namespace {

// Ratio of a learning-rate schedule at the feasible count to its value at
// the full sample size.
double feasible_scale(double (*schedule)(std::size_t, double), std::size_t dim,
                      std::size_t feasible, std::size_t lambda) {
  return schedule(dim, static_cast<double>(feasible)) / schedule(dim, static_cast<double>(lambda));
}

void validate_population(const std::vector<EvaluatedSolution>& pop, const StrategyConfig& config) {
  if (pop.size() != config.lambda) {
    std::ostringstream msg;
    msg << "population has " << pop.size() << " solutions, expected lambda = " << config.lambda;
    throw std::invalid_argument(msg.str());
  }
  const auto d = static_cast<Eigen::Index>(config.dim);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto& s = pop[i];
    if (s.z.size() != d || s.x.size() != d) {
      throw std::invalid_argument("solution " + std::to_string(i) + " has the wrong dimension");
    }
    if (s.feasible && !std::isfinite(s.value)) {
      throw std::invalid_argument("solution " + std::to_string(i) +
                                  " is feasible but has a non-finite objective value");
    }
    if (!s.feasible && s.value != kInfeasible) {
      throw std::invalid_argument("solution " + std::to_string(i) +
                                  " is infeasible but carries a finite objective value");
    }
  }
}

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::movement:
      return "movement";
    case Phase::stagnation:
      return "stagnation";
    case Phase::convergence:
      return "convergence";
  }
  return "unknown";
}

EvaluatedSolution make_solution(const SearchState& state, Vector z) {
  EvaluatedSolution s;
  s.x = state.mean + state.sigma * (state.transform * z);
  s.z_norm = z.norm();
  s.z = std::move(z);
  return s;
}

std::vector<EvaluatedSolution> ask(const SearchState& state, std::size_t lambda, Rng& rng) {
  std::vector<EvaluatedSolution> pop;
  pop.reserve(lambda);
  const auto d = static_cast<Eigen::Index>(state.dim());
  for (std::size_t i = 0; i < lambda / 2; ++i) {
    Vector z = rng.normal_vector(d);
    Vector mirrored = -z;
    pop.push_back(make_solution(state, std::move(z)));
    pop.push_back(make_solution(state, std::move(mirrored)));
  }
  return pop;
}

bool preferred(const EvaluatedSolution& a, const EvaluatedSolution& b) {
  if (a.feasible && b.feasible) return a.value < b.value;
  if (a.feasible != b.feasible) return a.feasible;
  return a.z_norm < b.z_norm;
}

void rank(std::vector<EvaluatedSolution>& pop) {
  std::stable_sort(pop.begin(), pop.end(), preferred);
}

bool maybe_reset(SearchState& state, const std::vector<EvaluatedSolution>& pop,
                 const StrategyConfig& config) {
  if (!state.unconstrained_so_far) return false;
  const bool any_infeasible =
      std::any_of(pop.begin(), pop.end(), [](const auto& s) { return !s.feasible; });
  if (!any_infeasible) return false;
  if (config.enable_reset) {
    state.transform = state.initial_transform;
    state.path_sigma.setZero();
    state.path_c.setZero();
    state.gamma = 1.0;
  }
  state.unconstrained_so_far = false;
  return true;
}

void update_p_sigma(SearchState& state, const std::vector<EvaluatedSolution>& sorted,
                    const StrategyConfig& config, const DerivedParams& params) {
  Vector weighted = Vector::Zero(static_cast<Eigen::Index>(state.dim()));
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    weighted += params.w_rank(static_cast<Eigen::Index>(i)) * sorted[i].z;
  }
  const double c = config.c_sigma;
  state.path_sigma =
      (1.0 - c) * state.path_sigma + std::sqrt(c * (2.0 - c) * params.mu_eff) * weighted;
}

Phase detect_phase(const Vector& path_sigma, std::size_t dim) {
  const double norm = path_sigma.norm();
  const double expected = chi_d(dim);
  if (norm >= expected) return Phase::movement;
  if (norm >= 0.1 * expected) return Phase::stagnation;
  return Phase::convergence;
}

Rates select_weights_and_rates(Phase phase, const std::vector<EvaluatedSolution>& sorted,
                               const StrategyConfig& config, const DerivedParams& params) {
  const std::size_t feasible = static_cast<std::size_t>(
      std::count_if(sorted.begin(), sorted.end(), [](const auto& s) { return s.feasible; }));
  const bool scale = config.scale_by_feasible_count;
  const double b_scale =
      scale ? feasible_scale(eta_B_schedule, config.dim, feasible, config.lambda) : 1.0;

  Rates r;
  r.c1 = scale ? config.c1 * static_cast<double>(feasible) / static_cast<double>(config.lambda)
               : config.c1;
  if (!config.enable_phase_switching) {
    r.weights = params.w_rank;
    r.eta_sigma = config.eta_sigma_move;
    r.eta_B = config.eta_B_move * b_scale;
    return r;
  }

  switch (phase) {
    case Phase::movement: {
      std::vector<double> norms(sorted.size());
      std::transform(sorted.begin(), sorted.end(), norms.begin(),
                     [](const auto& s) { return s.z_norm; });
      double alpha = config.alpha;
      if (scale) {
        alpha *= std::sqrt(static_cast<double>(feasible) / static_cast<double>(config.lambda));
      }
      r.weights = compute_distance_weights(norms, alpha);
      r.eta_sigma = config.eta_sigma_move;
      r.eta_B = config.eta_B_move * b_scale;
      break;
    }
    case Phase::stagnation:
      r.weights = params.w_rank;
      r.eta_sigma = config.eta_sigma_stag *
                    (scale ? feasible_scale(eta_sigma_stag_schedule, config.dim, feasible,
                                            config.lambda)
                           : 1.0);
      r.eta_B = config.eta_B_stag * b_scale;
      break;
    case Phase::convergence:
      r.weights = params.w_rank;
      r.eta_sigma = config.eta_sigma_conv *
                    (scale ? feasible_scale(eta_sigma_conv_schedule, config.dim, feasible,
                                            config.lambda)
                           : 1.0);
      r.eta_B = config.eta_B_conv * b_scale;
      break;
  }
  return r;
}

NaturalGradients estimate_gradients(const std::vector<EvaluatedSolution>& sorted,
                                    const Vector& weights) {
  const Eigen::Index d = sorted.empty() ? 0 : sorted.front().z.size();
  const auto n = static_cast<Eigen::Index>(sorted.size());
  Matrix zs(d, n);
  for (Eigen::Index i = 0; i < n; ++i) zs.col(i) = sorted[static_cast<std::size_t>(i)].z;

  NaturalGradients g;
  g.delta = zs * weights;
  g.moment = linalg::symmetrize(zs * weights.asDiagonal() * zs.transpose());
  g.moment.diagonal().array() -= weights.sum();
  g.sigma = g.moment.trace() / static_cast<double>(d);
  g.shape = g.moment;
  g.shape.diagonal().array() -= g.sigma;
  return g;
}

void apply_updates(SearchState& state, const NaturalGradients& grads, const Rates& rates,
                   double eta_m) {
  state.mean += eta_m * state.sigma * (state.transform * grads.delta);
  state.sigma *= std::exp(rates.eta_sigma * grads.sigma / 2.0);
  state.transform = state.transform * linalg::sym_exp(rates.eta_B / 2.0 * grads.shape);
}

void update_p_c(SearchState& state, const Matrix& old_transform, const Vector& grad_delta,
                const StrategyConfig& config, const DerivedParams& params) {
  const double c = config.c_c;
  state.path_c = (1.0 - c) * state.path_c +
                 std::sqrt(c * (2.0 - c) * params.mu_eff) * (old_transform * grad_delta);
}

bool emphasize_expansion(SearchState& state, const Matrix& old_transform, Phase phase,
                         const StrategyConfig& config) {
  const Matrix old_cov = linalg::symmetrize(old_transform * old_transform.transpose());
  const Matrix new_cov = linalg::symmetrize(state.transform * state.transform.transpose());
  const linalg::EigenDecomposition eig = linalg::sym_eigen(old_cov);

  const Eigen::Index d = old_cov.rows();
  Vector tau(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto e = eig.vectors.col(i);
    tau(i) = e.dot(new_cov * e) / e.dot(old_cov * e) - 1.0;
  }
  const double tau_max = tau.maxCoeff();
  state.gamma = std::max((1.0 - config.c_gamma) * state.gamma +
                             config.c_gamma * std::sqrt(std::max(0.0, 1.0 + config.d_gamma * tau_max)),
                         1.0);

  if (phase != Phase::movement) return false;

  Matrix q = Matrix::Identity(d, d);
  Eigen::Index expanded = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (tau(i) > 0.0) {
      const auto e = eig.vectors.col(i);
      q += (state.gamma - 1.0) * e * e.transpose();
      ++expanded;
    }
  }
  if (expanded == 0) return false;
  // det(Q) = gamma^k for k expanded orthonormal directions.
  const double root = std::pow(state.gamma, static_cast<double>(expanded) / static_cast<double>(d));
  state.sigma *= root;
  state.transform = q * state.transform / root;
  return true;
}

double ridge_ratio(const Matrix& transform) {
  const Matrix cov = linalg::symmetrize(transform * transform.transpose());
  if (cov.rows() < 2) return 1.0;
  const Vector values = linalg::sym_eigen(cov).values;
  return std::sqrt(values(0) / values(1));
}

bool rank_one_condition(const SearchState& state, const StrategyConfig& config) {
  if (!config.enable_rank_one) return false;
  if (!config.enable_ridge_condition || state.unconstrained_so_far) return true;
  return ridge_ratio(state.transform) > config.beta;
}

void rank_one_update(SearchState& state, const Matrix& old_transform, double c1) {
  const Eigen::Index d = state.transform.rows();
  const Vector direction = linalg::inverse(old_transform) * state.path_c;
  Matrix r = direction * direction.transpose();
  r.diagonal().array() -= 1.0;
  Matrix r_shape = r;
  r_shape.diagonal().array() -= r.trace() / static_cast<double>(d);
  state.transform = state.transform * linalg::sym_exp(c1 / 2.0 * r_shape);
}

StepReport step(SearchState& state, std::vector<EvaluatedSolution> pop,
                const StrategyConfig& config, const DerivedParams& params) {
  validate_population(pop, config);
  for (auto& s : pop) s.z_norm = s.z.norm();
  rank(pop);

  StepReport report;
  report.feasible = static_cast<std::size_t>(
      std::count_if(pop.begin(), pop.end(), [](const auto& s) { return s.feasible; }));
  report.first_infeasible = maybe_reset(state, pop, config);
  report.reset = report.first_infeasible && config.enable_reset;

  update_p_sigma(state, pop, config, params);
  report.phase = detect_phase(state.path_sigma, config.dim);
  const Rates rates = select_weights_and_rates(report.phase, pop, config, params);
  const NaturalGradients grads = estimate_gradients(pop, rates.weights);

  const Matrix old_transform = state.transform;
  apply_updates(state, grads, rates, config.eta_m);
  update_p_c(state, old_transform, grads.delta, config, params);

  if (config.enable_expansion) {
    report.expanded = emphasize_expansion(state, old_transform, report.phase, config);
  }
  if (rank_one_condition(state, config)) {
    rank_one_update(state, old_transform, rates.c1);
    report.rank_one = true;
  }

  if (!std::isfinite(state.sigma) || state.sigma < kSigmaMin || state.sigma > kSigmaMax) {
    std::ostringstream msg;
    msg << "step size left the guard band at generation " << state.generation
        << ": sigma = " << state.sigma;
    throw SigmaGuardError(msg.str());
  }
  const double det_b = linalg::det(state.transform);
  if (!state.mean.allFinite() || !(std::abs(det_b - 1.0) <= kDetGuardTol)) {
    std::ostringstream msg;
    msg << "transform degenerated at generation " << state.generation << ": |det(B) - 1| = " << std::abs(det_b - 1.0);
    throw SigmaGuardError(msg.str());
  }
  ++state.generation;
  return report;
}

Engine::Engine(StrategyConfig config, SearchState initial, std::uint64_t seed)
    : config_(std::move(config)), state_(std::move(initial)), rng_(seed) {
  config_.validate();
  if (state_.dim() != config_.dim) {
    throw std::invalid_argument("initial state dimension does not match config.dim");
  }
  params_ = derive_params(config_);
}

std::vector<EvaluatedSolution> Engine::ask() { return fmnes::ask(state_, config_.lambda, rng_); }

EvaluatedSolution Engine::sample() {
  return make_solution(state_, rng_.normal_vector(static_cast<Eigen::Index>(config_.dim)));
}

StepReport Engine::tell(std::vector<EvaluatedSolution> pop) {
  return step(state_, std::move(pop), config_, params_);
}

}  // namespace fmnes
