#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmnes/distribution.hpp"
#include "fmnes/linalg.hpp"
#include "fmnes/rng.hpp"

namespace fmnes {

/// Objective value carried by infeasible solutions.
inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

// Step sizes outside this band abort the run.
inline constexpr double kSigmaMin = 1e-250;
inline constexpr double kSigmaMax = 1e250;
// Larger drift of det(B) from 1 means B has lost precision; the run is aborted.
inline constexpr double kDetGuardTol = 1e-6;

struct EvaluatedSolution {
  Vector z;  // latent draw
  Vector x;  // mean + sigma * B * z
  double value = kInfeasible;
  bool feasible = false;
  double z_norm = 0.0;

  void set_feasible(double v) {
    value = v;
    feasible = true;
  }
  void set_infeasible() {
    value = kInfeasible;
    feasible = false;
  }
};

enum class Phase { movement, stagnation, convergence };

std::string_view to_string(Phase phase);

struct NaturalGradients {
  Vector delta;   // G_delta
  Matrix moment;  // G_M
  double sigma = 0.0;
  Matrix shape;  // G_B, traceless
};

struct Rates {
  Vector weights;
  double eta_sigma = 0.0;
  double eta_B = 0.0;
  double c1 = 0.0;  // rank-one rate, scaled by the feasible fraction when enabled
};

/// Thrown when sigma leaves [kSigmaMin, kSigmaMax], or when the state degenerates
/// numerically (non-finite mean, |det(B) - 1| > kDetGuardTol).
class SigmaGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- generation building blocks, in the order step() applies them --------

EvaluatedSolution make_solution(const SearchState& state, Vector z);

/// lambda/2 mirrored pairs: entries 2k and 2k+1 carry z and -z.
std::vector<EvaluatedSolution> ask(const SearchState& state, std::size_t lambda, Rng& rng);

/// Preference order: feasible by ascending value, then infeasible by ascending
/// ||z||. Stable for exact ties.
void rank(std::vector<EvaluatedSolution>& pop);
bool preferred(const EvaluatedSolution& a, const EvaluatedSolution& b);

/// On the first generation containing an infeasible sample the
/// "unconstrained so far" flag is cleared; with enable_reset the shape is
/// also restored (B = B(0), p_sigma = p_c = 0, gamma = 1). Returns true when
/// the flag flipped.
bool maybe_reset(SearchState& state, const std::vector<EvaluatedSolution>& pop,
                 const StrategyConfig& config);

void update_p_sigma(SearchState& state, const std::vector<EvaluatedSolution>& sorted,
                    const StrategyConfig& config, const DerivedParams& params);

Phase detect_phase(const Vector& path_sigma, std::size_t dim);

Rates select_weights_and_rates(Phase phase, const std::vector<EvaluatedSolution>& sorted,
                               const StrategyConfig& config, const DerivedParams& params);

NaturalGradients estimate_gradients(const std::vector<EvaluatedSolution>& sorted,
                                    const Vector& weights);

void apply_updates(SearchState& state, const NaturalGradients& grads, const Rates& rates,
                   double eta_m);

/// p_c update using the pre-update transform `old_transform`.
void update_p_c(SearchState& state, const Matrix& old_transform, const Vector& grad_delta,
                const StrategyConfig& config, const DerivedParams& params);

/// Updates gamma from the second-moment change along the eigenvectors of
/// B_old B_old^T, and stretches B (renormalized) and sigma in movement.
/// Returns true when the expansion matrix was applied.
bool emphasize_expansion(SearchState& state, const Matrix& old_transform, Phase phase,
                         const StrategyConfig& config);

/// sqrt(l1 / l2) of B B^T, the ridge indicator.
double ridge_ratio(const Matrix& transform);

/// Whether the rank-one update runs this generation.
bool rank_one_condition(const SearchState& state, const StrategyConfig& config);

/// B <- B exp(c1 R_B / 2) with R built from B_old^-1 p_c.
void rank_one_update(SearchState& state, const Matrix& old_transform, double c1);

struct StepReport {
  Phase phase = Phase::movement;
  bool first_infeasible = false;  // the flag flipped this generation
  bool reset = false;             // ...and the shape was restored
  bool expanded = false;
  bool rank_one = false;
  std::size_t feasible = 0;
};

/// One full generation on an evaluated population produced by ask() on `state`.
/// Throws std::invalid_argument for malformed populations and SigmaGuardError
/// when the step size leaves its guard band or the state degenerates.
StepReport step(SearchState& state, std::vector<EvaluatedSolution> pop,
                const StrategyConfig& config, const DerivedParams& params);

/// Ask/tell wrapper owning the state, configuration and random stream of one run.
class Engine {
 public:
  Engine(StrategyConfig config, SearchState initial, std::uint64_t seed);

  std::vector<EvaluatedSolution> ask();
  /// A single unmirrored draw, used by resampling.
  EvaluatedSolution sample();
  StepReport tell(std::vector<EvaluatedSolution> pop);

  [[nodiscard]] const SearchState& state() const { return state_; }
  [[nodiscard]] const StrategyConfig& config() const { return config_; }
  [[nodiscard]] const DerivedParams& params() const { return params_; }

 private:
  StrategyConfig config_;
  DerivedParams params_;
  SearchState state_;
  Rng rng_;
};

}  // namespace fmnes
