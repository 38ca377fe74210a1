#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "fmnes/linalg.hpp"

namespace fmnes {

/// Named strategy configurations. Methods A/B/C are the ablations of the
/// fast-moving variant: A drops the ridge condition, B drops the reset, C drops both.
enum class StrategyMode { fm_nes, dx_nes_ic, xnes, method_a, method_b, method_c };

std::string_view to_string(StrategyMode mode);
StrategyMode parse_strategy_mode(std::string_view name);

struct StrategyConfig {
  std::size_t lambda = 0;
  std::size_t dim = 0;

  double eta_m = 1.0;
  double eta_sigma_move = 0.0;
  double eta_sigma_stag = 0.0;
  double eta_sigma_conv = 0.0;
  double eta_B_move = 0.0;
  double eta_B_stag = 0.0;
  double eta_B_conv = 0.0;

  double alpha = 0.0;  // distance-weight exponent scale
  double c_sigma = 0.0;
  double c_c = 0.0;
  double c1 = 0.0;
  double beta = 1.2;  // ridge threshold on sqrt(l1 / l2)
  double c_gamma = 0.0;
  double d_gamma = 0.0;

  bool enable_rank_one = true;
  bool enable_ridge_condition = true;
  bool enable_reset = true;
  bool enable_phase_switching = true;
  bool enable_expansion = true;
  // Rescale alpha, c1 and the stagnation/convergence/B learning rates by the
  // number of feasible samples in the current generation.
  bool scale_by_feasible_count = true;

  /// Throws std::invalid_argument on the first violated field constraint.
  void validate() const;

  friend bool operator==(const StrategyConfig&, const StrategyConfig&) = default;
};

/// Default configuration for `mode` at the given dimension and sample size.
StrategyConfig default_config(StrategyMode mode, std::size_t dim, std::size_t lambda);

struct DerivedParams {
  Vector w_rank_hat;  // unnormalized rank utilities, max(0, ln(lambda/2 + 1) - ln i)
  Vector w_rank;
  double mu_eff = 0.0;
  double chi_d = 0.0;
};

DerivedParams derive_params(const StrategyConfig& config);

Vector rank_weight_base(std::size_t lambda);
Vector compute_rank_weights(std::size_t lambda);
double compute_mu_eff(const Vector& w_rank, std::size_t lambda);

/// Distance weights for latent norms given in preference order. The exponent
/// is shifted by its maximum before exponentiation.
Vector compute_distance_weights(std::span<const double> z_norms, double alpha);

/// sqrt(d) (1 - 1/(4d) + 1/(21 d^2)), the usual approximation of E||N(0, I)||.
double chi_d(std::size_t d);

/// Root a of (1 + a^2) exp(a^2 / 2) / 0.24 = 10 + d.
double distance_weight_root(std::size_t d);

// Learning-rate schedules of the phase-switching strategies, as functions of
// the feasible sample count.
double eta_sigma_stag_schedule(std::size_t dim, double feasible);
double eta_sigma_conv_schedule(std::size_t dim, double feasible);
double eta_B_schedule(std::size_t dim, double feasible);
double xnes_learning_rate(std::size_t dim);

/// Full optimizer state for one run.
struct SearchState {
  Vector mean;
  double sigma = 1.0;
  Matrix transform;          // B, det(B) = 1
  Matrix initial_transform;  // B(0), restored on reset
  Vector path_sigma;
  Vector path_c;
  double gamma = 1.0;
  bool unconstrained_so_far = true;
  std::uint64_t generation = 0;

  static SearchState initial(Vector mean, double sigma);
  static SearchState initial(Vector mean, double sigma, Matrix transform);

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

// ---- key-value configuration files ----------------------------------------
//
//   # comment
//   key = value
//
// Blank lines and '#' comments are ignored. Booleans are true/false.

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values_file(const std::string& path);

/// Applies every StrategyConfig key present in `values` and erases it from the
/// map, leaving unrelated keys for the caller. Malformed values throw.
void apply_config_values(StrategyConfig& config, KeyValues& values);

/// Writes every StrategyConfig field, with a header describing where the defaults come from.
void write_config(std::ostream& out, const StrategyConfig& config, StrategyMode mode);

}  // namespace fmnes
