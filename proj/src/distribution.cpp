#include "fmnes/distribution.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fmnes {

namespace {

constexpr std::array<std::pair<StrategyMode, std::string_view>, 6> kModeNames{{
    {StrategyMode::fm_nes, "fm-nes"},
    {StrategyMode::dx_nes_ic, "dx-nes-ic"},
    {StrategyMode::xnes, "xnes"},
    {StrategyMode::method_a, "method-a"},
    {StrategyMode::method_b, "method-b"},
    {StrategyMode::method_c, "method-c"},
}};

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("invalid strategy config: ") + what);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw std::invalid_argument("config key '" + key + "': not a number: '" + text + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("config key '" + key + "': not a non-negative integer: '" + text +
                                "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + text + "'");
}

template <typename Visitor>
void visit_fields(StrategyConfig& c, Visitor&& visit) {
  visit("lambda", c.lambda);
  visit("dim", c.dim);
  visit("eta_m", c.eta_m);
  visit("eta_sigma_move", c.eta_sigma_move);
  visit("eta_sigma_stag", c.eta_sigma_stag);
  visit("eta_sigma_conv", c.eta_sigma_conv);
  visit("eta_B_move", c.eta_B_move);
  visit("eta_B_stag", c.eta_B_stag);
  visit("eta_B_conv", c.eta_B_conv);
  visit("alpha", c.alpha);
  visit("c_sigma", c.c_sigma);
  visit("c_c", c.c_c);
  visit("c1", c.c1);
  visit("beta", c.beta);
  visit("c_gamma", c.c_gamma);
  visit("d_gamma", c.d_gamma);
  visit("enable_rank_one", c.enable_rank_one);
  visit("enable_ridge_condition", c.enable_ridge_condition);
  visit("enable_reset", c.enable_reset);
  visit("enable_phase_switching", c.enable_phase_switching);
  visit("enable_expansion", c.enable_expansion);
  visit("scale_by_feasible_count", c.scale_by_feasible_count);
}

}  // namespace

std::string_view to_string(StrategyMode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

StrategyMode parse_strategy_mode(std::string_view name) {
  for (const auto& [m, n] : kModeNames) {
    if (n == name) return m;
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

void StrategyConfig::validate() const {
  require(dim >= 1, "dim must be positive");
  require(lambda >= 2 && lambda % 2 == 0, "lambda must be even and at least 2");
  require(std::isfinite(eta_m) && eta_m > 0.0, "eta_m must be positive");
  for (double eta : {eta_sigma_move, eta_sigma_stag, eta_sigma_conv, eta_B_move, eta_B_stag,
                     eta_B_conv}) {
    require(std::isfinite(eta) && eta >= 0.0, "learning rates must be finite and non-negative");
  }
  require(std::isfinite(alpha) && alpha > 0.0, "alpha must be positive");
  require(c_sigma > 0.0 && c_sigma < 1.0, "c_sigma must lie in (0, 1)");
  require(c_c > 0.0 && c_c < 1.0, "c_c must lie in (0, 1)");
  // c1 = 0 is admitted: it switches the rank-one update into a no-op.
  require(c1 >= 0.0 && c1 < 1.0, "c1 must lie in [0, 1)");
  require(beta > 1.0, "beta must exceed 1");
  require(c_gamma >= 0.0 && c_gamma <= 1.0, "c_gamma must lie in [0, 1]");
  require(std::isfinite(d_gamma) && d_gamma > 0.0, "d_gamma must be positive");
}

Vector rank_weight_base(std::size_t lambda) {
  Vector hat(static_cast<Eigen::Index>(lambda));
  const double top = std::log(static_cast<double>(lambda) / 2.0 + 1.0);
  for (std::size_t i = 0; i < lambda; ++i) {
    hat(static_cast<Eigen::Index>(i)) = std::max(0.0, top - std::log(static_cast<double>(i + 1)));
  }
  return hat;
}

Vector compute_rank_weights(std::size_t lambda) {
  if (lambda < 2 || lambda % 2 != 0) {
    throw std::invalid_argument("rank weights need an even lambda >= 2, got " +
                                std::to_string(lambda));
  }
  const Vector hat = rank_weight_base(lambda);
  return (hat / hat.sum()).array() - 1.0 / static_cast<double>(lambda);
}

double compute_mu_eff(const Vector& w_rank, std::size_t lambda) {
  const Vector shifted = w_rank.array() + 1.0 / static_cast<double>(lambda);
  return 1.0 / shifted.squaredNorm();
}

Vector compute_distance_weights(std::span<const double> z_norms, double alpha) {
  const std::size_t lambda = z_norms.size();
  const Vector hat = rank_weight_base(lambda);
  double shift = -std::numeric_limits<double>::infinity();
  for (double n : z_norms) shift = std::max(shift, alpha * n);

  Vector w(static_cast<Eigen::Index>(lambda));
  for (std::size_t i = 0; i < lambda; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    w(k) = hat(k) * std::exp(alpha * z_norms[i] - shift);
  }
  return (w / w.sum()).array() - 1.0 / static_cast<double>(lambda);
}

double chi_d(std::size_t d) {
  const auto n = static_cast<double>(d);
  return std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
}

double distance_weight_root(std::size_t d) {
  const auto n = static_cast<double>(d);
  const auto f = [n](double a) { return (1.0 + a * a) * std::exp(a * a / 2.0) / 0.24 - 10.0 - n; };
  const auto df = [](double a) { return a * std::exp(a * a / 2.0) * (3.0 + a * a) / 0.24; };
  // Damped Newton from a = 1; f is increasing on a > 0.
  double a = 1.0;
  for (int it = 0; it < 200 && std::abs(f(a)) > 1e-10; ++it) a -= 0.5 * f(a) / df(a);
  return a;
}

double eta_sigma_stag_schedule(std::size_t dim, double feasible) {
  const auto d = static_cast<double>(dim);
  return std::tanh((0.024 * feasible + 0.7 * d + 20.0) / (d + 12.0));
}

double eta_sigma_conv_schedule(std::size_t dim, double feasible) {
  const auto d = static_cast<double>(dim);
  return 2.0 * std::tanh((0.025 * feasible + 0.75 * d + 10.0) / (d + 4.0));
}

double eta_B_schedule(std::size_t dim, double feasible) {
  const auto d = static_cast<double>(dim);
  return (feasible + 2.0 * d) / (feasible + 2.0 * d * d + 100.0) *
         std::min(1.0, std::sqrt(feasible / d));
}

double xnes_learning_rate(std::size_t dim) {
  const auto d = static_cast<double>(dim);
  return 3.0 * (3.0 + std::log(d)) / (5.0 * d * std::sqrt(d));
}

StrategyConfig default_config(StrategyMode mode, std::size_t dim, std::size_t lambda) {
  StrategyConfig c;
  c.dim = dim;
  c.lambda = lambda;
  const Vector w = compute_rank_weights(lambda);
  const double mu_eff = compute_mu_eff(w, lambda);
  const auto d = static_cast<double>(dim);
  const auto lam = static_cast<double>(lambda);

  c.c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0);
  c.c_c = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d);
  c.c1 = 2.0 / ((d + 1.3) * (d + 1.3) + mu_eff);
  c.beta = 1.2;

  c.eta_m = 1.0;
  c.eta_sigma_move = 1.0;
  c.eta_sigma_stag = eta_sigma_stag_schedule(dim, lam);
  c.eta_sigma_conv = eta_sigma_conv_schedule(dim, lam);
  c.eta_B_move = c.eta_B_stag = c.eta_B_conv = eta_B_schedule(dim, lam);
  c.alpha = distance_weight_root(dim) * std::min(1.0, std::sqrt(lam / d));
  c.c_gamma = dim > 1 ? std::min(1.0, 1.0 / (3.0 * (d - 1.0))) : 1.0;
  c.d_gamma = std::min(1.0, lam / d);

  switch (mode) {
    case StrategyMode::fm_nes:
      break;
    case StrategyMode::dx_nes_ic:
      c.enable_rank_one = false;
      c.enable_reset = false;
      break;
    case StrategyMode::method_a:
      c.enable_ridge_condition = false;
      break;
    case StrategyMode::method_b:
      c.enable_reset = false;
      break;
    case StrategyMode::method_c:
      c.enable_ridge_condition = false;
      c.enable_reset = false;
      break;
    case StrategyMode::xnes: {
      const double eta = xnes_learning_rate(dim);
      c.eta_sigma_move = c.eta_sigma_stag = c.eta_sigma_conv = eta;
      c.eta_B_move = c.eta_B_stag = c.eta_B_conv = eta;
      c.enable_rank_one = false;
      c.enable_reset = false;
      c.enable_phase_switching = false;
      c.enable_expansion = false;
      c.scale_by_feasible_count = false;
      break;
    }
  }
  return c;
}

DerivedParams derive_params(const StrategyConfig& config) {
  DerivedParams p;
  p.w_rank_hat = rank_weight_base(config.lambda);
  p.w_rank = compute_rank_weights(config.lambda);
  p.mu_eff = compute_mu_eff(p.w_rank, config.lambda);
  p.chi_d = chi_d(config.dim);
  return p;
}

SearchState SearchState::initial(Vector mean, double sigma) {
  const auto d = mean.size();
  return initial(std::move(mean), sigma, Matrix::Identity(d, d));
}

SearchState SearchState::initial(Vector mean, double sigma, Matrix transform) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("initial step size must be positive and finite");
  }
  if (transform.rows() != mean.size() || transform.cols() != mean.size()) {
    throw std::invalid_argument("initial transform does not match the mean dimension");
  }
  const double det = linalg::det(transform);
  if (std::abs(det - 1.0) > 1e-6) {
    throw std::invalid_argument("initial transform must have unit determinant");
  }
  SearchState s;
  const auto d = mean.size();
  s.mean = std::move(mean);
  s.sigma = sigma;
  s.initial_transform = transform;
  s.transform = std::move(transform);
  s.path_sigma = Vector::Zero(d);
  s.path_c = Vector::Zero(d);
  return s;
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    }
    out[std::move(key)] = std::move(value);
  }
  return out;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return parse_key_values(in);
}

void apply_config_values(StrategyConfig& config, KeyValues& values) {
  visit_fields(config, [&](const char* key, auto& field) {
    const auto it = values.find(key);
    if (it == values.end()) return;
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, bool>) {
      field = parse_bool(key, it->second);
    } else if constexpr (std::is_same_v<T, std::size_t>) {
      field = parse_size(key, it->second);
    } else {
      field = parse_double(key, it->second);
    }
    values.erase(it);
  });
}

void write_config(std::ostream& out, const StrategyConfig& config, StrategyMode mode) {
  out << "# strategy configuration (" << to_string(mode) << ", dim = " << config.dim
      << ", lambda = " << config.lambda << ")\n"
      << "#\n"
      << "# c_sigma, c_c and c1 follow the usual CMA-ES settings for the rank-weight mu_eff;\n"
      << "# beta = 1.2 is the ridge threshold.\n"
      << "# The phase-dependent learning rates, alpha, c_gamma and d_gamma are the DX-NES-IC\n"
      << "# parameter settings (the sigma schedules, alpha and the gamma constants are also\n"
      << "# carried by the public crfmnes reference implementation):\n"
      << "#   eta_sigma_move = 1\n"
      << "#   eta_sigma_stag = tanh((0.024 lambda + 0.7 d + 20) / (d + 12))\n"
      << "#   eta_sigma_conv = 2 tanh((0.025 lambda + 0.75 d + 10) / (d + 4))\n"
      << "#   eta_B_*        = (lambda + 2 d) / (lambda + 2 d^2 + 100) min(1, sqrt(lambda / d))\n"
      << "#   alpha          = h^-1(d) min(1, sqrt(lambda / d)),\n"
      << "#                    h^-1(d) solving (1 + a^2) exp(a^2 / 2) / 0.24 = 10 + d\n"
      << "#   c_gamma        = 1 / (3 (d - 1)),  d_gamma = min(1, lambda / d)\n"
      << "# With scale_by_feasible_count, alpha is multiplied by sqrt(lambda_F / lambda),\n"
      << "# eta_sigma_stag, eta_sigma_conv and eta_B_* by schedule(lambda_F) / schedule(lambda),\n"
      << "# and c1 by lambda_F / lambda, lambda_F being the feasible sample count of the\n"
      << "# generation.\n"
      << "# xnes uses eta_sigma = eta_B = 3 (3 + ln d) / (5 d sqrt(d)) with fixed rank weights;\n"
      << "# with phase switching disabled the *_move rates are used throughout.\n";
  std::ostringstream body;
  body.precision(17);
  StrategyConfig copy = config;
  visit_fields(copy, [&](const char* key, auto& field) {
    using T = std::decay_t<decltype(field)>;
    body << key << " = ";
    if constexpr (std::is_same_v<T, bool>) {
      body << (field ? "true" : "false");
    } else {
      body << field;
    }
    body << '\n';
  });
  out << body.str();
}

}  // namespace fmnes
