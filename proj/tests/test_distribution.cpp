#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fmnes/distribution.hpp"
#include "oracles.hpp"

using namespace fmnes;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("rank weights for lambda = 2 and 4") {
  const Vector w2 = compute_rank_weights(2);
  CHECK(w2(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w2(1) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(rank_weight_base(2)(0) == doctest::Approx(std::log(2.0)));
  CHECK(rank_weight_base(2)(1) == 0.0);

  const Vector w4 = compute_rank_weights(4);
  CHECK(w4(0) == doctest::Approx(0.480423).epsilon(1e-6));
  CHECK(w4(1) == doctest::Approx(0.019577).epsilon(1e-5));
  CHECK(w4(2) == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(w4(3) == doctest::Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("rank weights match direct evaluation, sum to zero and are nonincreasing") {
  for (std::size_t lambda = 2; lambda <= 200; lambda += 2) {
    const Vector w = compute_rank_weights(lambda);
    const auto want = oracle::rank_weights(lambda);
    REQUIRE(w.size() == static_cast<Eigen::Index>(lambda));
    CHECK(std::abs(w.sum()) < 1e-12);
    for (std::size_t i = 0; i < lambda; ++i) {
      CHECK(std::abs(w(static_cast<Eigen::Index>(i)) - want[i]) < 1e-14);
      if (i > 0) CHECK(w(static_cast<Eigen::Index>(i)) <= w(static_cast<Eigen::Index>(i - 1)));
    }
  }
}

TEST_CASE("rank weights reject odd and too small sample sizes") {
  CHECK_THROWS_AS(compute_rank_weights(0), std::invalid_argument);
  CHECK_THROWS_AS(compute_rank_weights(1), std::invalid_argument);
  CHECK_THROWS_AS(compute_rank_weights(7), std::invalid_argument);
}

TEST_CASE("mu_eff examples and the normalization identity") {
  CHECK(compute_mu_eff(compute_rank_weights(2), 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(compute_mu_eff(compute_rank_weights(4), 4) == doctest::Approx(1.649651).epsilon(1e-6));

  // Equal shifted weights give mu_eff = lambda.
  const Vector flat = Vector::Zero(10);
  CHECK(compute_mu_eff(flat, 10) == doctest::Approx(10.0).epsilon(1e-14));

  for (std::size_t lambda = 2; lambda <= 80; lambda += 2) {
    const Vector w = compute_rank_weights(lambda);
    const double mu = compute_mu_eff(w, lambda);
    const Vector shifted = w.array() + 1.0 / static_cast<double>(lambda);
    CHECK(std::abs(mu * shifted.squaredNorm() - 1.0) < 1e-12);
    CHECK(mu >= 1.0);
    CHECK(mu == doctest::Approx(oracle::mu_eff(to_std(w))).epsilon(1e-13));
  }
}

TEST_CASE("distance weights reduce to rank weights when all norms are equal") {
  for (std::size_t lambda : {2u, 4u, 8u, 20u, 80u}) {
    for (double norm : {0.0, 1.0, 6.3, 50.0}) {
      const std::vector<double> norms(lambda, norm);
      const Vector w = compute_distance_weights(norms, 3.7);
      const Vector r = compute_rank_weights(lambda);
      CHECK((w - r).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  const Vector a = compute_distance_weights(std::vector<double>(4, 1.0), 1.0);
  const Vector b = compute_distance_weights(std::vector<double>(4, 2.0), 1.0);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("distance weights match direct evaluation") {
  const std::vector<double> norms{2.0, 1.0, 1.0, 1.0};
  const Vector w = compute_distance_weights(norms, 1.0);
  const auto want = oracle::distance_weights(norms, 1.0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(w(static_cast<Eigen::Index>(i)) - want[i]) < 1e-14);
  }
  CHECK(std::abs(w.sum()) < 1e-14);

  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> n(16);
    for (double& x : n) x = std::abs(rng.normal()) * 6.0;
    const Vector got = compute_distance_weights(n, 1.3);
    const auto ref = oracle::distance_weights(n, 1.3);
    for (std::size_t i = 0; i < n.size(); ++i) {
      CHECK(std::abs(got(static_cast<Eigen::Index>(i)) - ref[i]) < 1e-12);
    }
  }
}

TEST_CASE("distance weights stay finite when alpha * ||z|| overflows exp") {
  const std::vector<double> norms{900.0, 800.0, 1000.0, 700.0};
  const Vector w = compute_distance_weights(norms, 1.0);
  CHECK(w.allFinite());
  CHECK(std::abs(w.sum()) < 1e-12);
  CHECK(w(0) == doctest::Approx(1.0 - 0.25));  // the only surviving utility after the shift
}

TEST_CASE("chi_d follows the asymptotic formula") {
  CHECK(chi_d(1) == doctest::Approx(0.797619).epsilon(1e-6));
  const double d = 40.0;
  CHECK(chi_d(40) ==
        doctest::Approx(std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))).epsilon(1e-15));
  CHECK(chi_d(40) == doctest::Approx(6.285215).epsilon(1e-6));
  CHECK(chi_d(1'000'000) / std::sqrt(1e6) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("distance_weight_root solves its defining equation") {
  for (std::size_t d : {1u, 2u, 10u, 40u, 80u}) {
    const double a = distance_weight_root(d);
    const double lhs = (1.0 + a * a) * std::exp(a * a / 2.0) / 0.24;
    CHECK(lhs == doctest::Approx(10.0 + static_cast<double>(d)).epsilon(1e-10));
    CHECK(a > 0.0);
  }
}

TEST_CASE("default configuration values") {
  const StrategyConfig c = default_config(StrategyMode::fm_nes, 40, 16);
  const DerivedParams p = derive_params(c);
  const double d = 40.0, mu = p.mu_eff;
  CHECK(c.c_sigma == doctest::Approx((mu + 2.0) / (d + mu + 5.0)).epsilon(1e-15));
  CHECK(c.c_c == doctest::Approx((4.0 + mu / d) / (d + 4.0 + 2.0 * mu / d)).epsilon(1e-15));
  CHECK(c.c1 == doctest::Approx(2.0 / ((d + 1.3) * (d + 1.3) + mu)).epsilon(1e-15));
  CHECK(c.beta == 1.2);
  CHECK(c.eta_m == 1.0);
  CHECK(c.eta_sigma_move == 1.0);
  CHECK(c.eta_B_move == c.eta_B_conv);
  CHECK(c.alpha > 0.0);
  CHECK(c.c_gamma == doctest::Approx(1.0 / 117.0));
  CHECK(c.d_gamma == doctest::Approx(0.4));
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("mode flags select the variants") {
  struct Row {
    StrategyMode mode;
    bool rank_one, ridge, reset, phases, expansion;
  };
  const Row rows[] = {
      {StrategyMode::fm_nes, true, true, true, true, true},
      {StrategyMode::dx_nes_ic, false, true, false, true, true},
      {StrategyMode::method_a, true, false, true, true, true},
      {StrategyMode::method_b, true, true, false, true, true},
      {StrategyMode::method_c, true, false, false, true, true},
      {StrategyMode::xnes, false, true, false, false, false},
  };
  for (const Row& r : rows) {
    CAPTURE(to_string(r.mode));
    const StrategyConfig c = default_config(r.mode, 10, 8);
    CHECK(c.enable_rank_one == r.rank_one);
    CHECK(c.enable_ridge_condition == r.ridge);
    CHECK(c.enable_reset == r.reset);
    CHECK(c.enable_phase_switching == r.phases);
    CHECK(c.enable_expansion == r.expansion);
    CHECK_NOTHROW(c.validate());
    CHECK(parse_strategy_mode(to_string(r.mode)) == r.mode);
  }
  const StrategyConfig x = default_config(StrategyMode::xnes, 10, 8);
  CHECK(x.eta_sigma_move == doctest::Approx(xnes_learning_rate(10)));
  CHECK(x.eta_B_move == doctest::Approx(xnes_learning_rate(10)));
  CHECK_THROWS_AS(parse_strategy_mode("cma-es"), std::invalid_argument);
}

TEST_CASE("validate rejects out-of-range fields") {
  const StrategyConfig base = default_config(StrategyMode::fm_nes, 10, 8);
  auto broken = [&](auto edit) {
    StrategyConfig c = base;
    edit(c);
    return c;
  };
  CHECK_THROWS_AS(broken([](auto& c) { c.lambda = 7; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(broken([](auto& c) { c.lambda = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(broken([](auto& c) { c.dim = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(broken([](auto& c) { c.beta = 1.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(broken([](auto& c) { c.c_sigma = 1.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(broken([](auto& c) { c.c_c = 0.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(broken([](auto& c) { c.c1 = 1.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(broken([](auto& c) { c.alpha = 0.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(broken([](auto& c) { c.d_gamma = 0.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(broken([](auto& c) { c.eta_B_move = -1.0; }).validate(),
                  std::invalid_argument);
  CHECK_NOTHROW(broken([](auto& c) { c.c1 = 0.0; }).validate());
}

TEST_CASE("SearchState::initial checks its inputs") {
  const SearchState s = SearchState::initial(Vector::Constant(3, 20.0), 2.0);
  CHECK(s.transform == Matrix::Identity(3, 3));
  CHECK(s.initial_transform == Matrix::Identity(3, 3));
  CHECK(s.path_sigma.isZero());
  CHECK(s.path_c.isZero());
  CHECK(s.gamma == 1.0);
  CHECK(s.unconstrained_so_far);
  CHECK(s.generation == 0);

  CHECK_THROWS_AS(SearchState::initial(Vector::Zero(3), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SearchState::initial(Vector::Zero(3), -1.0), std::invalid_argument);
  CHECK_THROWS_AS(SearchState::initial(Vector::Zero(2), 1.0, 2.0 * Matrix::Identity(2, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(SearchState::initial(Vector::Zero(2), 1.0, Matrix::Identity(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("key-value parsing ignores comments and blank lines") {
  std::istringstream in("# header\n\n  c1 = 0.5  # trailing\nbeta=1.5\nfoo = bar\n");
  KeyValues kv = parse_key_values(in);
  CHECK(kv.size() == 3);
  CHECK(kv["c1"] == "0.5");
  CHECK(kv["beta"] == "1.5");

  StrategyConfig c = default_config(StrategyMode::fm_nes, 10, 8);
  apply_config_values(c, kv);
  CHECK(c.c1 == 0.5);
  CHECK(c.beta == 1.5);
  CHECK(kv.size() == 1);
  CHECK(kv.count("foo") == 1);

  std::istringstream bad("no equals sign\n");
  CHECK_THROWS_AS(parse_key_values(bad), std::invalid_argument);
}

TEST_CASE("malformed config values are rejected") {
  StrategyConfig c = default_config(StrategyMode::fm_nes, 10, 8);
  KeyValues a{{"c1", "abc"}};
  CHECK_THROWS_AS(apply_config_values(c, a), std::invalid_argument);
  KeyValues b{{"lambda", "-4"}};
  CHECK_THROWS_AS(apply_config_values(c, b), std::invalid_argument);
  KeyValues e{{"enable_reset", "maybe"}};
  CHECK_THROWS_AS(apply_config_values(c, e), std::invalid_argument);
}

TEST_CASE("write_config round-trips every field exactly") {
  for (StrategyMode mode : {StrategyMode::fm_nes, StrategyMode::dx_nes_ic, StrategyMode::xnes,
                            StrategyMode::method_c}) {
    const StrategyConfig original = default_config(mode, 37, 24);
    std::stringstream text;
    write_config(text, original, mode);
    CHECK(text.str().find("# ") == 0);
    KeyValues kv = parse_key_values(text);
    StrategyConfig back;
    apply_config_values(back, kv);
    CHECK(kv.empty());
    CHECK(back == original);
  }
}
