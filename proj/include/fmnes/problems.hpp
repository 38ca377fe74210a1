#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fmnes/engine.hpp"
#include "fmnes/linalg.hpp"

namespace fmnes {

struct Problem {
  std::string name;
  std::size_t dim = 0;
  std::function<double(const Vector&)> objective;
  std::function<bool(const Vector&)> feasible;  // implicit constraint; always true when unconstrained
  bool constrained = false;
  Vector optimum;
  double optimum_value = 0.0;
  Vector init_mean;
  double init_sigma = 1.0;
};

struct EvalCounter {
  std::uint64_t total = 0;
  std::uint64_t infeasible = 0;
};

struct Evaluation {
  bool feasible = false;
  double value = kInfeasible;
};

/// Evaluates `x`, counting the call whether or not the point is feasible.
/// The objective is only computed for feasible points.
Evaluation evaluate(const Problem& problem, const Vector& x, EvalCounter& counter);

/// Evaluates in place and records the outcome on the solution.
void evaluate(const Problem& problem, EvaluatedSolution& solution, EvalCounter& counter);

/// Names accepted by make_benchmark, in table order.
const std::vector<std::string>& benchmark_names();

/// sphere, ellipsoid, rosenbrock, cigar and their ic- prefixed constrained forms.
Problem make_benchmark(std::string_view name, std::size_t dim);

inline constexpr std::uint64_t kDefaultResampleCap = 1'000'000;

enum class ResampleStatus { complete, cap_reached, budget_exhausted };

struct ResampleResult {
  std::vector<EvaluatedSolution> population;  // feasible solutions gathered so far
  ResampleStatus status = ResampleStatus::complete;
};

/// Draws single unmirrored samples from the engine until lambda feasible ones
/// are collected. Gives up after `cap` consecutive infeasible draws, or when
/// counter.total reaches `budget`.
ResampleResult resample_ask(Engine& engine, const Problem& problem, EvalCounter& counter,
                            std::uint64_t budget, std::uint64_t cap = kDefaultResampleCap);

}  // namespace fmnes
