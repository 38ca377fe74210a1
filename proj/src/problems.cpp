#include "fmnes/problems.hpp"

#include <cmath>
#include <stdexcept>

namespace fmnes {

namespace {

double sphere(const Vector& x) { return x.squaredNorm(); }

double ellipsoid(const Vector& x) {
  const auto d = x.size();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double exponent = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
    const double term = std::pow(1000.0, exponent) * x(i);
    sum += term * term;
  }
  return sum;
}

double rosenbrock(const Vector& x) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = x(i + 1) - x(i) * x(i);
    const double b = x(i) - 1.0;
    sum += 100.0 * a * a + b * b;
  }
  return sum;
}

double cigar(const Vector& x) {
  double sum = x(0) * x(0);
  for (Eigen::Index i = 1; i < x.size(); ++i) {
    const double t = 100.0 * x(i);
    sum += t * t;
  }
  return sum;
}

bool everywhere(const Vector&) { return true; }
bool nonnegative(const Vector& x) { return (x.array() >= 0.0).all(); }
bool at_most_one(const Vector& x) { return (x.array() <= 1.0).all(); }

}  // namespace

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"sphere",    "ellipsoid",    "rosenbrock",
                                              "cigar",     "ic-sphere",    "ic-ellipsoid",
                                              "ic-rosenbrock", "ic-cigar"};
  return names;
}

Problem make_benchmark(std::string_view name, std::size_t dim) {
  if (dim < 1) throw std::invalid_argument("benchmark dimension must be positive");
  const auto d = static_cast<Eigen::Index>(dim);
  const bool constrained = name.starts_with("ic-");
  const std::string_view base = constrained ? name.substr(3) : name;

  Problem p;
  p.name = std::string(name);
  p.dim = dim;
  p.constrained = constrained;
  p.optimum_value = 0.0;
  p.optimum = Vector::Zero(d);
  p.init_mean = Vector::Constant(d, 20.0);
  p.init_sigma = 2.0;

  if (base == "sphere") {
    p.objective = sphere;
  } else if (base == "ellipsoid") {
    p.objective = ellipsoid;
  } else if (base == "rosenbrock") {
    p.objective = rosenbrock;
    p.optimum = Vector::Ones(d);
    p.init_mean = Vector::Zero(d);
    p.init_sigma = 0.5;
  } else if (base == "cigar") {
    p.objective = cigar;
  } else {
    throw std::invalid_argument("unknown benchmark '" + std::string(name) + "'");
  }

  if (!constrained) {
    p.feasible = everywhere;
  } else if (base == "rosenbrock") {
    p.feasible = at_most_one;
  } else {
    p.feasible = nonnegative;
  }
  return p;
}

Evaluation evaluate(const Problem& problem, const Vector& x, EvalCounter& counter) {
  if (static_cast<std::size_t>(x.size()) != problem.dim) {
    throw std::invalid_argument("evaluate: point has dimension " + std::to_string(x.size()) +
                                ", problem '" + problem.name + "' expects " +
                                std::to_string(problem.dim));
  }
  ++counter.total;
  if (!problem.feasible(x)) {
    ++counter.infeasible;
    return {false, kInfeasible};
  }
  return {true, problem.objective(x)};
}

void evaluate(const Problem& problem, EvaluatedSolution& solution, EvalCounter& counter) {
  const Evaluation e = evaluate(problem, solution.x, counter);
  if (e.feasible) {
    solution.set_feasible(e.value);
  } else {
    solution.set_infeasible();
  }
}

ResampleResult resample_ask(Engine& engine, const Problem& problem, EvalCounter& counter,
                            std::uint64_t budget, std::uint64_t cap) {
  ResampleResult out;
  const std::size_t lambda = engine.config().lambda;
  out.population.reserve(lambda);
  std::uint64_t consecutive_infeasible = 0;
  while (out.population.size() < lambda) {
    if (counter.total >= budget) {
      out.status = ResampleStatus::budget_exhausted;
      return out;
    }
    EvaluatedSolution s = engine.sample();
    evaluate(problem, s, counter);
    if (s.feasible) {
      consecutive_infeasible = 0;
      out.population.push_back(std::move(s));
    } else if (++consecutive_infeasible >= cap) {
      out.status = ResampleStatus::cap_reached;
      return out;
    }
  }
  return out;
}

}  // namespace fmnes
