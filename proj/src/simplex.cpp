#include "qnpg/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qnpg/errors.hpp"
#include "qnpg/regularizer.hpp"

namespace qnpg {

DecreasingMap DecreasingMap::from_divergence(const Divergence& divergence) {
  return {[divergence](double y) { return divergence.psi(y); },
          [divergence](double x) { return -divergence.phi_prime(x); },
          divergence.domain_bound()};
}

namespace {

void check_problem(const MultiplierProblem& problem) {
  if (problem.weights.empty() ||
      problem.weights.size() != problem.shifts.size()) {
    throw DimensionError("multiplier problem needs k >= 1 matched weights/shifts");
  }
  for (double mu : problem.weights) {
    if (!(mu > 0.0)) throw DomainError("multiplier weights must be positive");
  }
}

double sum_at(const MultiplierProblem& problem, double c, double offset) {
  double g = 0.0;
  for (std::size_t i = 0; i < problem.weights.size(); ++i) {
    g += problem.weights[i] * problem.map.psi(c + (problem.shifts[i] - offset));
  }
  return g;
}

Bracket bracket_at(const MultiplierProblem& problem, double offset) {
  const double k = static_cast<double>(problem.weights.size());
  double min_x = std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < problem.weights.size(); ++i) {
    const double x = problem.shifts[i] - offset;
    const double level = problem.map.psi_inverse(1.0 / (k * problem.weights[i]));
    min_x = std::min(min_x, x);
    lo = std::min(lo, level - x);
    hi = std::max(hi, level - x);
  }
  if (std::isfinite(problem.map.lower_bound)) {
    lo = std::max(lo, problem.map.lower_bound - min_x);
  }
  return {lo, hi};
}

}  // namespace

double multiplier_sum(const MultiplierProblem& problem, double c) {
  return sum_at(problem, c, 0.0);
}

Bracket bracket(const MultiplierProblem& problem) {
  check_problem(problem);
  return bracket_at(problem, 0.0);
}

MultiplierRoot solve_multiplier_detailed(const MultiplierProblem& problem,
                                         double tol) {
  check_problem(problem);
  const double offset =
      *std::min_element(problem.shifts.begin(), problem.shifts.end());
  auto [lo, hi] = bracket_at(problem, offset);

  MultiplierRoot out;
  out.offset = offset;
  auto finish = [&](double shifted, int steps) {
    out.shifted_root = shifted;
    out.root = shifted - offset;
    out.steps = steps;
    return out;
  };

  if (lo >= hi) return finish(hi, 0);

  // lo may sit on the boundary of ψ's domain; only interior points are
  // evaluated.
  double best_residual = std::abs(sum_at(problem, hi, offset) - 1.0);
  if (best_residual <= tol) return finish(hi, 0);

  for (int step = 1; step <= kMaxBisectionSteps; ++step) {
    const double mid = lo + 0.5 * (hi - lo);
    if (!(mid > lo && mid < hi)) {
      throw ConvergenceError(step, best_residual);
    }
    const double g = sum_at(problem, mid, offset);
    const double residual = std::abs(g - 1.0);
    best_residual = std::min(best_residual, residual);
    if (residual <= tol) return finish(mid, step);
    if (g > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw ConvergenceError(kMaxBisectionSteps, best_residual);
}

double solve_multiplier(const MultiplierProblem& problem, double tol) {
  return solve_multiplier_detailed(problem, tol).root;
}

std::vector<double> apply_update_row(const MultiplierProblem& problem,
                                     double tol) {
  const MultiplierRoot root = solve_multiplier_detailed(problem, tol);
  std::vector<double> row(problem.weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    row[i] = problem.weights[i] *
             problem.map.psi(root.shifted_root + (problem.shifts[i] - root.offset));
    sum += row[i];
  }
  for (double& p : row) p = std::max(p / sum, kPolicyFloor);
  return row;
}

}  // namespace qnpg
