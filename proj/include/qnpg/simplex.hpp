#pragma once

#include <functional>
#include <vector>

namespace qnpg {

class Divergence;

/// A strictly decreasing map ψ: (L, ∞) → (0, ∞) with ψ(L⁺) = ∞, ψ(∞) = 0,
/// plus its inverse. L may be −∞.
struct DecreasingMap {
  std::function<double(double)> psi;
  std::function<double(double)> psi_inverse;
  double lower_bound = 0.0;

  /// ψ = (−φ′)⁻¹ of a divergence; the inverse is −φ′.
  static DecreasingMap from_divergence(const Divergence& divergence);
};

/// One state's multiplier equation Σ_a μ_a ψ(c + x_a) = 1.
struct MultiplierProblem {
  std::vector<double> weights;
  std::vector<double> shifts;
  DecreasingMap map;
};

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr int kMaxBisectionSteps = 200;

/// Σ_a μ_a ψ(c + x_a).
double multiplier_sum(const MultiplierProblem& problem, double c);

/**
 * Interval that contains the root:
 *
 *   lo = max{ L − min_i x_i, min_i (ψ⁻¹(1/(kμ_i)) − x_i) }
 *   hi = max_i (ψ⁻¹(1/(kμ_i)) − x_i)
 *
 * The L term is dropped when L = −∞.
 */
Bracket bracket(const MultiplierProblem& problem);

/**
 * Root c of the multiplier equation by bisection on bracket(problem), stopped
 * once |Σ_a μ_a ψ(c + x_a) − 1| ≤ tol. The search runs on shifts translated
 * so that min_a x_a = 0 and the result is translated back.
 *
 * Throws ConvergenceError after kMaxBisectionSteps halvings, or earlier when
 * the interval can no longer be split, without reaching `tol`.
 */
double solve_multiplier(const MultiplierProblem& problem, double tol);

/// Root expressed in the translated coordinates used by the search:
/// root = shifted_root − offset with offset = min_a x_a. ψ arguments are best
/// formed as shifted_root + (x_a − offset) to avoid cancellation.
struct MultiplierRoot {
  double root = 0.0;
  double offset = 0.0;
  double shifted_root = 0.0;
  int steps = 0;
};

MultiplierRoot solve_multiplier_detailed(const MultiplierProblem& problem,
                                         double tol);

/// π_a = μ_a ψ(c + x_a) for the solved multiplier, rescaled by the residual
/// row sum so the row is stochastic to rounding. Entries that underflow are
/// raised to kPolicyFloor.
std::vector<double> apply_update_row(const MultiplierProblem& problem,
                                     double tol);

}  // namespace qnpg
