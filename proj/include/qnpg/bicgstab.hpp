#pragma once

#include <functional>

#include <Eigen/Core>

namespace qnpg {

/// Matrix-free operator: writes A·x into `out` (already sized).
using LinearOperator =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& out)>;

struct BicgstabResult {
  Eigen::VectorXd x;
  /// Number of completed Bi-CGSTAB iterations. A solve that converges on the
  /// half step of the first iteration still counts as one step.
  int steps = 0;
  /// True relative residual ‖b − A·x‖ / ‖b‖ of the returned iterate.
  double residual = 0.0;
};

/**
 * Unpreconditioned Bi-CGSTAB for a nonsymmetric nonsingular system A·x = b.
 *
 * Converged iterates are confirmed against the explicitly recomputed
 * residual; if the recursive residual drifted, the iteration restarts from
 * the current iterate. Throws IterativeSolveFailure (carrying the best true
 * residual seen) when `max_iters` is exhausted.
 */
BicgstabResult bicgstab(const LinearOperator& apply_a, const Eigen::VectorXd& b,
                        double tol, int max_iters,
                        const Eigen::VectorXd* initial_guess = nullptr);

}  // namespace qnpg
