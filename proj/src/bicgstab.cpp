#include "qnpg/bicgstab.hpp"

#include <algorithm>

#include "qnpg/errors.hpp"

namespace qnpg {

BicgstabResult bicgstab(const LinearOperator& apply_a, const Eigen::VectorXd& b,
                        double tol, int max_iters,
                        const Eigen::VectorXd* initial_guess) {
  const Eigen::Index n = b.size();
  BicgstabResult result;
  result.x = initial_guess ? *initial_guess : Eigen::VectorXd::Zero(n);

  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    result.x.setZero();
    return result;
  }

  Eigen::VectorXd ax(n);
  auto true_residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    apply_a(x, ax);
    r = b - ax;
    return r.norm() / b_norm;
  };

  Eigen::VectorXd r(n);
  double rel = true_residual(result.x, r);
  double best_rel = rel;
  if (rel <= tol) {
    result.residual = rel;
    return result;
  }

  Eigen::VectorXd r_hat = r;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s(n), t(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;

  // Restart the Krylov recursion from the current iterate's true residual.
  auto restart = [&] {
    rel = true_residual(result.x, r);
    r_hat = r;
    p.setZero();
    v.setZero();
    rho = alpha = omega = 1.0;
  };

  int steps = 0;
  while (steps < max_iters) {
    ++steps;
    const double rho_next = r_hat.dot(r);
    if (rho_next == 0.0 || omega == 0.0) {
      restart();
      continue;
    }
    const double beta = (rho_next / rho) * (alpha / omega);
    rho = rho_next;
    p = r + beta * (p - omega * v);
    apply_a(p, v);
    const double denom = r_hat.dot(v);
    if (denom == 0.0) {
      restart();
      continue;
    }
    alpha = rho / denom;
    s = r - alpha * v;

    if (s.norm() / b_norm <= tol) {
      result.x += alpha * p;
      Eigen::VectorXd check(n);
      rel = true_residual(result.x, check);
      best_rel = std::min(best_rel, rel);
      if (rel <= tol) break;
      restart();
      continue;
    }

    apply_a(s, t);
    const double tt = t.squaredNorm();
    omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
    result.x += alpha * p + omega * s;
    r = s - omega * t;

    if (r.norm() / b_norm <= tol) {
      Eigen::VectorXd check(n);
      rel = true_residual(result.x, check);
      best_rel = std::min(best_rel, rel);
      if (rel <= tol) break;
      restart();
    }
  }

  if (rel > tol) {
    best_rel = std::min(best_rel, true_residual(result.x, r));
    throw IterativeSolveFailure(steps, best_rel);
  }
  result.steps = steps;
  result.residual = rel;
  return result;
}

}  // namespace qnpg
