#pragma once

// Test-only helpers: random instances and independent reference
// computations. Nothing here calls the library's solvers.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qnpg/mdp.hpp"
#include "qnpg/regularizer.hpp"

namespace qnpg::test {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Random probability row of length n with entries bounded away from zero.
inline Eigen::RowVectorXd random_row(Eigen::Index n, Rng& rng) {
  Eigen::RowVectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) row(i) = 0.05 + uniform01(rng);
  return row / row.sum();
}

/// Dense random MDP; every transition row has full support.
inline MdpModel random_model(Eigen::Index n, Eigen::Index m, double discount,
                             std::uint64_t seed) {
  Rng rng(seed);
  MdpModel model;
  model.num_states = n;
  model.num_actions = m;
  model.discount = discount;
  model.rewards.resize(n, m);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index a = 0; a < m; ++a) model.rewards(s, a) = uniform01(rng);
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    Eigen::MatrixXd dense(n, n);
    for (Eigen::Index s = 0; s < n; ++s) dense.row(s) = random_row(n, rng);
    model.transitions.push_back(dense.sparseView());
    model.transitions.back().makeCompressed();
  }
  return model;
}

inline Policy random_policy(Eigen::Index n, Eigen::Index m, Rng& rng) {
  Eigen::MatrixXd p(n, m);
  for (Eigen::Index s = 0; s < n; ++s) p.row(s) = random_row(m, rng);
  return Policy(p);
}

/// Random tangent direction: every row sums to zero (up to rounding, then
/// the last entry absorbs the remainder).
inline Eigen::MatrixXd random_tangent(Eigen::Index n, Eigen::Index m,
                                      Rng& rng) {
  Eigen::MatrixXd t(n, m);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index a = 0; a < m; ++a) t(s, a) = uniform01(rng) - 0.5;
    t.row(s).array() -= t.row(s).mean();
    t(s, m - 1) = -t.row(s).head(m - 1).sum();
  }
  return t;
}

/// P_π by explicit triple loop over (s, a, t).
inline Eigen::MatrixXd dense_policy_transition(const MdpModel& model,
                                               const Policy& policy) {
  const Eigen::Index n = model.num_states;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < model.num_actions; ++a) {
    const Eigen::MatrixXd pa(model.transitions[a]);
    for (Eigen::Index s = 0; s < n; ++s) {
      for (Eigen::Index t = 0; t < n; ++t) p(s, t) += policy(s, a) * pa(s, t);
    }
  }
  return p;
}

/// r_π − τh_π evaluated entry by entry from φ directly.
inline Eigen::VectorXd dense_policy_reward(const MdpModel& model,
                                           const Policy& policy,
                                           const Regularizer& reg,
                                           double tau) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(model.num_states);
  for (Eigen::Index s = 0; s < model.num_states; ++s) {
    for (Eigen::Index a = 0; a < model.num_actions; ++a) {
      const double mu = reg.prior()(s, a);
      r(s) += policy(s, a) * model.rewards(s, a) -
              tau * mu * reg.divergence().phi(policy(s, a) / mu);
    }
  }
  return r;
}

/// v_π by dense LU on the explicitly assembled system.
inline Eigen::VectorXd dense_value(const MdpModel& model, const Policy& policy,
                                   const Regularizer& reg, double tau) {
  const Eigen::Index n = model.num_states;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) -
                            model.discount * dense_policy_transition(model, policy);
  return a.fullPivLu().solve(dense_policy_reward(model, policy, reg, tau));
}

/// v_π by fixed-point value iteration until successive iterates differ by
/// at most `tol` in the max norm.
inline Eigen::VectorXd value_iteration(const MdpModel& model,
                                       const Policy& policy,
                                       const Regularizer& reg, double tau,
                                       double tol = 1e-13) {
  const Eigen::MatrixXd p = dense_policy_transition(model, policy);
  const Eigen::VectorXd r = dense_policy_reward(model, policy, reg, tau);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(model.num_states);
  for (int it = 0; it < 1000000; ++it) {
    const Eigen::VectorXd next = r + model.discount * p * v;
    const double diff = (next - v).lpNorm<Eigen::Infinity>();
    v = next;
    if (diff <= tol) break;
  }
  return v;
}

/// E(π) = Σ_s v_s for an arbitrary (not necessarily normalized) table,
/// evaluated with the dense oracle.
inline double dense_objective(const MdpModel& model,
                              const Eigen::MatrixXd& probs,
                              const Regularizer& reg, double tau) {
  // Policy validation is bypassed on purpose: finite differences step off
  // the simplex by rounding only, so assemble the system by hand.
  const Eigen::Index n = model.num_states;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (Eigen::Index a = 0; a < model.num_actions; ++a) {
    const Eigen::MatrixXd pa(model.transitions[a]);
    for (Eigen::Index s = 0; s < n; ++s) {
      const double mu = reg.prior()(s, a);
      p.row(s) += probs(s, a) * pa.row(s);
      r(s) += probs(s, a) * model.rewards(s, a) -
              tau * mu * reg.divergence().phi(probs(s, a) / mu);
    }
  }
  const Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(n, n) - model.discount * p;
  return sys.fullPivLu().solve(r).sum();
}

/// Central difference (f(x + h) − f(x − h)) / 2h.
inline double central_difference(const std::function<double(double)>& f,
                                 double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Root of an increasing-or-decreasing scalar function on [lo, hi] located by
/// scanning `points` evenly spaced samples for the sign change and
/// interpolating linearly inside the bracketing cell.
inline double grid_scan_root(const std::function<double(double)>& f, double lo,
                             double hi, int points = 200000) {
  const double h = (hi - lo) / points;
  double x0 = lo;
  double f0 = f(x0);
  for (int i = 1; i <= points; ++i) {
    const double x1 = lo + i * h;
    const double f1 = f(x1);
    if ((f0 <= 0.0) != (f1 <= 0.0)) return x0 - f0 * (x1 - x0) / (f1 - f0);
    x0 = x1;
    f0 = f1;
  }
  return std::nan("");
}

inline bool rows_stochastic(const Eigen::MatrixXd& p, double tol) {
  for (Eigen::Index s = 0; s < p.rows(); ++s) {
    if (std::abs(p.row(s).sum() - 1.0) > tol) return false;
  }
  return (p.array() > 0.0).all();
}

}  // namespace qnpg::test
