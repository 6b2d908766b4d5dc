#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "qnpg/regularizer.hpp"

namespace qnpg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/**
 * Finite discounted MDP (S, A, P, r, γ).
 *
 * Transitions are stored as one compressed-row |S|×|S| matrix per action:
 * transitions[a](s, t) = P[s][a][t].
 */
struct MdpModel {
  Eigen::Index num_states = 0;
  Eigen::Index num_actions = 0;
  std::vector<SparseMatrix> transitions;
  /// r[s][a], |S|×|A|.
  Eigen::MatrixXd rewards;
  double discount = 0.0;
};

/// Throws RowSumError, NegativeProbabilityError, DiscountRangeError or
/// DimensionError when the model is not a valid MDP.
void validate_model(const MdpModel& model);

/// Row-stochastic |S|×|A| table with strictly positive entries.
class Policy {
 public:
  /// Checks positivity and row sums (within 1e-12); throws DomainError.
  explicit Policy(Eigen::MatrixXd probs);

  static Policy uniform(Eigen::Index num_states, Eigen::Index num_actions);

  const Eigen::MatrixXd& probs() const { return probs_; }
  Eigen::Index num_states() const { return probs_.rows(); }
  Eigen::Index num_actions() const { return probs_.cols(); }
  double operator()(Eigen::Index s, Eigen::Index a) const {
    return probs_(s, a);
  }

 private:
  Eigen::MatrixXd probs_;
};

enum class LinearSolverKind { automatic, dense, bicgstab };

struct LinearSolverSettings {
  /// `automatic` picks dense LU up to `dense_threshold` states.
  LinearSolverKind kind = LinearSolverKind::automatic;
  Eigen::Index dense_threshold = 1024;
  double tol = 1e-12;
  /// 0 means 10·|S|.
  int max_iters = 0;
};

struct ValueSolveReport {
  LinearSolverKind solver_kind = LinearSolverKind::dense;
  int steps = 0;
  double residual = 0.0;
};

struct ValueSolution {
  Eigen::VectorXd value;
  ValueSolveReport report;
};

/// (P_π)_st = Σ_a π_s^a P_st^a.
SparseMatrix policy_transition(const MdpModel& model, const Policy& policy);

/// r_π − τ·h_π. The regularizer is not evaluated when τ = 0.
Eigen::VectorXd policy_reward(const MdpModel& model, const Policy& policy,
                              const Regularizer& reg, double tau);

/// Solves (I − γP_π) v = r_π − τ h_π.
ValueSolution value_function(const MdpModel& model, const Policy& policy,
                             const Regularizer& reg, double tau,
                             const LinearSolverSettings& settings = {});

/// Solves (I − γP_πᵀ) w = e. An empty `weight_e` means the all-ones vector.
Eigen::VectorXd weight_vector(const MdpModel& model, const Policy& policy,
                              const Eigen::VectorXd& weight_e,
                              const LinearSolverSettings& settings = {},
                              ValueSolveReport* report = nullptr);

/// E(π) = eᵀ v_π.
double objective(const MdpModel& model, const Policy& policy,
                 const Regularizer& reg, double tau,
                 const Eigen::VectorXd& weight_e,
                 const LinearSolverSettings& settings = {});

/**
 * d/dt E(π + tε) at t = 0 for a tangent ε with zero row sums:
 *
 *   Σ_s (w_π)_s Σ_a ε_s^a (r_s^a − τφ′(π_s^a/μ_s^a) − [(I − γP^a) v_π]_s)
 *
 * Throws TangentError when a row of ε sums to more than 1e-12 in magnitude.
 */
double directional_derivative(const MdpModel& model, const Policy& policy,
                              const Regularizer& reg, double tau,
                              const Eigen::VectorXd& weight_e,
                              const Eigen::MatrixXd& tangent,
                              const LinearSolverSettings& settings = {});

/// Q[s][a] = r_s^a + γ (P^a v)_s.
Eigen::MatrixXd action_values(const MdpModel& model, const Eigen::VectorXd& v);

/// The all-ones vector when `weight_e` is empty; otherwise checks length and
/// strict positivity.
Eigen::VectorXd resolve_weights(const MdpModel& model,
                                const Eigen::VectorXd& weight_e);

}  // namespace qnpg
