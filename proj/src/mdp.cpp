#include "qnpg/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "qnpg/bicgstab.hpp"
#include "qnpg/errors.hpp"

namespace qnpg {

void validate_model(const MdpModel& model) {
  const auto n = model.num_states;
  const auto m = model.num_actions;
  if (n <= 0 || m <= 0) {
    throw DimensionError("model needs at least one state and one action");
  }
  if (!(model.discount > 0.0 && model.discount < 1.0)) {
    throw DiscountRangeError(model.discount);
  }
  if (model.rewards.rows() != n || model.rewards.cols() != m) {
    throw DimensionError("reward table must be |S|x|A|");
  }
  if (!model.rewards.allFinite()) {
    throw DomainError("rewards must be finite");
  }
  if (static_cast<Eigen::Index>(model.transitions.size()) != m) {
    throw DimensionError("need exactly one transition matrix per action");
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto& p = model.transitions[a];
    if (p.rows() != n || p.cols() != n) {
      throw DimensionError("transition matrices must be |S|x|S|");
    }
    for (Eigen::Index s = 0; s < n; ++s) {
      double sum = 0.0;
      for (SparseMatrix::InnerIterator it(p, s); it; ++it) {
        if (!(it.value() >= 0.0)) {
          throw NegativeProbabilityError(s, a, it.col(), it.value());
        }
        sum += it.value();
      }
      if (!(std::abs(sum - 1.0) <= 1e-12)) throw RowSumError(s, a, sum);
    }
  }
}

Policy::Policy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw DimensionError("policy must not be empty");
  for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
    if (!(probs_.row(s).array() > 0.0).all()) {
      std::ostringstream msg;
      msg << "policy row " << s << " has a non-positive entry";
      throw DomainError(msg.str());
    }
    const double sum = probs_.row(s).sum();
    if (!(std::abs(sum - 1.0) <= 1e-12)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "policy row " << s << " sums to " << sum;
      throw DomainError(msg.str());
    }
  }
}

Policy Policy::uniform(Eigen::Index num_states, Eigen::Index num_actions) {
  return Policy(Eigen::MatrixXd::Constant(
      num_states, num_actions, 1.0 / static_cast<double>(num_actions)));
}

namespace {

void check_policy_shape(const MdpModel& model, const Policy& policy) {
  if (policy.num_states() != model.num_states ||
      policy.num_actions() != model.num_actions) {
    throw DimensionError("policy shape does not match the model");
  }
}

bool use_dense(const MdpModel& model, const LinearSolverSettings& settings) {
  switch (settings.kind) {
    case LinearSolverKind::dense:
      return true;
    case LinearSolverKind::bicgstab:
      return false;
    case LinearSolverKind::automatic:
      break;
  }
  return model.num_states <= settings.dense_threshold;
}

int iteration_cap(const MdpModel& model, const LinearSolverSettings& settings) {
  return settings.max_iters > 0 ? settings.max_iters
                                : static_cast<int>(10 * model.num_states);
}

// Solves (I − γM) x = b, or (I − γMᵀ) x = b when `transpose` is set.
Eigen::VectorXd solve_resolvent(const MdpModel& model, const SparseMatrix& m,
                                bool transpose, const Eigen::VectorXd& b,
                                const LinearSolverSettings& settings,
                                ValueSolveReport& report) {
  const double gamma = model.discount;
  const double b_norm = b.norm();
  if (use_dense(model, settings)) {
    Eigen::MatrixXd z = -gamma * Eigen::MatrixXd(m);
    z.diagonal().array() += 1.0;
    if (transpose) z.transposeInPlace();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(z);
    Eigen::VectorXd x = lu.solve(b);
    report.solver_kind = LinearSolverKind::dense;
    report.steps = 0;
    report.residual = b_norm > 0.0 ? (z * x - b).norm() / b_norm : 0.0;
    return x;
  }

  LinearOperator apply;
  SparseMatrix mt;
  if (transpose) {
    mt = m.transpose();
    apply = [&mt, gamma](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
      out.noalias() = x - gamma * (mt * x);
    };
  } else {
    apply = [&m, gamma](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
      out.noalias() = x - gamma * (m * x);
    };
  }
  auto result = bicgstab(apply, b, settings.tol, iteration_cap(model, settings));
  report.solver_kind = LinearSolverKind::bicgstab;
  report.steps = result.steps;
  report.residual = result.residual;
  return std::move(result.x);
}

}  // namespace

SparseMatrix policy_transition(const MdpModel& model, const Policy& policy) {
  check_policy_shape(model, policy);
  std::vector<Eigen::Triplet<double>> entries;
  std::size_t nnz = 0;
  for (const auto& p : model.transitions) nnz += p.nonZeros();
  entries.reserve(nnz);
  for (Eigen::Index a = 0; a < model.num_actions; ++a) {
    const auto& p = model.transitions[a];
    for (Eigen::Index s = 0; s < model.num_states; ++s) {
      const double weight = policy(s, a);
      for (SparseMatrix::InnerIterator it(p, s); it; ++it) {
        entries.emplace_back(s, it.col(), weight * it.value());
      }
    }
  }
  SparseMatrix out(model.num_states, model.num_states);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

Eigen::VectorXd policy_reward(const MdpModel& model, const Policy& policy,
                              const Regularizer& reg, double tau) {
  check_policy_shape(model, policy);
  Eigen::VectorXd r =
      (policy.probs().array() * model.rewards.array()).rowwise().sum();
  if (tau != 0.0) r -= tau * entropy(reg, policy);
  return r;
}

ValueSolution value_function(const MdpModel& model, const Policy& policy,
                             const Regularizer& reg, double tau,
                             const LinearSolverSettings& settings) {
  const SparseMatrix p_pi = policy_transition(model, policy);
  const Eigen::VectorXd rhs = policy_reward(model, policy, reg, tau);
  ValueSolution out;
  out.value = solve_resolvent(model, p_pi, false, rhs, settings, out.report);
  return out;
}

Eigen::VectorXd resolve_weights(const MdpModel& model,
                                const Eigen::VectorXd& weight_e) {
  if (weight_e.size() == 0) return Eigen::VectorXd::Ones(model.num_states);
  if (weight_e.size() != model.num_states) {
    throw DimensionError("state weight vector must have length |S|");
  }
  if (!(weight_e.array() > 0.0).all()) {
    throw DomainError("state weights must be strictly positive");
  }
  return weight_e;
}

Eigen::VectorXd weight_vector(const MdpModel& model, const Policy& policy,
                              const Eigen::VectorXd& weight_e,
                              const LinearSolverSettings& settings,
                              ValueSolveReport* report) {
  const Eigen::VectorXd e = resolve_weights(model, weight_e);
  const SparseMatrix p_pi = policy_transition(model, policy);
  ValueSolveReport local;
  Eigen::VectorXd w = solve_resolvent(model, p_pi, true, e, settings, local);
  if (report) *report = local;
  return w;
}

double objective(const MdpModel& model, const Policy& policy,
                 const Regularizer& reg, double tau,
                 const Eigen::VectorXd& weight_e,
                 const LinearSolverSettings& settings) {
  const Eigen::VectorXd e = resolve_weights(model, weight_e);
  return e.dot(value_function(model, policy, reg, tau, settings).value);
}

Eigen::MatrixXd action_values(const MdpModel& model, const Eigen::VectorXd& v) {
  if (v.size() != model.num_states) {
    throw DimensionError("value vector must have |S| entries");
  }
  Eigen::MatrixXd q = model.rewards;
  for (Eigen::Index a = 0; a < model.num_actions; ++a) {
    q.col(a) += model.discount * (model.transitions[a] * v);
  }
  return q;
}

double directional_derivative(const MdpModel& model, const Policy& policy,
                              const Regularizer& reg, double tau,
                              const Eigen::VectorXd& weight_e,
                              const Eigen::MatrixXd& tangent,
                              const LinearSolverSettings& settings) {
  check_policy_shape(model, policy);
  if (tangent.rows() != model.num_states ||
      tangent.cols() != model.num_actions) {
    throw DimensionError("tangent shape does not match the model");
  }
  for (Eigen::Index s = 0; s < tangent.rows(); ++s) {
    const double sum = tangent.row(s).sum();
    if (!(std::abs(sum) <= 1e-12)) throw TangentError(s, sum);
  }

  const Eigen::VectorXd v =
      value_function(model, policy, reg, tau, settings).value;
  const Eigen::VectorXd w = weight_vector(model, policy, weight_e, settings);
  const Eigen::MatrixXd q = action_values(model, v);

  // r_ε − Z_ε v − τ Dh_π ε, state by state.
  double total = 0.0;
  for (Eigen::Index s = 0; s < model.num_states; ++s) {
    double row = 0.0;
    for (Eigen::Index a = 0; a < model.num_actions; ++a) {
      double g = q(s, a) - v(s);
      if (tau != 0.0) {
        const double ratio =
            std::max(policy(s, a), kPolicyFloor) / reg.prior()(s, a);
        g -= tau * reg.divergence().phi_prime(ratio);
      }
      row += tangent(s, a) * g;
    }
    total += w(s) * row;
  }
  return total;
}

}  // namespace qnpg
