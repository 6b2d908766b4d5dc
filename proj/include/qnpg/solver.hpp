#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "qnpg/errors.hpp"
#include "qnpg/mdp.hpp"
#include "qnpg/regularizer.hpp"

namespace qnpg {

/// Run parameters. Defaults reproduce the synthetic benchmark setup:
/// τ = 0.001, η = 1, stop at ξ ≤ 1e-12.
struct SolverConfig {
  double tau = 0.001;
  double eta = 1.0;
  double eps_tol = 1e-12;
  int max_iters = 100;
  /// Residual tolerance |Σ_a μ_a ψ(c + x_a) − 1| for the multiplier search.
  double bisect_tol = 1e-14;
  LinearSolverSettings linear;
  /// State weights e; empty means all ones.
  Eigen::VectorXd weight_e;
  int threads = 1;
  bool record_snapshots = false;
  /// Wall time is left at 0 unless enabled, keeping traces reproducible.
  bool record_timing = false;

  /// Throws SpecError for τ ≤ 0, η ∉ (0, 1], non-positive tolerances.
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  /// ‖π_new − π‖_F / ‖π‖_F.
  double xi = 0.0;
  /// E(π) of the policy the iteration started from.
  double objective = 0.0;
  int solve_steps = 0;
  double wall_ms = 0.0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  /// snapshots[k] is the policy after k iterations (snapshots[0] is the
  /// initial policy). Empty unless SolverConfig::record_snapshots.
  std::vector<Policy> snapshots;
};

/// A policy together with its exact dual coordinates. θ is carried
/// separately because for KL the probabilities μψ(−θ) underflow long before
/// θ loses precision.
struct Iterate {
  Policy policy;
  ThetaTable theta;
};

Iterate make_iterate(const Regularizer& reg, Policy policy);

using IterationObserver =
    std::function<void(const IterationRecord& record, const Iterate& iterate)>;

struct SolveResult {
  Iterate final;
  IterationTrace trace;
  bool converged = false;
};

/// Thrown by solve() when ξ stays above eps_tol for max_iters iterations.
class MaxItersExceeded : public Error {
 public:
  explicit MaxItersExceeded(SolveResult partial);

  SolveResult partial;
};

/**
 * Closed-form KL (natural policy gradient) step with prior μ:
 *
 *   π_new ∝ μ^η π^(1−η) exp(η (r + γ P^a v) / τ)
 *
 * evaluated in log space with the row maximum subtracted.
 */
Iterate kl_update(const MdpModel& model, const Iterate& current,
                  const Regularizer& reg, const SolverConfig& config,
                  const Eigen::VectorXd& value);

/**
 * General quasi-Newton step θ ← η(r − [(I − γP^a)v] + c)/τ + (1 − η)θ for any
 * divergence. Each row solves Σ_a μ_a ψ(c̃ + x_a) = 1 with
 *
 *   x_a = −(1 − η_s) θ_s^a − (η_s/τ)(r_s^a − [(I − γP^a) v]_s).
 *
 * `eta_per_state`, when given, overrides config.eta state by state.
 */
Iterate general_update(const MdpModel& model, const Iterate& current,
                       const Regularizer& reg, const SolverConfig& config,
                       const Eigen::VectorXd& value,
                       const Eigen::VectorXd* eta_per_state = nullptr);

Policy kl_update_step(const MdpModel& model, const Policy& policy,
                      const Regularizer& reg, const SolverConfig& config,
                      const Eigen::VectorXd& value);

Policy general_update_step(const MdpModel& model, const Policy& policy,
                           const Regularizer& reg, const SolverConfig& config,
                           const Eigen::VectorXd& value);

/// ‖b − a‖_F / ‖a‖_F.
double relative_change(const Policy& a, const Policy& b);

/**
 * Quasi-Newton policy iteration: evaluate v_π, update with the KL closed form
 * or the general multiplier path, repeat until ξ ≤ eps_tol.
 *
 * Throws MaxItersExceeded (carrying the partial result) when the iteration
 * cap is reached first.
 */
SolveResult solve(const MdpModel& model, const Regularizer& reg,
                  const SolverConfig& config, const Policy& initial_policy,
                  const IterationObserver& observer = {});

// Explicit mirror-descent baseline --------------------------------------

/**
 * Mirror-descent step with constant learning rate β: the general update with
 * per-state rate η_s = β (w_π)_s. β is clamped to 1 / max_s (w_π)_s.
 */
Policy md_baseline_step(const MdpModel& model, const Policy& policy,
                        const Regularizer& reg, double beta,
                        const SolverConfig& config, const Eigen::VectorXd& value,
                        const Eigen::VectorXd& weight_w);

struct BaselineResult {
  SolveResult result;
  double beta = 0.0;
  /// Iterations in which β had to be clamped to 1 / max_s (w_π)_s.
  int clamped_iterations = 0;
};

/// Largest β that keeps every per-state rate ≤ 1 at `policy`.
double default_baseline_beta(const MdpModel& model, const Policy& policy,
                             const SolverConfig& config);

/// Runs md_baseline_step to ξ ≤ config.eps_tol. Throws MaxItersExceeded.
BaselineResult solve_mirror_descent(const MdpModel& model,
                                    const Regularizer& reg, double beta,
                                    const SolverConfig& config,
                                    const Policy& initial_policy,
                                    const IterationObserver& observer = {});

// Continuous-time flow ----------------------------------------------------

struct FlowConfig {
  double dt = 1e-3;
  int num_steps = 10000;
  /// Consecutive halvings allowed for one step before StepSizeError.
  int max_halvings = 50;
};

struct FlowSample {
  double t = 0.0;
  double objective = 0.0;
};

struct FlowResult {
  /// (t, E(π(t))) at t = 0 and after every step.
  std::vector<FlowSample> samples;
  Policy final_policy;
  int halvings = 0;
};

/**
 * Right-hand side dπ_s^a/dt = u_s^a (g_s^a + c_s) / τ of the quasi-Newton
 * flow, with u = μ / φ″(π/μ), g = r − τφ′(π/μ) − [(I − γP^a)v], and
 * c_s = −Σ_a u g / Σ_a u fixed by Σ_a dπ_s^a/dt = 0.
 */
Eigen::MatrixXd flow_velocity(const MdpModel& model, const Policy& policy,
                              const Regularizer& reg, const SolverConfig& config,
                              const Eigen::VectorXd& value);

/// Forward-Euler integration of the flow. A step that would leave the
/// simplex interior is retried with half the step size.
FlowResult flow_euler(const MdpModel& model, const Regularizer& reg,
                      const SolverConfig& config, const FlowConfig& flow,
                      const Policy& initial_policy);

// Optimality ---------------------------------------------------------------

/**
 * max_{s,a} |r_s^a − τθ_s^a − [(I − γP^a) v_π]_s + c_s| with c_s the row mean
 * minimizer. Uses θ = φ′(π/μ) unless dual coordinates are supplied.
 */
double first_order_residual(const MdpModel& model, const Policy& policy,
                            const Regularizer& reg, const SolverConfig& config,
                            const ThetaTable* theta = nullptr);

double first_order_residual(const MdpModel& model, const Iterate& iterate,
                            const Regularizer& reg, const SolverConfig& config);

}  // namespace qnpg
