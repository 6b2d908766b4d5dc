#include "qnpg/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "qnpg/parallel.hpp"
#include "qnpg/simplex.hpp"

namespace qnpg {

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) { throw SpecError(what); };
  if (!(tau > 0.0) || !std::isfinite(tau)) fail("tau must be positive");
  if (!(eta > 0.0 && eta <= 1.0)) fail("eta must lie in (0, 1]");
  if (!(eps_tol > 0.0)) fail("eps_tol must be positive");
  if (max_iters < 1) fail("max_iters must be at least 1");
  if (!(bisect_tol > 0.0)) fail("bisect_tol must be positive");
  if (!(linear.tol > 0.0)) fail("linear solver tolerance must be positive");
}

MaxItersExceeded::MaxItersExceeded(SolveResult partial)
    : Error("iteration cap reached before the relative policy change fell "
            "below the tolerance"),
      partial(std::move(partial)) {}

Iterate make_iterate(const Regularizer& reg, Policy policy) {
  ThetaTable theta = theta_of_policy(reg, policy);
  return {std::move(policy), std::move(theta)};
}

namespace {

void check_value(const MdpModel& model, const Eigen::VectorXd& value) {
  if (value.size() != model.num_states) {
    throw DimensionError("value vector must have length |S|");
  }
}

double state_rate(const SolverConfig& config, const Eigen::VectorXd* eta,
                  Eigen::Index s) {
  return eta ? (*eta)(s) : config.eta;
}

using RowKernel = std::function<void(Eigen::Index s)>;

void for_each_state(Eigen::Index num_states, int threads,
                    const RowKernel& kernel) {
  parallel_for(static_cast<std::size_t>(num_states), threads,
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t s = begin; s < end; ++s) {
                   kernel(static_cast<Eigen::Index>(s));
                 }
               });
}

Iterate kl_update_impl(const MdpModel& model, const Iterate& current,
                       const Regularizer& reg, const SolverConfig& config,
                       const Eigen::VectorXd& value,
                       const Eigen::VectorXd* eta_per_state) {
  check_value(model, value);
  const Eigen::MatrixXd q = action_values(model, value);
  const auto& mu = reg.prior();
  const auto& theta = current.theta.values;
  const Eigen::Index n = model.num_states;
  const Eigen::Index m = model.num_actions;

  Eigen::MatrixXd probs(n, m);
  Eigen::MatrixXd theta_new(n, m);
  for_each_state(n, config.threads, [&](Eigen::Index s) {
    const double eta = state_rate(config, eta_per_state, s);
    Eigen::VectorXd logits(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const double log_mu = std::log(mu(s, a));
      // log π = θ − 1 + log μ for KL dual coordinates.
      const double log_pi = theta(s, a) - 1.0 + log_mu;
      logits(a) = eta * log_mu + (1.0 - eta) * log_pi +
                  eta * q(s, a) / config.tau;
    }
    const double top = logits.maxCoeff();
    double sum = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) sum += std::exp(logits(a) - top);
    const double log_sum = std::log(sum);
    for (Eigen::Index a = 0; a < m; ++a) {
      const double log_pi = logits(a) - top - log_sum;
      probs(s, a) = std::max(std::exp(log_pi), kPolicyFloor);
      theta_new(s, a) = log_pi - std::log(mu(s, a)) + 1.0;
    }
  });
  return {Policy(std::move(probs)), ThetaTable{std::move(theta_new)}};
}

}  // namespace

Iterate kl_update(const MdpModel& model, const Iterate& current,
                  const Regularizer& reg, const SolverConfig& config,
                  const Eigen::VectorXd& value) {
  if (reg.divergence().family() != Family::kl) {
    throw SpecError("closed-form update requires the KL divergence");
  }
  return kl_update_impl(model, current, reg, config, value, nullptr);
}

Iterate general_update(const MdpModel& model, const Iterate& current,
                       const Regularizer& reg, const SolverConfig& config,
                       const Eigen::VectorXd& value,
                       const Eigen::VectorXd* eta_per_state) {
  check_value(model, value);
  const Eigen::MatrixXd q = action_values(model, value);
  const auto& mu = reg.prior();
  const auto& theta = current.theta.values;
  const Eigen::Index n = model.num_states;
  const Eigen::Index m = model.num_actions;
  const DecreasingMap map = DecreasingMap::from_divergence(reg.divergence());

  Eigen::MatrixXd probs(n, m);
  Eigen::MatrixXd theta_new(n, m);
  for_each_state(n, config.threads, [&](Eigen::Index s) {
    const double eta = state_rate(config, eta_per_state, s);
    MultiplierProblem problem{std::vector<double>(m), std::vector<double>(m),
                              map};
    for (Eigen::Index a = 0; a < m; ++a) {
      problem.weights[a] = mu(s, a);
      // r − [(I − γP^a) v]_s = Q − v_s.
      problem.shifts[a] = -(1.0 - eta) * theta(s, a) -
                          eta / config.tau * (q(s, a) - value(s));
    }
    const MultiplierRoot root =
        solve_multiplier_detailed(problem, config.bisect_tol);
    double sum = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      const double arg = root.shifted_root + (problem.shifts[a] - root.offset);
      probs(s, a) = mu(s, a) * map.psi(arg);
      theta_new(s, a) = -arg;
      sum += probs(s, a);
    }
    for (Eigen::Index a = 0; a < m; ++a) {
      probs(s, a) = std::max(probs(s, a) / sum, kPolicyFloor);
    }
  });
  return {Policy(std::move(probs)), ThetaTable{std::move(theta_new)}};
}

Policy kl_update_step(const MdpModel& model, const Policy& policy,
                      const Regularizer& reg, const SolverConfig& config,
                      const Eigen::VectorXd& value) {
  return kl_update(model, make_iterate(reg, policy), reg, config, value).policy;
}

Policy general_update_step(const MdpModel& model, const Policy& policy,
                           const Regularizer& reg, const SolverConfig& config,
                           const Eigen::VectorXd& value) {
  return general_update(model, make_iterate(reg, policy), reg, config, value)
      .policy;
}

double relative_change(const Policy& a, const Policy& b) {
  return (b.probs() - a.probs()).norm() / a.probs().norm();
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since)
      .count();
}

// Shared driver for quasi-Newton and mirror-descent runs. `step` maps the
// current iterate and its value solve to the next iterate.
template <typename Step>
SolveResult iterate_until_converged(const MdpModel& model,
                                    const Regularizer& reg,
                                    const SolverConfig& config,
                                    const Policy& initial_policy,
                                    const IterationObserver& observer,
                                    Step&& step) {
  config.validate();
  validate_model(model);
  const Eigen::VectorXd e = resolve_weights(model, config.weight_e);

  Iterate current = make_iterate(reg, initial_policy);
  IterationTrace trace;
  if (config.record_snapshots) trace.snapshots.push_back(current.policy);

  for (int k = 1; k <= config.max_iters; ++k) {
    const auto start = Clock::now();
    const ValueSolution vs =
        value_function(model, current.policy, reg, config.tau, config.linear);
    int solve_steps = vs.report.steps;
    Iterate next = step(current, vs.value, solve_steps);

    IterationRecord record;
    record.iter = k;
    record.xi = relative_change(current.policy, next.policy);
    record.objective = e.dot(vs.value);
    record.solve_steps = solve_steps;
    if (config.record_timing) record.wall_ms = elapsed_ms(start);

    current = std::move(next);
    trace.records.push_back(record);
    if (config.record_snapshots) trace.snapshots.push_back(current.policy);
    if (observer) observer(record, current);

    if (record.xi <= config.eps_tol) {
      return {std::move(current), std::move(trace), true};
    }
  }
  throw MaxItersExceeded({std::move(current), std::move(trace), false});
}

}  // namespace

SolveResult solve(const MdpModel& model, const Regularizer& reg,
                  const SolverConfig& config, const Policy& initial_policy,
                  const IterationObserver& observer) {
  const bool closed_form = reg.divergence().family() == Family::kl;
  return iterate_until_converged(
      model, reg, config, initial_policy, observer,
      [&](const Iterate& current, const Eigen::VectorXd& value, int&) {
        return closed_form ? kl_update(model, current, reg, config, value)
                           : general_update(model, current, reg, config, value);
      });
}

// Mirror-descent baseline ---------------------------------------------------

namespace {

Eigen::VectorXd baseline_rates(double beta, const Eigen::VectorXd& weight_w,
                               bool* clamped) {
  const double cap = 1.0 / weight_w.maxCoeff();
  const double effective = std::min(beta, cap);
  if (clamped) *clamped = beta > cap;
  return effective * weight_w;
}

Iterate baseline_update(const MdpModel& model, const Iterate& current,
                        const Regularizer& reg, const SolverConfig& config,
                        const Eigen::VectorXd& value,
                        const Eigen::VectorXd& rates) {
  if (reg.divergence().family() == Family::kl) {
    return kl_update_impl(model, current, reg, config, value, &rates);
  }
  return general_update(model, current, reg, config, value, &rates);
}

}  // namespace

Policy md_baseline_step(const MdpModel& model, const Policy& policy,
                        const Regularizer& reg, double beta,
                        const SolverConfig& config, const Eigen::VectorXd& value,
                        const Eigen::VectorXd& weight_w) {
  if (!(beta > 0.0)) throw SpecError("beta must be positive");
  if (weight_w.size() != model.num_states) {
    throw DimensionError("weight vector must have length |S|");
  }
  const Eigen::VectorXd rates = baseline_rates(beta, weight_w, nullptr);
  return baseline_update(model, make_iterate(reg, policy), reg, config, value,
                         rates)
      .policy;
}

double default_baseline_beta(const MdpModel& model, const Policy& policy,
                             const SolverConfig& config) {
  const Eigen::VectorXd w =
      weight_vector(model, policy, config.weight_e, config.linear);
  return 1.0 / w.maxCoeff();
}

BaselineResult solve_mirror_descent(const MdpModel& model,
                                    const Regularizer& reg, double beta,
                                    const SolverConfig& config,
                                    const Policy& initial_policy,
                                    const IterationObserver& observer) {
  if (!(beta > 0.0)) throw SpecError("beta must be positive");
  int clamped_iterations = 0;
  auto step = [&](const Iterate& current, const Eigen::VectorXd& value,
                  int& solve_steps) {
    ValueSolveReport report;
    const Eigen::VectorXd w = weight_vector(model, current.policy,
                                            config.weight_e, config.linear,
                                            &report);
    solve_steps += report.steps;
    bool clamped = false;
    const Eigen::VectorXd rates = baseline_rates(beta, w, &clamped);
    if (clamped) ++clamped_iterations;
    return baseline_update(model, current, reg, config, value, rates);
  };
  SolveResult result = iterate_until_converged(model, reg, config,
                                               initial_policy, observer, step);
  return {std::move(result), beta, clamped_iterations};
}

// Flow ------------------------------------------------------------------------

Eigen::MatrixXd flow_velocity(const MdpModel& model, const Policy& policy,
                              const Regularizer& reg, const SolverConfig& config,
                              const Eigen::VectorXd& value) {
  check_value(model, value);
  const Eigen::MatrixXd q = action_values(model, value);
  const auto& mu = reg.prior();
  const auto& div = reg.divergence();
  Eigen::MatrixXd velocity(model.num_states, model.num_actions);
  Eigen::VectorXd u(model.num_actions), g(model.num_actions);
  for (Eigen::Index s = 0; s < model.num_states; ++s) {
    for (Eigen::Index a = 0; a < model.num_actions; ++a) {
      const double ratio = std::max(policy(s, a), kPolicyFloor) / mu(s, a);
      u(a) = mu(s, a) / div.phi_second(ratio);
      g(a) = q(s, a) - value(s) - config.tau * div.phi_prime(ratio);
    }
    const double c = -u.dot(g) / u.sum();
    velocity.row(s) = (u.array() * (g.array() + c) / config.tau).matrix();
  }
  return velocity;
}

FlowResult flow_euler(const MdpModel& model, const Regularizer& reg,
                      const SolverConfig& config, const FlowConfig& flow,
                      const Policy& initial_policy) {
  config.validate();
  validate_model(model);
  if (!(flow.dt > 0.0)) throw SpecError("flow step dt must be positive");
  if (flow.num_steps < 0) throw SpecError("flow step count must be >= 0");
  const Eigen::VectorXd e = resolve_weights(model, config.weight_e);

  FlowResult out{{}, initial_policy, 0};
  out.samples.reserve(static_cast<std::size_t>(flow.num_steps) + 1);
  double t = 0.0;
  for (int step = 0;; ++step) {
    const Eigen::VectorXd v =
        value_function(model, out.final_policy, reg, config.tau, config.linear)
            .value;
    out.samples.push_back({t, e.dot(v)});
    if (step == flow.num_steps) break;

    const Eigen::MatrixXd velocity =
        flow_velocity(model, out.final_policy, reg, config, v);
    double dt = flow.dt;
    Eigen::MatrixXd next;
    for (int halving = 0;; ++halving) {
      next = out.final_policy.probs() + dt * velocity;
      if ((next.array() > 0.0).all()) break;
      if (halving == flow.max_halvings) {
        std::ostringstream msg;
        msg << "flow step " << step << " left the simplex interior after "
            << flow.max_halvings << " halvings";
        throw StepSizeError(msg.str());
      }
      dt *= 0.5;
      ++out.halvings;
    }
    // The velocity is tangent to the simplex; only rounding drift is removed.
    for (Eigen::Index s = 0; s < next.rows(); ++s) {
      next.row(s) /= next.row(s).sum();
    }
    out.final_policy = Policy(std::move(next));
    t += dt;
  }
  return out;
}

// Optimality ------------------------------------------------------------------

double first_order_residual(const MdpModel& model, const Policy& policy,
                            const Regularizer& reg, const SolverConfig& config,
                            const ThetaTable* theta) {
  const ThetaTable own = theta ? ThetaTable{} : theta_of_policy(reg, policy);
  const Eigen::MatrixXd& th = theta ? theta->values : own.values;
  if (th.rows() != model.num_states || th.cols() != model.num_actions) {
    throw DimensionError("dual coordinate table shape does not match model");
  }
  const Eigen::VectorXd v =
      value_function(model, policy, reg, config.tau, config.linear).value;
  const Eigen::MatrixXd q = action_values(model, v);
  double worst = 0.0;
  Eigen::VectorXd g(model.num_actions);
  for (Eigen::Index s = 0; s < model.num_states; ++s) {
    for (Eigen::Index a = 0; a < model.num_actions; ++a) {
      g(a) = q(s, a) - v(s) - config.tau * th(s, a);
    }
    const double c = -g.mean();
    worst = std::max(worst, (g.array() + c).abs().maxCoeff());
  }
  return worst;
}

double first_order_residual(const MdpModel& model, const Iterate& iterate,
                            const Regularizer& reg, const SolverConfig& config) {
  return first_order_residual(model, iterate.policy, reg, config,
                              &iterate.theta);
}

}  // namespace qnpg
