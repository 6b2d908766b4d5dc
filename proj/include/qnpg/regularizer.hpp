#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

namespace qnpg {

class Policy;

/// Smallest probability an update may produce; also the clamp applied before
/// φ or log is evaluated.
inline constexpr double kPolicyFloor = 1e-300;

enum class Family { kl, reverse_kl, hellinger, alpha };

/**
 * Convex generator φ of an f-divergence with φ(1) = 0 and φ′(0⁺) = −∞.
 *
 * Members of the family:
 *
 *   kl           φ(x) = x log x
 *   reverse_kl   φ(x) = −log x
 *   alpha(α<1)   φ(x) = 4/(1−α²) · (1 − x^((1+α)/2)),  α ≠ −1
 *   hellinger    alpha(0), i.e. φ(x) = 4(1 − √x)
 *
 * Hellinger is the raw α = 0 member; it is not halved, so a Hellinger run
 * with coefficient τ matches the halved textbook Hellinger divergence at 2τ.
 *
 * ψ = (−φ′)⁻¹ maps (L, ∞) onto (0, ∞) and is strictly decreasing, with
 * L = −sup φ′ (−∞ for kl, 0 for every other member).
 */
class Divergence {
 public:
  static Divergence kl();
  static Divergence reverse_kl();
  static Divergence hellinger();
  /// Throws SpecError unless α < 1 and α ≠ −1.
  static Divergence alpha(double alpha);

  /// Parses `kl | rkl | hellinger | alpha:<float>`.
  static Divergence parse(std::string_view text);

  Family family() const { return family_; }
  /// Exponent parameter; 0 for hellinger, meaningless for kl/reverse_kl.
  double alpha_value() const { return alpha_; }
  /// Canonical textual form accepted by parse().
  std::string name() const;

  double phi(double x) const;
  double phi_prime(double x) const;
  double phi_second(double x) const;
  double psi(double y) const;

  /// Lower end L of ψ's domain. −∞ for kl.
  double domain_bound() const;

 private:
  Divergence(Family family, double alpha) : family_(family), alpha_(alpha) {}

  Family family_;
  double alpha_;
};

/// Dual coordinates θ[s][a] = φ′(π[s][a] / μ[s][a]).
struct ThetaTable {
  Eigen::MatrixXd values;
};

/// A divergence together with its prior μ (positive, row-stochastic).
class Regularizer {
 public:
  Regularizer(Divergence divergence, Eigen::MatrixXd prior);

  static Regularizer uniform(Divergence divergence, Eigen::Index num_states,
                             Eigen::Index num_actions);

  const Divergence& divergence() const { return divergence_; }
  const Eigen::MatrixXd& prior() const { return prior_; }

 private:
  Divergence divergence_;
  Eigen::MatrixXd prior_;
};

/// (h_π)_s = Σ_a μ_s^a φ(π_s^a / μ_s^a).
Eigen::VectorXd entropy(const Regularizer& reg, const Policy& policy);

ThetaTable theta_of_policy(const Regularizer& reg, const Policy& policy);

/// μ_s^a ψ(−θ_s^a) entrywise. Rows are not renormalized.
Eigen::MatrixXd policy_of_theta(const Regularizer& reg, const ThetaTable& theta);

}  // namespace qnpg
