#include "qnpg/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qnpg/errors.hpp"
#include "qnpg/mdp.hpp"

namespace qnpg {

namespace {

void require_positive(double x, const char* fn) {
  if (!(x > 0.0)) {
    std::ostringstream msg;
    msg << fn << " is defined for x > 0 only, got " << x;
    throw DomainError(msg.str());
  }
}

}  // namespace

Divergence Divergence::kl() { return {Family::kl, 1.0}; }
Divergence Divergence::reverse_kl() { return {Family::reverse_kl, -1.0}; }
Divergence Divergence::hellinger() { return {Family::hellinger, 0.0}; }

Divergence Divergence::alpha(double alpha) {
  if (!(alpha < 1.0) || alpha == -1.0 || !std::isfinite(alpha)) {
    std::ostringstream msg;
    msg << "alpha-divergence needs a finite alpha < 1 other than -1, got "
        << alpha;
    throw SpecError(msg.str());
  }
  return {Family::alpha, alpha};
}

Divergence Divergence::parse(std::string_view text) {
  if (text == "kl") return kl();
  if (text == "rkl") return reverse_kl();
  if (text == "hellinger") return hellinger();
  constexpr std::string_view prefix = "alpha:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string value(text.substr(prefix.size()));
    std::size_t used = 0;
    double alpha = 0.0;
    try {
      alpha = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) {
      throw SpecError("cannot parse alpha value in regularizer '" +
                      std::string(text) + "'");
    }
    return Divergence::alpha(alpha);
  }
  throw SpecError("unknown regularizer '" + std::string(text) +
                  "' (expected kl, rkl, hellinger or alpha:<float>)");
}

std::string Divergence::name() const {
  switch (family_) {
    case Family::kl:
      return "kl";
    case Family::reverse_kl:
      return "rkl";
    case Family::hellinger:
      return "hellinger";
    case Family::alpha: {
      std::ostringstream out;
      out.precision(17);
      out << "alpha:" << alpha_;
      return out.str();
    }
  }
  return {};
}

double Divergence::phi(double x) const {
  require_positive(x, "phi");
  switch (family_) {
    case Family::kl:
      return x * std::log(x);
    case Family::reverse_kl:
      return -std::log(x);
    case Family::hellinger:
    case Family::alpha:
      return 4.0 / (1.0 - alpha_ * alpha_) *
             (1.0 - std::pow(x, 0.5 * (1.0 + alpha_)));
  }
  return 0.0;
}

double Divergence::phi_prime(double x) const {
  require_positive(x, "phi_prime");
  switch (family_) {
    case Family::kl:
      return std::log(x) + 1.0;
    case Family::reverse_kl:
      return -1.0 / x;
    case Family::hellinger:
    case Family::alpha:
      return 2.0 / (alpha_ - 1.0) * std::pow(x, 0.5 * (alpha_ - 1.0));
  }
  return 0.0;
}

double Divergence::phi_second(double x) const {
  require_positive(x, "phi_second");
  switch (family_) {
    case Family::kl:
      return 1.0 / x;
    case Family::reverse_kl:
      return 1.0 / (x * x);
    case Family::hellinger:
    case Family::alpha:
      return std::pow(x, 0.5 * (alpha_ - 3.0));
  }
  return 0.0;
}

double Divergence::psi(double y) const {
  switch (family_) {
    case Family::kl:
      return std::exp(-y - 1.0);
    case Family::reverse_kl:
      require_positive(y, "psi");
      return 1.0 / y;
    case Family::hellinger:
    case Family::alpha:
      require_positive(y, "psi");
      return std::pow(0.5 * (1.0 - alpha_) * y, 2.0 / (alpha_ - 1.0));
  }
  return 0.0;
}

double Divergence::domain_bound() const {
  return family_ == Family::kl ? -std::numeric_limits<double>::infinity()
                               : 0.0;
}

Regularizer::Regularizer(Divergence divergence, Eigen::MatrixXd prior)
    : divergence_(divergence), prior_(std::move(prior)) {
  if (prior_.size() == 0) throw DimensionError("prior must not be empty");
  for (Eigen::Index s = 0; s < prior_.rows(); ++s) {
    if ((prior_.row(s).array() <= 0.0).any()) {
      throw DomainError("prior entries must be strictly positive");
    }
    if (std::abs(prior_.row(s).sum() - 1.0) > 1e-12) {
      throw DomainError("prior rows must sum to 1");
    }
  }
}

Regularizer Regularizer::uniform(Divergence divergence, Eigen::Index num_states,
                                 Eigen::Index num_actions) {
  return {divergence,
          Eigen::MatrixXd::Constant(num_states, num_actions,
                                    1.0 / static_cast<double>(num_actions))};
}

namespace {

void check_shape(const Regularizer& reg, Eigen::Index rows, Eigen::Index cols) {
  if (reg.prior().rows() != rows || reg.prior().cols() != cols) {
    throw DimensionError("regularizer prior shape does not match the table");
  }
}

}  // namespace

Eigen::VectorXd entropy(const Regularizer& reg, const Policy& policy) {
  const auto& pi = policy.probs();
  const auto& mu = reg.prior();
  check_shape(reg, pi.rows(), pi.cols());
  Eigen::VectorXd h(pi.rows());
  for (Eigen::Index s = 0; s < pi.rows(); ++s) {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < pi.cols(); ++a) {
      const double ratio = std::max(pi(s, a), kPolicyFloor) / mu(s, a);
      acc += mu(s, a) * reg.divergence().phi(ratio);
    }
    h(s) = acc;
  }
  return h;
}

ThetaTable theta_of_policy(const Regularizer& reg, const Policy& policy) {
  const auto& pi = policy.probs();
  const auto& mu = reg.prior();
  check_shape(reg, pi.rows(), pi.cols());
  ThetaTable theta{Eigen::MatrixXd(pi.rows(), pi.cols())};
  for (Eigen::Index s = 0; s < pi.rows(); ++s) {
    for (Eigen::Index a = 0; a < pi.cols(); ++a) {
      theta.values(s, a) = reg.divergence().phi_prime(
          std::max(pi(s, a), kPolicyFloor) / mu(s, a));
    }
  }
  return theta;
}

Eigen::MatrixXd policy_of_theta(const Regularizer& reg,
                                const ThetaTable& theta) {
  const auto& mu = reg.prior();
  check_shape(reg, theta.values.rows(), theta.values.cols());
  Eigen::MatrixXd out(mu.rows(), mu.cols());
  for (Eigen::Index s = 0; s < mu.rows(); ++s) {
    for (Eigen::Index a = 0; a < mu.cols(); ++a) {
      out(s, a) = mu(s, a) * reg.divergence().psi(-theta.values(s, a));
    }
  }
  return out;
}

}  // namespace qnpg
