#include "qnpg/errors.hpp"

#include <sstream>

namespace qnpg {

namespace {

template <typename... Args>
std::string concat(const Args&... args) {
  std::ostringstream out;
  out.precision(17);
  (out << ... << args);
  return out.str();
}

}  // namespace

RowSumError::RowSumError(std::size_t state, std::size_t action, double sum)
    : Error(concat("transition row (s=", state, ", a=", action,
                   ") sums to ", sum, " instead of 1")),
      state(state),
      action(action),
      sum(sum) {}

DiscountRangeError::DiscountRangeError(double discount)
    : Error(concat("discount ", discount, " is outside (0, 1)")),
      discount(discount) {}

NegativeProbabilityError::NegativeProbabilityError(std::size_t state,
                                                   std::size_t action,
                                                   std::size_t target,
                                                   double value)
    : Error(concat("negative transition probability P[", state, "][", action,
                   "][", target, "] = ", value)) {}

TangentError::TangentError(std::size_t state, double row_sum)
    : Error(concat("tangent row ", state, " sums to ", row_sum,
                   "; tangent directions must have zero row sums")) {}

IterativeSolveFailure::IterativeSolveFailure(int steps, double best_residual)
    : Error(concat("Bi-CGSTAB failed after ", steps,
                   " steps, best relative residual ", best_residual)),
      steps(steps),
      best_residual(best_residual) {}

ConvergenceError::ConvergenceError(int steps, double residual)
    : Error(concat("multiplier bisection stopped after ", steps,
                   " steps with residual ", residual)),
      steps(steps),
      residual(residual) {}

FormatError::FormatError(const std::string& what, std::uint64_t offset)
    : Error(concat(what, " (at byte offset ", offset, ")")), offset(offset) {}

}  // namespace qnpg
