#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "qnpg/solver.hpp"

namespace qnpg {

enum class RateVerdict { quadratic, linear, inconclusive };

std::string_view to_string(RateVerdict verdict);

struct DiagnosticRow {
  int iter = 0;
  /// ‖π_k − π*‖_F.
  double err_frob = 0.0;
  /// log|log err|; NaN when err is not measurable.
  double loglog_err = 0.0;
  /// log e_{k+1} / log e_k; NaN unless both errors are measurable.
  double ratio = 0.0;
};

struct DiagnosticTable {
  std::vector<DiagnosticRow> rows;
  /// Successive log-error ratios over consecutive measurable errors.
  std::vector<double> ratios;
  RateVerdict verdict = RateVerdict::inconclusive;
};

/// Errors at or below this relative level are treated as rounding noise.
inline constexpr double kMeasurableRelativeFloor = 1e-13;

/**
 * Convergence-order diagnostics for an error sequence e_0, e_1, ...
 *
 * An error is measurable when floor < e < 1. For every consecutive pair of
 * measurable errors the ratio log e_{k+1} / log e_k is recorded; it tends to 2
 * for quadratic and to 1 for linear convergence. The verdict looks at the last
 * two ratios: both in [1.5, 2.5] is quadratic, both in [0.8, 1.3] is linear.
 *
 * Throws InsufficientData when fewer than three errors are measurable.
 */
DiagnosticTable convergence_diagnostics(std::span<const double> errors,
                                        double floor = kMeasurableRelativeFloor);

/// Same, with e_k = ‖snapshot_k − reference‖_F. The floor is the relative
/// floor scaled by max(1, ‖reference‖_F), raised to the size of the last
/// recorded step: errors that small cannot be told apart from the run's own
/// stopping noise. Requires a trace with snapshots.
DiagnosticTable convergence_diagnostics(const IterationTrace& trace,
                                        const Policy& reference);

/// ‖snapshot_k − reference‖_F for every snapshot in the trace.
std::vector<double> policy_errors(const IterationTrace& trace,
                                  const Policy& reference);

}  // namespace qnpg
