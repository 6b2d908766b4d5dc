#include "qnpg/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qnpg {

std::string_view to_string(RateVerdict verdict) {
  switch (verdict) {
    case RateVerdict::quadratic:
      return "quadratic";
    case RateVerdict::linear:
      return "linear";
    case RateVerdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

DiagnosticTable convergence_diagnostics(std::span<const double> errors,
                                        double floor) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  auto measurable = [floor](double e) { return e > floor && e < 1.0; };

  DiagnosticTable table;
  int count = 0;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    DiagnosticRow row;
    row.iter = static_cast<int>(k);
    row.err_frob = errors[k];
    row.loglog_err =
        measurable(errors[k]) ? std::log(-std::log(errors[k])) : nan;
    row.ratio = nan;
    if (measurable(errors[k])) {
      ++count;
      if (k > 0 && measurable(errors[k - 1])) {
        row.ratio = std::log(errors[k]) / std::log(errors[k - 1]);
        table.ratios.push_back(row.ratio);
      }
    }
    table.rows.push_back(row);
  }
  if (count < 3 || table.ratios.size() < 2) {
    std::ostringstream msg;
    msg << "only " << count
        << " measurable errors before machine precision; need at least 3";
    throw InsufficientData(msg.str());
  }

  auto within = [](double x, double lo, double hi) {
    return x >= lo && x <= hi;
  };
  const double last = table.ratios.back();
  const double prev = table.ratios[table.ratios.size() - 2];
  if (within(last, 1.5, 2.5) && within(prev, 1.5, 2.5)) {
    table.verdict = RateVerdict::quadratic;
  } else if (within(last, 0.8, 1.3) && within(prev, 0.8, 1.3)) {
    table.verdict = RateVerdict::linear;
  }
  return table;
}

std::vector<double> policy_errors(const IterationTrace& trace,
                                  const Policy& reference) {
  std::vector<double> errors;
  errors.reserve(trace.snapshots.size());
  for (const auto& snapshot : trace.snapshots) {
    errors.push_back((snapshot.probs() - reference.probs()).norm());
  }
  return errors;
}

DiagnosticTable convergence_diagnostics(const IterationTrace& trace,
                                        const Policy& reference) {
  if (trace.snapshots.empty()) {
    throw InsufficientData("trace carries no policy snapshots");
  }
  const double scale = std::max(1.0, reference.probs().norm());
  double floor = kMeasurableRelativeFloor * scale;
  const auto& snaps = trace.snapshots;
  if (snaps.size() >= 2) {
    const double last_step =
        (snaps.back().probs() - snaps[snaps.size() - 2].probs()).norm();
    floor = std::max(floor, last_step);
  }
  return convergence_diagnostics(policy_errors(trace, reference), floor);
}

}  // namespace qnpg
