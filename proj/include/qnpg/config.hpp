#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "qnpg/solver.hpp"

namespace qnpg {

/// Everything a CLI run needs besides the model.
struct RunSettings {
  std::string reg = "kl";
  SolverConfig solver;
  /// Mirror-descent learning rate; unset means default_baseline_beta().
  std::optional<double> beta;
  FlowConfig flow;
};

/**
 * Reads a flat `key = value` file into `settings`, overwriting only the keys
 * present. `#` starts a comment; blank lines are ignored.
 *
 * Keys: reg, tau, eta, tol, max_iters, bisect_tol, solver (auto | dense |
 * bicgstab), linear_tol, linear_max_iters, dense_threshold, threads,
 * weight_e (comma list), beta, dt, steps, max_halvings, snapshots, timing.
 *
 * Throws SpecError naming the line for unknown keys or unparsable values.
 */
void apply_config(std::istream& in, RunSettings& settings);
void apply_config(const std::filesystem::path& path, RunSettings& settings);

/// "auto" | "dense" | "bicgstab"; throws SpecError otherwise.
LinearSolverKind parse_solver_kind(const std::string& text);

}  // namespace qnpg
