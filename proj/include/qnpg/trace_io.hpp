#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "qnpg/diagnostics.hpp"
#include "qnpg/solver.hpp"

namespace qnpg {

/// Formats with 17 significant digits so every double round-trips.
std::string format_double(double value);

/**
 * Trace CSV: header `iter,xi,objective,solve_steps,wall_ms`, one row per
 * iteration. When `err_frob` is non-empty it must have one entry per record
 * and adds an `err_frob` column.
 */
void write_trace(std::ostream& out, const IterationTrace& trace,
                 std::span<const double> err_frob = {});
void write_trace(const IterationTrace& trace, const std::filesystem::path& path,
                 std::span<const double> err_frob = {});

/// `iter,err_frob,loglog_err,ratio`; unmeasurable cells are left empty.
void write_diagnostics(std::ostream& out, const DiagnosticTable& table);

/// `t,objective`.
void write_flow(std::ostream& out, const FlowResult& flow);

/// |S| rows of |A| comma-separated probabilities.
void write_policy(std::ostream& out, const Policy& policy);
void write_policy(const Policy& policy, const std::filesystem::path& path);

}  // namespace qnpg
