#include "qnpg/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "qnpg/errors.hpp"

namespace qnpg {

namespace {

std::ofstream open_for_writing(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string optional_cell(double value) {
  return std::isnan(value) ? std::string() : format_double(value);
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_trace(std::ostream& out, const IterationTrace& trace,
                 std::span<const double> err_frob) {
  if (!err_frob.empty() && err_frob.size() != trace.records.size()) {
    throw DimensionError("err_frob needs one entry per trace record");
  }
  out << "iter,xi,objective,solve_steps,wall_ms";
  if (!err_frob.empty()) out << ",err_frob";
  out << '\n';
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    out << r.iter << ',' << format_double(r.xi) << ','
        << format_double(r.objective) << ',' << r.solve_steps << ','
        << format_double(r.wall_ms);
    if (!err_frob.empty()) out << ',' << format_double(err_frob[i]);
    out << '\n';
  }
}

void write_trace(const IterationTrace& trace, const std::filesystem::path& path,
                 std::span<const double> err_frob) {
  auto out = open_for_writing(path);
  write_trace(out, trace, err_frob);
  finish(out, path);
}

void write_diagnostics(std::ostream& out, const DiagnosticTable& table) {
  out << "iter,err_frob,loglog_err,ratio\n";
  for (const auto& row : table.rows) {
    out << row.iter << ',' << format_double(row.err_frob) << ','
        << optional_cell(row.loglog_err) << ',' << optional_cell(row.ratio)
        << '\n';
  }
}

void write_flow(std::ostream& out, const FlowResult& flow) {
  out << "t,objective\n";
  for (const auto& s : flow.samples) {
    out << format_double(s.t) << ',' << format_double(s.objective) << '\n';
  }
}

void write_policy(std::ostream& out, const Policy& policy) {
  for (Eigen::Index s = 0; s < policy.num_states(); ++s) {
    for (Eigen::Index a = 0; a < policy.num_actions(); ++a) {
      if (a > 0) out << ',';
      out << format_double(policy(s, a));
    }
    out << '\n';
  }
}

void write_policy(const Policy& policy, const std::filesystem::path& path) {
  auto out = open_for_writing(path);
  write_policy(out, policy);
  finish(out, path);
}

}  // namespace qnpg
