#include "cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qnpg/config.hpp"
#include "qnpg/diagnostics.hpp"
#include "qnpg/model_io.hpp"
#include "qnpg/rng.hpp"
#include "qnpg/solver.hpp"
#include "qnpg/synth.hpp"
#include "qnpg/trace_io.hpp"

namespace qnpg::cli {

namespace {

// Flags shared by every command that runs the solver. Unset flags leave the
// config-file (or built-in) value alone.
struct RunFlags {
  std::string model;
  std::string config;
  std::optional<std::string> reg;
  std::optional<double> tau;
  std::optional<double> eta;
  std::optional<double> tol;
  std::optional<double> bisect_tol;
  std::optional<int> max_iters;
  std::optional<std::string> solver;
  std::optional<int> threads;
  bool timing = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("model", f.model, "Model file (.json for the JSON variant)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--config", f.config, "key = value settings file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--reg", f.reg, "kl | rkl | hellinger | alpha:<f>");
  cmd->add_option("--tau", f.tau, "Regularization coefficient");
  cmd->add_option("--eta", f.eta, "Step size in (0, 1]");
  cmd->add_option("--tol", f.tol, "Stop when the relative policy change <= tol");
  cmd->add_option("--bisect-tol", f.bisect_tol, "Multiplier residual tolerance");
  cmd->add_option("--max-iters", f.max_iters, "Iteration cap");
  cmd->add_option("--solver", f.solver, "auto | dense | bicgstab");
  cmd->add_option("--threads", f.threads, "Worker threads")
      ->envname("QNPG_THREADS");
  cmd->add_flag("--timing", f.timing, "Record wall time per iteration");
}

RunSettings resolve(const RunFlags& f, RunSettings base = {}) {
  if (!f.config.empty()) apply_config(std::filesystem::path(f.config), base);
  SolverConfig& c = base.solver;
  if (f.reg) {
    Divergence::parse(*f.reg);
    base.reg = *f.reg;
  }
  if (f.tau) c.tau = *f.tau;
  if (f.eta) c.eta = *f.eta;
  if (f.tol) c.eps_tol = *f.tol;
  if (f.bisect_tol) c.bisect_tol = *f.bisect_tol;
  if (f.max_iters) c.max_iters = *f.max_iters;
  if (f.solver) c.linear.kind = parse_solver_kind(*f.solver);
  if (f.threads) c.threads = *f.threads;
  if (f.timing) c.record_timing = true;
  if (c.threads < 1) throw SpecError("--threads must be at least 1");
  c.validate();
  return base;
}

struct Problem {
  MdpModel model;
  Regularizer reg;
  Policy initial;
};

Problem load_problem(const std::string& path, const RunSettings& settings) {
  MdpModel model = load_model(path).model;
  Regularizer reg = Regularizer::uniform(Divergence::parse(settings.reg),
                                         model.num_states, model.num_actions);
  Policy initial = Policy::uniform(model.num_states, model.num_actions);
  return {std::move(model), std::move(reg), std::move(initial)};
}

std::string hex64(std::uint64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, x);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw Error("cannot open '" + path + "' for writing");
  return file;
}

// Writes to `path`, or to `fallback` when no path was given.
void emit(const std::string& path, std::ostream& fallback,
          const std::function<void(std::ostream&)>& writer) {
  if (path.empty()) {
    writer(fallback);
    return;
  }
  auto file = open_output(path);
  writer(file);
  if (!file.flush()) throw Error("failed writing '" + path + "'");
}

void print_value(std::ostream& out, const char* key, double value) {
  out << key << ' ' << format_double(value) << '\n';
}

// generate --------------------------------------------------------------------

struct GenerateArgs {
  SynthSpec spec;
  std::string output;
};

int cmd_generate(const GenerateArgs& args, std::ostream& out) {
  const MdpModel model = generate_synthetic(args.spec);
  const ModelMetadata meta{std::string(CounterRng::kName), args.spec.seed,
                           static_cast<std::uint64_t>(args.spec.support_size)};
  const std::filesystem::path path(args.output);
  if (path.extension() == ".json") {
    write_model_json(model, path, meta);
  } else {
    write_model(model, path, meta);
  }
  out << "seed " << args.spec.seed << '\n'
      << "states " << model.num_states << '\n'
      << "actions " << model.num_actions << '\n'
      << "support " << args.spec.support_size << '\n'
      << "generator " << meta.generator << '\n'
      << "checksum " << hex64(file_checksum(path)) << '\n';
  return kOk;
}

// solve -----------------------------------------------------------------------

struct SolveArgs {
  RunFlags run;
  std::string trace_out;
  std::string policy_out;
};

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  const RunSettings settings = resolve(args.run);
  const Problem p = load_problem(args.run.model, settings);

  auto report = [&](const SolveResult& r) {
    emit(args.trace_out, out,
         [&](std::ostream& os) { write_trace(os, r.trace); });
    if (!args.policy_out.empty()) write_policy(r.final.policy, args.policy_out);
  };

  try {
    const SolveResult r = solve(p.model, p.reg, settings.solver, p.initial);
    report(r);
    if (!args.trace_out.empty()) {
      out << "reg " << settings.reg << '\n'
          << "iterations " << r.trace.records.size() << '\n';
      print_value(out, "objective", r.trace.records.back().objective);
      print_value(out, "residual",
                  first_order_residual(p.model, r.final, p.reg,
                                       settings.solver));
    }
    return kOk;
  } catch (const MaxItersExceeded& e) {
    report(e.partial);
    err << "warning: " << e.what() << " (" << e.partial.trace.records.size()
        << " iterations)\n";
    return kMaxIters;
  }
}

// flow ------------------------------------------------------------------------

struct FlowArgs {
  RunFlags run;
  std::optional<double> dt;
  std::optional<int> steps;
  std::string output;
};

int cmd_flow(const FlowArgs& args, std::ostream& out, std::ostream& err) {
  RunSettings settings = resolve(args.run);
  if (args.dt) settings.flow.dt = *args.dt;
  if (args.steps) settings.flow.num_steps = *args.steps;
  const Problem p = load_problem(args.run.model, settings);
  const FlowResult r =
      flow_euler(p.model, p.reg, settings.solver, settings.flow, p.initial);
  emit(args.output, out, [&](std::ostream& os) { write_flow(os, r); });
  if (r.halvings > 0) {
    err << "warning: step size halved " << r.halvings << " times\n";
  }
  if (!args.output.empty()) {
    print_value(out, "t_final", r.samples.back().t);
    print_value(out, "objective", r.samples.back().objective);
  }
  return kOk;
}

// compare ---------------------------------------------------------------------

struct CompareArgs {
  RunFlags run;
  std::optional<double> beta;
  int md_max_iters = 100000;
  std::string output;
};

void write_combined(std::ostream& os, const IterationTrace& qn,
                    const IterationTrace& md) {
  os << "method,iter,xi,objective,solve_steps,wall_ms\n";
  auto rows = [&](const char* name, const IterationTrace& t) {
    for (const auto& r : t.records) {
      os << name << ',' << r.iter << ',' << format_double(r.xi) << ','
         << format_double(r.objective) << ',' << r.solve_steps << ','
         << format_double(r.wall_ms) << '\n';
    }
  };
  rows("qn", qn);
  rows("md", md);
}

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  RunSettings base;
  base.solver.eps_tol = 1e-6;
  RunSettings settings = resolve(args.run, base);
  if (args.beta) settings.beta = *args.beta;
  const Problem p = load_problem(args.run.model, settings);

  const SolveResult qn = solve(p.model, p.reg, settings.solver, p.initial);

  const double cap =
      default_baseline_beta(p.model, p.initial, settings.solver);
  const double beta = settings.beta.value_or(cap);
  if (beta > cap) {
    err << "warning: beta " << format_double(beta)
        << " exceeds 1/max(w) = " << format_double(cap)
        << " and will be clamped\n";
  }

  SolverConfig md_config = settings.solver;
  md_config.max_iters = args.md_max_iters;
  int code = kOk;
  IterationTrace md_trace;
  try {
    BaselineResult md =
        solve_mirror_descent(p.model, p.reg, beta, md_config, p.initial);
    md_trace = std::move(md.result.trace);
    if (md.clamped_iterations > 0) {
      err << "warning: beta clamped in " << md.clamped_iterations
          << " iterations\n";
    }
  } catch (const MaxItersExceeded& e) {
    md_trace = e.partial.trace;
    err << "warning: baseline " << e.what() << '\n';
    code = kMaxIters;
  }

  emit(args.output, out,
       [&](std::ostream& os) { write_combined(os, qn.trace, md_trace); });
  if (!args.output.empty()) {
    const auto qn_iters = qn.trace.records.size();
    const auto md_iters = md_trace.records.size();
    out << "reg " << settings.reg << '\n';
    print_value(out, "tol", settings.solver.eps_tol);
    print_value(out, "beta", beta);
    out << "qn_iterations " << qn_iters << '\n'
        << "md_iterations " << md_iters << (code == kOk ? "" : " (capped)")
        << '\n';
    print_value(out, "ratio",
                static_cast<double>(md_iters) / static_cast<double>(qn_iters));
  }
  return code;
}

// diag ------------------------------------------------------------------------

struct DiagArgs {
  RunFlags run;
  std::string method = "qn";
  std::optional<double> beta;
  int md_max_iters = 100000;
  std::string output;
  std::string trace_out;
};

int cmd_diag(const DiagArgs& args, std::ostream& out) {
  RunSettings settings = resolve(args.run);
  if (args.beta) settings.beta = *args.beta;
  const Problem p = load_problem(args.run.model, settings);

  IterationTrace trace;
  std::vector<double> errors;
  DiagnosticTable table;

  if (args.method == "qn") {
    SolverConfig config = settings.solver;
    config.record_snapshots = true;
    SolveResult r = [&] {
      try {
        return solve(p.model, p.reg, config, p.initial);
      } catch (MaxItersExceeded& e) {
        return std::move(e.partial);
      }
    }();
    errors = policy_errors(r.trace, r.final.policy);
    table = convergence_diagnostics(r.trace, r.final.policy);
    trace = std::move(r.trace);
  } else {
    // The baseline is measured against the quasi-Newton optimum.
    const Policy reference =
        solve(p.model, p.reg, settings.solver, p.initial).final.policy;
    auto error_of = [&](const Policy& pi) {
      return (pi.probs() - reference.probs()).norm();
    };
    errors.push_back(error_of(p.initial));
    SolverConfig config = settings.solver;
    config.max_iters = args.md_max_iters;
    const double beta = settings.beta.value_or(
        default_baseline_beta(p.model, p.initial, config));
    auto observer = [&](const IterationRecord&, const Iterate& it) {
      errors.push_back(error_of(it.policy));
    };
    try {
      trace = solve_mirror_descent(p.model, p.reg, beta, config, p.initial,
                                   observer)
                  .result.trace;
    } catch (MaxItersExceeded& e) {
      trace = std::move(e.partial.trace);
    }
    table = convergence_diagnostics(
        errors,
        kMeasurableRelativeFloor * std::max(1.0, reference.probs().norm()));
  }

  if (!args.trace_out.empty()) {
    const std::span<const double> after(errors.data() + 1, errors.size() - 1);
    write_trace(trace, args.trace_out, after);
  }
  emit(args.output, out,
       [&](std::ostream& os) { write_diagnostics(os, table); });
  if (!args.output.empty()) {
    out << "method " << args.method << '\n'
        << "iterations " << trace.records.size() << '\n';
    out << "ratios " << table.ratios.size() << '\n';
    const std::size_t first = table.ratios.size() - 2;
    for (std::size_t i = first; i < table.ratios.size(); ++i) {
      print_value(out, "ratio", table.ratios[i]);
    }
  }
  out << "verdict " << to_string(table.verdict) << '\n';
  return kOk;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const MaxItersExceeded& e) {
    err << "error: " << e.what() << '\n';
    return kMaxIters;
  } catch (const InsufficientData& e) {
    err << "error: " << e.what() << '\n';
    return kInsufficientData;
  } catch (const IterativeSolveFailure& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const ConvergenceError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const StepSizeError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const DomainError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Quasi-Newton policy iteration for regularized MDPs", "qnpg"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a seeded synthetic model");
  generate->add_option("--states", gen.spec.num_states, "Number of states")
      ->capture_default_str();
  generate->add_option("--actions", gen.spec.num_actions, "Number of actions")
      ->capture_default_str();
  generate->add_option("--support", gen.spec.support_size,
                       "Targets per state-action pair")
      ->capture_default_str();
  generate->add_option("--discount", gen.spec.discount, "Discount factor")
      ->capture_default_str();
  generate->add_option("--seed", gen.spec.seed, "Generator seed")
      ->capture_default_str();
  generate->add_option("-o,--output", gen.output, "Model path (.json for JSON)")
      ->required();

  SolveArgs sol;
  auto* solve_cmd = app.add_subcommand("solve", "Run quasi-Newton iteration");
  add_run_flags(solve_cmd, sol.run);
  solve_cmd->add_option("-o,--output", sol.trace_out, "Trace CSV path");
  solve_cmd->add_option("--policy-out", sol.policy_out, "Final policy CSV");

  FlowArgs flw;
  auto* flow = app.add_subcommand("flow", "Integrate the continuous-time flow");
  add_run_flags(flow, flw.run);
  flow->add_option("--dt", flw.dt, "Euler step");
  flow->add_option("--steps", flw.steps, "Number of steps");
  flow->add_option("-o,--output", flw.output, "t,objective CSV path");

  CompareArgs cmp;
  auto* compare = app.add_subcommand(
      "compare", "Quasi-Newton against the mirror-descent baseline");
  add_run_flags(compare, cmp.run);
  compare->add_option("--beta", cmp.beta,
                      "Baseline learning rate (default 1/max w)");
  compare->add_option("--md-max-iters", cmp.md_max_iters, "Baseline cap")
      ->capture_default_str();
  compare->add_option("-o,--output", cmp.output, "Combined CSV path");

  DiagArgs dia;
  auto* diag = app.add_subcommand("diag", "Convergence-order diagnostics");
  add_run_flags(diag, dia.run);
  diag->add_option("--method", dia.method, "qn | md")
      ->check(CLI::IsMember({"qn", "md"}))
      ->capture_default_str();
  diag->add_option("--beta", dia.beta, "Baseline learning rate");
  diag->add_option("--md-max-iters", dia.md_max_iters, "Baseline cap")
      ->capture_default_str();
  diag->add_option("-o,--output", dia.output, "Diagnostics CSV path");
  diag->add_option("--trace-out", dia.trace_out, "Trace CSV with err_frob");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  return guarded(
      [&] {
        if (*generate) return cmd_generate(gen, out);
        if (*solve_cmd) return cmd_solve(sol, out, err);
        if (*flow) return cmd_flow(flw, out, err);
        if (*compare) return cmd_compare(cmp, out, err);
        return cmd_diag(dia, out);
      },
      err);
}

}  // namespace qnpg::cli
