#pragma once

// Benchmark runner: one generated problem, several solver runs, iterations
// and wall time to each relative-error level, plus the exported files.

#include "l1pg/harness/config.hpp"
#include "l1pg/harness/export.hpp"
#include "l1pg/harness/problem.hpp"
#include "l1pg/homotopy.hpp"
#include "l1pg/solvers.hpp"

#include <filesystem>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace l1pg::harness {

struct LevelHit {
  double level = 0.0;
  std::optional<int> iterations; ///< nullopt: not reached within the budget
  std::optional<double> time_s;
};

struct SolverRun {
  SolverConfig config;
  std::optional<SolverTrace> trace;
  std::optional<Vector> x;
  std::optional<MinimizerDiagnostics> diagnostics;
  std::optional<ConditionBAudit> audit; ///< runs covered by the Condition (B) theory
  std::optional<double> final_rel_error;
  std::vector<LevelHit> hits;
  std::string error; ///< non-empty when the run aborted
};

struct RunReport {
  BenchmarkConfig config;
  GeneratedProblem problem;
  std::vector<SolverRun> runs;
  std::vector<TradeoffPoint> tradeoff;
  std::vector<std::string> files;
};

/// Iterations (steps taken) to reach each level; level hits use the first
/// iterate whose relative error is at or below the level.
inline std::vector<LevelHit> level_hits(const SolverTrace &trace,
                                        const std::vector<double> &levels) {
  std::vector<LevelHit> out;
  for (double level : levels) {
    LevelHit h;
    h.level = level;
    if (trace.initial_rel_error && *trace.initial_rel_error <= level) {
      h.iterations = 0;
      h.time_s = 0.0;
    } else {
      for (const auto &r : trace.records) {
        if (r.rel_error && *r.rel_error <= level) {
          h.iterations = r.n + 1;
          h.time_s = r.time_s;
          break;
        }
      }
    }
    out.push_back(h);
  }
  return out;
}

inline SolverResult dispatch_solver(const SolverConfig &s, const GeneratedProblem &g,
                                    const RunOptions &opts) {
  const Problem &p = g.problem;
  switch (s.kind) {
  case SolverKind::thresholded_landweber: return run_thresholded_landweber(p, g.tau, opts);
  case SolverKind::projected_landweber: return run_projected_landweber(p, g.radius, opts);
  case SolverKind::projected_gradient: return run_projected_gradient(p, g.radius, s.policy, opts);
  case SolverKind::relaxed_radius:
    return run_relaxed_radius(p, g.radius, s.steps > 0 ? s.steps : s.stop.max_iter, s.policy,
                              opts);
  case SolverKind::pocs: return run_pocs(p, g.radius, dense_gram_inverse(p.op()), opts);
  }
  throw std::logic_error("unhandled solver kind");
}

inline SolverRun run_one(const SolverConfig &s, const GeneratedProblem &g,
                         const std::vector<double> &levels) {
  SolverRun run;
  run.config = s;
  RunOptions opts;
  opts.stop = s.stop;
  opts.reference = g.reference;
  try {
    SolverResult res = dispatch_solver(s, g, opts);
    run.x = res.x;
    run.trace = std::move(res.trace);
    run.diagnostics = res.diagnostics;
  } catch (const SolverError &e) {
    run.error = e.what();
    run.trace = e.trace();
  } catch (const std::exception &e) {
    run.error = e.what();
  }
  if (!run.trace) return run;
  run.hits = level_hits(*run.trace, levels);
  if (!run.trace->records.empty()) run.final_rel_error = run.trace->records.back().rel_error;
  const bool b_theory = s.kind == SolverKind::projected_landweber ||
                        (s.kind == SolverKind::projected_gradient && s.policy.enforces_b2());
  if (b_theory) {
    const double beta_max = s.kind == SolverKind::projected_landweber ? 1.0 : s.policy.beta_max;
    run.audit = audit_condition_b(*run.trace, g.problem.norm_bound(), beta_max);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Report files

/// Table layout: one row per error level, an (n, time) column pair per
/// solver, "-" where the level was not reached.
inline void write_report_csv(std::ostream &out, const RunReport &report) {
  out << "rel_error";
  for (const auto &r : report.runs) out << ',' << r.config.name << "_n," << r.config.name << "_time";
  out << '\n';
  for (std::size_t i = 0; i < report.config.levels.size(); ++i) {
    out << format_level(report.config.levels[i]);
    for (const auto &r : report.runs) {
      if (i < r.hits.size() && r.hits[i].iterations)
        out << ',' << *r.hits[i].iterations << ',' << format_number(*r.hits[i].time_s);
      else
        out << ",-,-";
    }
    out << '\n';
  }
}

inline void write_summary(std::ostream &out, const RunReport &report) {
  const auto &g = report.problem;
  const auto &pc = report.config.problem;
  out << "problem      " << to_string(pc.op) << ' ' << g.problem.rows() << 'x' << g.problem.cols()
      << "  seed " << report.config.seed << '\n';
  out << "scale        " << format_number(g.problem.scale_applied()) << "  norm_bound "
      << format_number(g.problem.norm_bound()) << '\n';
  out << "sigma        " << format_number(g.sigma) << '\n';
  out << "tau          " << format_number(g.tau) << '\n';
  out << "radius       " << format_number(g.radius) << '\n';
  if (g.reference) {
    out << "reference    support " << (g.reference->array() != 0.0).count() << "  D "
        << format_number(g.problem.discrepancy(*g.reference)) << '\n';
    if (g.sigma > 0.0)
      out << "D/sigma^2    " << format_number(g.problem.discrepancy(*g.reference) / (g.sigma * g.sigma))
          << '\n';
  }
  if (g.path)
    out << "path         " << g.path->breakpoints.size() << " breakpoints"
        << (g.path->degenerate ? ", simultaneous events" : "")
        << (g.path_truncated ? ", truncated at a singular active set" : "") << '\n';
  for (const auto &r : report.runs) {
    out << "\n[" << r.config.name << "] " << to_string(r.config.kind) << '\n';
    if (!r.error.empty()) out << "  error        " << r.error << '\n';
    if (!r.trace) continue;
    const auto &t = *r.trace;
    out << "  iterations   " << t.size() << (t.converged ? " (converged)" : "")
        << (t.heuristic ? " (heuristic scheme)" : "") << '\n';
    if (r.final_rel_error) out << "  rel_error    " << format_number(*r.final_rel_error) << '\n';
    if (r.diagnostics)
      out << "  diagnostics  tau " << format_number(r.diagnostics->tau) << ", support "
          << r.diagnostics->support.size() << ", |Gamma| " << r.diagnostics->gamma_set.size()
          << ", <x,e> " << format_number(r.diagnostics->inner_product_check)
          << ", fixed-point residual " << format_number(r.diagnostics->fixed_point_residual)
          << (r.diagnostics->support_in_gamma ? "" : ", SUPPORT OUTSIDE GAMMA") << '\n';
    if (r.audit)
      out << "  condition B  " << (r.audit->ok() ? "ok" : "VIOLATED") << " (D increases "
          << r.audit->discrepancy_increases << ", beta out of range " << r.audit->beta_out_of_range
          << ", B2 failures " << r.audit->b2_failures << ", step energy "
          << format_number(r.audit->step_energy) << " <= " << format_number(r.audit->step_energy_bound)
          << ")\n";
  }
}

inline std::vector<std::string> write_outputs(const std::filesystem::path &dir, RunReport &report) {
  std::vector<std::string> files;
  const auto put = [&](const std::filesystem::path &rel,
                       const std::function<void(std::ostream &)> &body) {
    write_file(dir / rel, body);
    files.push_back((dir / rel).string());
  };
  put("report.csv", [&](std::ostream &o) { write_report_csv(o, report); });
  put("summary.txt", [&](std::ostream &o) { write_summary(o, report); });
  if (!report.tradeoff.empty())
    put("tradeoff.csv", [&](std::ostream &o) { write_tradeoff_csv(o, report.tradeoff); });
  for (const auto &r : report.runs) {
    if (!r.trace) continue;
    put(std::filesystem::path("traces") / (r.config.name + ".csv"),
        [&](std::ostream &o) { write_trace_csv(o, *r.trace); });
    put(std::filesystem::path("paths") / (r.config.name + ".csv"),
        [&](std::ostream &o) { write_path_csv(o, *r.trace); });
  }
  return files;
}

/// Generates the problem, runs every solver (concurrently when
/// cfg.parallel) and writes the report files when cfg.out is set.
inline RunReport run_benchmark(const BenchmarkConfig &cfg) {
  validate(cfg);
  RunReport report{cfg, generate_problem(cfg.problem, cfg.seed, cfg.oracle_reference), {}, {}, {}};
  const GeneratedProblem &g = report.problem;
  if (g.path) report.tradeoff = tradeoff_curve(*g.path, cfg.tradeoff_samples);

  if (cfg.parallel) {
    std::vector<std::future<SolverRun>> jobs;
    for (const auto &s : cfg.solvers)
      jobs.push_back(std::async(std::launch::async, [&, s] { return run_one(s, g, cfg.levels); }));
    for (auto &j : jobs) report.runs.push_back(j.get());
  } else {
    for (const auto &s : cfg.solvers) report.runs.push_back(run_one(s, g, cfg.levels));
  }
  if (!cfg.out.empty()) report.files = write_outputs(cfg.out, report);
  return report;
}

} // namespace l1pg::harness
