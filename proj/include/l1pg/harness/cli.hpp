#pragma once

// Command-line front end. Exit codes: 0 success, 1 failed check or runtime
// error, 2 malformed flags, config or input.

#include "l1pg/harness/benchmark.hpp"
#include "l1pg/harness/builtins.hpp"
#include "l1pg/harness/config.hpp"
#include "l1pg/harness/export.hpp"
#include "l1pg/harness/verify.hpp"
#include "l1pg/prox.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace l1pg::harness {

namespace detail {

struct ConfigSource {
  std::string config_file;
  std::string builtin;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App &cmd) {
    auto *c = cmd.add_option("-c,--config", config_file, "INI benchmark config")
                  ->check(CLI::ExistingFile);
    auto *b = cmd.add_option("-b,--builtin", builtin, "builtin config name (see `builtins`)");
    c->excludes(b);
    cmd.add_option("--seed", seed, "override the config seed");
  }

  BenchmarkConfig load() const {
    BenchmarkConfig cfg;
    if (!config_file.empty()) cfg = load_config(config_file);
    else if (!builtin.empty()) cfg = builtin_config(builtin);
    else throw ConfigError("one of --config or --builtin is required");
    if (seed) cfg.seed = *seed;
    return cfg;
  }
};

inline void write_vector(std::ostream &out, const Vector &x) {
  for (Index i = 0; i < x.size(); ++i) out << format_number(x[i]) << '\n';
}

inline void print_report(std::ostream &out, const RunReport &report) {
  write_summary(out, report);
  out << '\n';
  write_report_csv(out, report);
  for (const auto &f : report.files) out << "wrote " << f << '\n';
}

inline bool runs_ok(const RunReport &report) {
  for (const auto &r : report.runs)
    if (!r.error.empty()) return false;
  return true;
}

/// Solver for `solve`: a named section of the config, else a solver kind
/// with default parameters.
inline SolverConfig pick_solver(const BenchmarkConfig &cfg, const std::string &name) {
  if (name.empty()) {
    if (cfg.solvers.size() == 1) return cfg.solvers.front();
    throw ConfigError("--solver is required (config defines " + std::to_string(cfg.solvers.size()) +
                      " solvers)");
  }
  for (const auto &s : cfg.solvers)
    if (s.name == name) return s;
  SolverConfig s;
  s.name = name;
  s.kind = parse_solver_kind(name);
  return s;
}

} // namespace detail

inline int cli_main(int argc, const char *const *argv, std::ostream &out = std::cout,
                    std::ostream &err = std::cerr) {
  CLI::App app{"l1pg: projected gradient methods for l1-constrained least squares"};
  app.require_subcommand(1);

  // project
  std::string proj_input, proj_output;
  double proj_radius = 0.0;
  auto *project = app.add_subcommand("project", "project a vector file onto an l1 ball");
  project->add_option("-i,--input", proj_input, "whitespace-separated vector")->required()
      ->check(CLI::ExistingFile);
  project->add_option("-r,--radius", proj_radius, "ball radius R >= 0")->required();
  project->add_option("-o,--output", proj_output, "output file (default stdout)");

  // solve
  detail::ConfigSource solve_src;
  std::string solve_solver, solve_out;
  std::optional<double> solve_tau, solve_radius, solve_tol;
  std::optional<int> solve_max_iter, solve_steps;
  auto *solve = app.add_subcommand("solve", "run one solver on one generated problem");
  solve_src.add_to(*solve);
  solve->add_option("-s,--solver", solve_solver, "solver section name or solver kind");
  solve->add_option("--tau", solve_tau, "fixed penalty (replaces the config's tau rule)");
  solve->add_option("--radius", solve_radius, "l1 radius (default ||x_bar(tau)||_1)");
  solve->add_option("--max-iter", solve_max_iter, "iteration budget");
  solve->add_option("--tol", solve_tol, "step-size stopping tolerance");
  solve->add_option("--steps", solve_steps, "relaxed-radius schedule length");
  solve->add_option("-o,--out", solve_out, "output directory");

  // bench
  detail::ConfigSource bench_src;
  std::string bench_out;
  bool bench_parallel = false;
  auto *bench = app.add_subcommand("bench", "run every solver of a config");
  bench_src.add_to(*bench);
  bench->add_option("-o,--out", bench_out, "output directory (overrides the config)");
  bench->add_flag("--parallel", bench_parallel, "run solvers concurrently");

  // tradeoff
  detail::ConfigSource trade_src;
  std::string trade_out;
  int trade_samples = 0;
  bool trade_knots = false;
  auto *tradeoff = app.add_subcommand("tradeoff", "emit the oracle trade-off curve as CSV");
  trade_src.add_to(*tradeoff);
  tradeoff->add_option("--samples", trade_samples, "points on the curve (default from config)")
      ->check(CLI::Range(2, 1000000));
  tradeoff->add_flag("--breakpoints", trade_knots, "emit the exact path breakpoints instead");
  tradeoff->add_option("-o,--out", trade_out, "output file (default stdout)");

  // verify
  detail::ConfigSource verify_src;
  auto *verify = app.add_subcommand("verify", "run the invariant suite on a generated problem");
  verify_src.add_to(*verify);

  // builtins
  std::string show_name;
  auto *builtins = app.add_subcommand("builtins", "list builtin configs or print one");
  builtins->add_option("name", show_name, "print this config's INI text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    const CLI::App *sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 2;
  }

  try {
    if (*project) {
      Vector a;
      try {
        a = read_vector_file(proj_input);
      } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
      }
      if (!(proj_radius >= 0.0)) throw ConfigError("--radius must be >= 0");
      if (!a.allFinite()) throw ConfigError("vector file: non-finite entry");
      const auto res = project_l1(a, proj_radius);
      if (proj_output.empty()) detail::write_vector(out, res.x);
      else write_file(proj_output, [&](std::ostream &o) { detail::write_vector(o, res.x); });
      err << "mu " << format_number(res.mu) << (res.was_identity ? " (inside the ball)" : "")
          << '\n';
      return 0;
    }

    if (*solve) {
      BenchmarkConfig cfg = solve_src.load();
      SolverConfig s = detail::pick_solver(cfg, solve_solver);
      if (solve_tau) {
        cfg.problem.tau_rule = TauRule::fixed;
        cfg.problem.tau = *solve_tau;
      }
      if (solve_radius) cfg.problem.radius = *solve_radius;
      if (solve_max_iter) s.stop.max_iter = *solve_max_iter;
      if (solve_tol) s.stop.tol = *solve_tol;
      if (solve_steps) s.steps = *solve_steps;
      cfg.solvers = {s};
      cfg.out = solve_out;
      const RunReport report = run_benchmark(cfg);
      detail::print_report(out, report);
      return detail::runs_ok(report) ? 0 : 1;
    }

    if (*bench) {
      BenchmarkConfig cfg = bench_src.load();
      if (!bench_out.empty()) cfg.out = bench_out;
      if (bench_parallel) cfg.parallel = true;
      const RunReport report = run_benchmark(cfg);
      detail::print_report(out, report);
      return detail::runs_ok(report) ? 0 : 1;
    }

    if (*tradeoff) {
      const BenchmarkConfig cfg = trade_src.load();
      const GeneratedProblem g = generate_problem(cfg.problem, cfg.seed, false);
      bool truncated = g.path_truncated;
      const HomotopyPath path = g.path ? *g.path : oracle_path(g.problem, truncated);
      if (truncated) err << "warning: path truncated at a singular active set\n";
      const auto points = trade_knots ? tradeoff_breakpoints(path)
                                      : tradeoff_curve(path, trade_samples > 0 ? trade_samples
                                                                               : cfg.tradeoff_samples);
      if (trade_out.empty()) write_tradeoff_csv(out, points);
      else write_file(trade_out, [&](std::ostream &o) { write_tradeoff_csv(o, points); });
      return 0;
    }

    if (*verify) {
      const BenchmarkConfig cfg = verify_src.load();
      const GeneratedProblem g = generate_problem(cfg.problem, cfg.seed, true);
      const InvariantReport rep = verify_problem(g);
      print_invariants(out, rep);
      out << (rep.ok() ? "all invariants hold\n" : "invariant check FAILED\n");
      return rep.ok() ? 0 : 1;
    }

    if (*builtins) {
      if (show_name.empty()) {
        for (const auto &b : builtin_configs) out << b.name << "  " << b.description << '\n';
      } else {
        const auto *b = find_builtin(show_name);
        if (!b) throw ConfigError("unknown builtin config '" + show_name + "'");
        out << b->text;
      }
      return 0;
    }
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

inline int cli_main(const std::vector<std::string> &args, std::ostream &out = std::cout,
                    std::ostream &err = std::cerr) {
  std::vector<const char *> argv{"l1pg"};
  for (const auto &a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace l1pg::harness
