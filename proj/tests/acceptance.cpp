// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Expected values come from the independent oracles in
// oracles.hpp and from the exact homotopy minimizers.

#include "fixtures.hpp"
#include "oracles.hpp"

#include "l1pg/harness/benchmark.hpp"
#include "l1pg/harness/builtins.hpp"
#include "l1pg/harness/cli.hpp"
#include "l1pg/homotopy.hpp"
#include "l1pg/prox.hpp"
#include "l1pg/solvers.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace l1pg;
using namespace l1pg::harness;
using l1pg::testing::oracle_at_fraction;
using l1pg::testing::random_problem;
using l1pg::testing::tight_options;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string &name, const std::function<Outcome()> &body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception &e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS  " : "FAIL  ") << name << "  " << o.detail << std::endl;
}

// Random projection cases: dimension 1..50, radius below and above ‖a‖₁.
struct ProjectionCase {
  Vector a;
  double radius;
};

std::vector<ProjectionCase> projection_cases(std::uint64_t seed, int count) {
  SplitMix64 rng(seed);
  std::vector<ProjectionCase> out;
  for (int i = 0; i < count; ++i) {
    const Index m = 1 + static_cast<Index>(rng.below(50));
    Vector a = std::pow(10.0, 4.0 * rng.uniform() - 2.0) * rng.normal_vector(m);
    if (rng.uniform() < 0.2) // ties in magnitude
      for (Index j = 0; j + 1 < m; j += 2) a[j + 1] = -a[j];
    const double radius = 1.2 * rng.uniform() * a.lpNorm<1>();
    out.push_back({std::move(a), radius});
  }
  return out;
}

// 50 small dense problems with their exact minimizers.
struct SmallInstance {
  Problem problem;
  l1pg::testing::OracleSolution oracle;
};

std::vector<SmallInstance> small_instances() {
  std::vector<SmallInstance> out;
  SplitMix64 rng(2024);
  for (int i = 0; i < 50; ++i) {
    Problem p = random_problem(1000 + static_cast<std::uint64_t>(i), 10, 20);
    const double frac = 0.05 + 0.45 * rng.uniform();
    auto o = oracle_at_fraction(p, frac);
    out.push_back({std::move(p), std::move(o)});
  }
  return out;
}

// Violations of "D nonincreasing", "distance to the minimizer nonincreasing"
// and "β in [1, β̄]" along one trace.
struct MonotoneCount {
  int discrepancy = 0, distance = 0, beta = 0;
  int total() const { return discrepancy + distance + beta; }
};

MonotoneCount condition_b_violations(const SolverTrace &t, const Vector &minimizer,
                                     double beta_max) {
  MonotoneCount c;
  const double scale = minimizer.norm();
  double prev_d = t.initial_discrepancy;
  double prev_dist = t.initial_rel_error ? *t.initial_rel_error * scale : 0.0;
  for (const auto &r : t.records) {
    if (r.discrepancy > prev_d + 1e-12 * t.initial_discrepancy) ++c.discrepancy;
    prev_d = r.discrepancy;
    const double dist = *r.rel_error * scale;
    if (dist > prev_dist + 1e-12 * scale) ++c.distance;
    prev_dist = dist;
    if (r.beta < 1.0 || r.beta > beta_max) ++c.beta;
  }
  return c;
}

double rel_diff(const Vector &a, const Vector &b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

const SolverRun &find_run(const RunReport &r, const std::string &name) {
  for (const auto &run : r.runs)
    if (run.config.name == name) return run;
  throw std::runtime_error("no solver run named " + name);
}

std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// CSV text with every column whose header mentions "time" removed.
std::string without_time_columns(const std::string &csv) {
  std::istringstream in(csv);
  std::string line, out;
  std::vector<bool> keep;
  bool header = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (header) {
      for (const auto &h : cells) keep.push_back(h.find("time") == std::string::npos);
      header = false;
    }
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (i >= keep.size() || keep[i]) out += cells[i] + ',';
    out += '\n';
  }
  return out;
}

} // namespace

int main() {
  const auto proj_cases = projection_cases(7, 1000);

  criterion("projection matches QP oracle (1000 cases, dims <= 50)", [&] {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto &c : proj_cases) {
      const Vector x = project_l1(c.a, c.radius).x;
      worst = std::max(worst, (x - l1pg::testing::qp_project_l1(c.a, c.radius)).norm());
    }
    const double secs = seconds_since(t0);
    return Outcome{worst <= 1e-8 && secs < 5.0,
                   "max error " + sci(worst) + ", " + sci(secs) + " s (limit 1e-8, 5 s)"};
  });

  criterion("projection equals soft-thresholding at mu", [&] {
    double gap = 0.0, norm_gap = 0.0;
    int active = 0;
    for (const auto &c : proj_cases) {
      if (c.a.lpNorm<1>() <= c.radius) continue;
      ++active;
      const auto res = project_l1(c.a, c.radius);
      gap = std::max(gap, (soft_threshold(c.a, res.mu) - res.x).norm());
      norm_gap = std::max(norm_gap, std::abs(res.x.lpNorm<1>() - c.radius));
    }
    return Outcome{active > 0 && gap <= 1e-12 && norm_gap <= 1e-10,
                   std::to_string(active) + " cases, |S_mu(a) - P(a)| " + sci(gap) +
                       ", | |P(a)|_1 - R | " + sci(norm_gap)};
  });

  criterion("projection is non-expansive (1000 pairs)", [&] {
    SplitMix64 rng(11);
    int violations = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Index m = 1 + static_cast<Index>(rng.below(50));
      const Vector a = rng.normal_vector(m), b = a + std::pow(10.0, -3.0 * rng.uniform()) *
                                                         rng.normal_vector(m);
      const double r = 0.8 * rng.uniform() * std::max(a.lpNorm<1>(), b.lpNorm<1>());
      const double excess =
          (project_l1(a, r).x - project_l1(b, r).x).norm() - (a - b).norm();
      worst = std::max(worst, excess);
      if (excess > 1e-12) ++violations;
    }
    return Outcome{violations == 0, std::to_string(violations) + " violations, max excess " +
                                        sci(worst)};
  });

  const auto t_small = Clock::now();
  const auto instances = small_instances();
  std::vector<SolverResult> ista_runs, pg_runs;
  for (const auto &inst : instances) {
    RunOptions opts = tight_options();
    opts.reference = inst.oracle.x;
    ista_runs.push_back(run_thresholded_landweber(inst.problem, inst.oracle.tau, opts));
    pg_runs.push_back(run_projected_gradient(inst.problem, inst.oracle.radius, StepPolicy{}, opts));
  }
  const double small_secs = seconds_since(t_small);

  criterion("thresholded Landweber, projected gradient and homotopy agree (50 problems 10x20)",
            [&] {
              double worst = 0.0;
              for (std::size_t i = 0; i < instances.size(); ++i) {
                const Vector &h = instances[i].oracle.x;
                const Vector &t = ista_runs[i].x, &g = pg_runs[i].x;
                worst = std::max({worst, rel_diff(t, h), rel_diff(g, h), rel_diff(t, g)});
              }
              return Outcome{worst <= 1e-6 && small_secs < 60.0,
                             "max pairwise relative gap " + sci(worst) + ", " + sci(small_secs) +
                                 " s (limit 1e-6, 60 s)"};
            });

  criterion("oracle minimizers are fixed points for beta in {1, 2, 5}", [&] {
    double worst = 0.0;
    for (const auto &inst : instances)
      worst = std::max(worst, verify_fixed_point(inst.oracle.x, inst.problem, inst.oracle.radius,
                                                 {1.0, 2.0, 5.0}));
    return Outcome{worst <= 1e-8, "max residual " + sci(worst)};
  });

  criterion("threshold of the constrained minimizer equals the penalty", [&] {
    double tau_gap = 0.0, ip_gap = 0.0;
    int outside = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto &inst = instances[i];
      const auto d = minimizer_diagnostics(pg_runs[i].x, inst.problem, inst.oracle.radius);
      tau_gap = std::max(tau_gap, std::abs(d.tau - inst.oracle.tau) / inst.oracle.tau);
      ip_gap = std::max(ip_gap, std::abs(d.inner_product_check - inst.oracle.radius));
      if (!d.support_in_gamma) ++outside;
    }
    return Outcome{tau_gap <= 1e-6 && ip_gap <= 1e-8 && outside == 0,
                   "relative tau gap " + sci(tau_gap) + ", |<x,e> - R| " + sci(ip_gap) + ", " +
                       std::to_string(outside) + " supports outside Gamma"};
  });

  // Builtin experiments shared by the remaining criteria.
  const auto t_rank = Clock::now();
  const RunReport rank = run_benchmark(builtin_config("rank-structured"));
  const double rank_secs = seconds_since(t_rank);
  const RunReport tomo = run_benchmark(builtin_config("tomography"));

  criterion("Condition (B) runs: D and distance to the minimizer nonincreasing, beta in range",
            [&] {
              MonotoneCount sum;
              int runs = 0;
              for (std::size_t i = 0; i < instances.size(); ++i) {
                const auto c = condition_b_violations(pg_runs[i].trace, instances[i].oracle.x,
                                                      StepPolicy{}.beta_max);
                sum.discrepancy += c.discrepancy;
                sum.distance += c.distance;
                sum.beta += c.beta;
                ++runs;
              }
              for (const RunReport *rep : {&rank, &tomo}) {
                for (const auto &r : rep->runs) {
                  const bool covered =
                      r.config.kind == SolverKind::projected_landweber ||
                      (r.config.kind == SolverKind::projected_gradient && r.config.policy.enforces_b2());
                  if (!covered) continue;
                  const double beta_max = r.config.kind == SolverKind::projected_landweber
                                              ? 1.0
                                              : r.config.policy.beta_max;
                  const auto c = condition_b_violations(*r.trace, *rep->problem.reference, beta_max);
                  sum.discrepancy += c.discrepancy;
                  sum.distance += c.distance;
                  sum.beta += c.beta;
                  ++runs;
                }
              }
              return Outcome{sum.total() == 0,
                             std::to_string(runs) + " runs; violations: D " +
                                 std::to_string(sum.discrepancy) + ", distance " +
                                 std::to_string(sum.distance) + ", beta " +
                                 std::to_string(sum.beta)};
            });

  criterion("partial DFT: steepest-descent ratio is 1, iterates equal projected Landweber", [&] {
    double beta_dev = 0.0, iterate_gap = 0.0;
    int steps = 0;
    const auto cfg = builtin_config("partial-dft");
    for (std::uint64_t seed : {cfg.seed, std::uint64_t{21}, std::uint64_t{22}}) {
      const auto g = generate_problem(cfg.problem, seed);
      RunOptions opts;
      opts.stop = {1e-10, 20000};
      StepPolicy raw;
      raw.mode = StepMode::steepest_descent;
      raw.enforce_b2 = false;
      const auto full = run_projected_gradient(g.problem, g.radius, raw, opts);
      for (const auto &r : full.trace.records) beta_dev = std::max(beta_dev, std::abs(r.beta - 1.0));
      // Compare x^(n) for every n by rerunning both methods with budget n.
      for (int n = 1; n <= static_cast<int>(full.trace.size()); ++n) {
        RunOptions o;
        o.stop = {0.0, n};
        const Vector a = run_projected_gradient(g.problem, g.radius, StepPolicy{}, o).x;
        const Vector b = run_projected_landweber(g.problem, g.radius, o).x;
        iterate_gap = std::max(iterate_gap, (a - b).cwiseAbs().maxCoeff());
        ++steps;
      }
    }
    return Outcome{beta_dev <= 1e-12 && iterate_gap <= 1e-12,
                   "max |beta_st - 1| " + sci(beta_dev) + ", max iterate gap " + sci(iterate_gap) +
                       " over " + std::to_string(steps) + " iterates"};
  });

  criterion("rank-structured 192x256: steepest descent reaches 5% error >= 5x faster than "
            "thresholded Landweber",
            [&] {
              const auto &psd = find_run(rank, "psd"), &ista = find_run(rank, "ista");
              std::size_t at = 0;
              while (at < rank.config.levels.size() && rank.config.levels[at] != 0.05) ++at;
              if (at == rank.config.levels.size()) return Outcome{false, "level 0.05 not configured"};
              const auto np = psd.hits[at].iterations, ni = ista.hits[at].iterations;
              if (!np || !ni) return Outcome{false, "5% level not reached"};
              const bool converged = psd.trace->converged && ista.trace->converged;
              const double ratio = static_cast<double>(*ni) / *np;
              return Outcome{converged && ratio >= 5.0 && rank_secs < 120.0,
                             "iterations psd " + std::to_string(*np) + ", ista " +
                                 std::to_string(*ni) + " (ratio " + [&] { char b[16]; std::snprintf(b, sizeof b, "%.1f", ratio); return std::string(b); }() + "x), both " +
                                 (converged ? "converged" : "NOT converged") + ", " +
                                 sci(rank_secs) + " s"};
            });

  criterion("rank-structured traces lie on or above the trade-off curve; relaxed radius within 5%",
            [&] {
              const auto &path = *rank.problem.path;
              int below = 0;
              double worst = -1e300;
              for (const auto &r : rank.runs)
                for (const auto &rec : r.trace->records) {
                  const double gap = path.discrepancy_at_radius(rec.l1_norm) - rec.discrepancy;
                  worst = std::max(worst, gap);
                  if (gap > 1e-9) ++below;
                }
              const auto &relaxed = find_run(rank, "relaxed");
              const double rel = relaxed.final_rel_error.value_or(1e300);
              return Outcome{below == 0 && rel <= 0.05,
                             std::to_string(below) + " points below the curve (max curve - D " +
                                 sci(worst) + "), relaxed-radius rel error " + sci(rel)};
            });

  criterion("repeated bench runs give identical CSV numbers (time columns excluded)", [&] {
    const auto root = std::filesystem::temp_directory_path() / "l1pg-acceptance";
    std::filesystem::remove_all(root);
    int compared = 0, differing = 0;
    for (const auto &b : builtin_configs) {
      const std::string name(b.name);
      const auto d1 = root / (name + "-1"), d2 = root / (name + "-2");
      std::ostringstream sink;
      if (cli_main({"bench", "--builtin", name, "--out", d1.string()}, sink, sink) != 0 ||
          cli_main({"bench", "--builtin", name, "--out", d2.string(), "--parallel"}, sink, sink) != 0)
        return Outcome{false, "bench failed for " + name};
      for (const auto &entry : std::filesystem::recursive_directory_iterator(d1)) {
        if (entry.path().extension() != ".csv") continue;
        const auto rel = std::filesystem::relative(entry.path(), d1);
        ++compared;
        if (without_time_columns(read_file(entry.path())) != without_time_columns(read_file(d2 / rel)))
          ++differing;
      }
    }
    std::filesystem::remove_all(root);
    return Outcome{compared > 0 && differing == 0,
                   std::to_string(compared) + " CSV files compared, " + std::to_string(differing) +
                       " differ"};
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
