#pragma once

// Invariant suite for one generated problem: operator consistency, the
// projection identities, the minimizer characterization at the oracle
// solution and a short Condition (B) run.

#include "l1pg/harness/problem.hpp"
#include "l1pg/homotopy.hpp"
#include "l1pg/prox.hpp"
#include "l1pg/random.hpp"
#include "l1pg/solvers.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace l1pg::harness {

struct InvariantCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct InvariantReport {
  std::vector<InvariantCheck> checks;

  bool ok() const {
    for (const auto &c : checks)
      if (!c.ok) return false;
    return true;
  }
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

} // namespace detail

inline InvariantReport verify_problem(const GeneratedProblem &g, std::uint64_t seed = 0x7e51,
                                      int probes = 16) {
  InvariantReport rep;
  const auto add = [&](std::string name, bool ok, std::string detail) {
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };
  const Problem &p = g.problem;
  SplitMix64 rng(seed);

  // <Kx, v> = <x, K*v>
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const Vector x = rng.normal_vector(p.cols()), v = rng.normal_vector(p.rows());
    const Vector kx = p.op().apply(x);
    const double lhs = kx.dot(v), rhs = x.dot(p.op().apply_adjoint(v));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1e-300, kx.norm() * v.norm()));
  }
  add("adjoint consistency", worst <= 1e-12, "max relative gap " + detail::sci(worst));

  const auto est = estimate_spectral_norm(p.op(), 1e-8);
  add("norm bound", norm_bound_is_consistent(p),
      "||K||^2 ~ " + detail::sci(est.value * est.value) + " <= " + detail::sci(p.norm_bound()));

  if (p.norm_bound() == 1.0) {
    // Orthonormal rows: β_st = 1 for every direction in the range of K*.
    double dev = 0.0;
    for (int i = 0; i < probes; ++i) {
      const Vector r = p.op().apply_adjoint(rng.normal_vector(p.rows()));
      dev = std::max(dev, std::abs(*steepest_descent_beta(r, p.op().apply(r)) - 1.0));
    }
    add("steepest-descent ratio is 1", dev <= 1e-12, "max |beta - 1| " + detail::sci(dev));
  }

  {
    double gap = 0.0, norm_gap = 0.0, expand = 0.0;
    for (int i = 0; i < probes; ++i) {
      const Vector a = g.radius * rng.normal_vector(p.cols()) / std::sqrt(double(p.cols()));
      const Vector b = g.radius * rng.normal_vector(p.cols()) / std::sqrt(double(p.cols()));
      const double r = 0.5 * g.radius;
      const auto pa = project_l1(a, r), pb = project_l1(b, r);
      if (!pa.was_identity) {
        gap = std::max(gap, (soft_threshold(a, pa.mu) - pa.x).norm());
        norm_gap = std::max(norm_gap, std::abs(pa.x.lpNorm<1>() - r) / r);
      }
      expand = std::max(expand, (pa.x - pb.x).norm() - (a - b).norm());
    }
    add("projection is thresholding", gap <= 1e-12 && norm_gap <= 1e-10,
        "|S_mu(a) - P(a)| " + detail::sci(gap) + ", rel l1 gap " + detail::sci(norm_gap));
    add("projection non-expansive", expand <= 1e-12, "max excess " + detail::sci(expand));
  }

  if (g.path) {
    const auto &bp = g.path->breakpoints;
    const auto disc = [&](std::size_t k) { return (bp[k].kx - g.path->y).squaredNorm(); };
    int bad = 0;
    for (std::size_t k = 1; k < bp.size(); ++k) {
      const double dl = g.path->l1_at(k) - g.path->l1_at(k - 1);
      if (dl < -1e-9 * std::max(1.0, g.path->l1_at(k))) ++bad;
      if (disc(k) > disc(k - 1) * (1.0 + 1e-9) + 1e-14) ++bad;
    }
    add("trade-off path monotone", bad == 0,
        std::to_string(bp.size()) + " breakpoints, " + std::to_string(bad) + " violations");
  }

  if (g.reference) {
    const Vector &x = *g.reference;
    const double fp = verify_fixed_point(x, p, g.radius, {1.0, 2.0, 5.0});
    add("oracle is a fixed point", fp <= 1e-8, "residual " + detail::sci(fp));
    const auto d = minimizer_diagnostics(x, p, g.radius);
    const double tau_gap = std::abs(d.tau - g.tau) / g.tau;
    add("threshold equals penalty", tau_gap <= 1e-6, "relative gap " + detail::sci(tau_gap));
    add("support inside Gamma", d.support_in_gamma,
        std::to_string(d.support.size()) + " of " + std::to_string(d.gamma_set.size()));
    const double ip = std::abs(d.inner_product_check - g.radius);
    add("<x, e> equals R", ip <= 1e-8 * std::max(1.0, g.radius), "gap " + detail::sci(ip));

    RunOptions opts;
    opts.stop = {1e-12, 200};
    opts.reference = x;
    const auto res = run_projected_gradient(p, g.radius, StepPolicy{}, opts);
    const auto audit = audit_condition_b(res.trace, p.norm_bound(), StepPolicy{}.beta_max);
    int farther = 0;
    double prev = x.norm();
    for (const auto &r : res.trace.records) {
      if (*r.rel_error * x.norm() > prev * (1.0 + 1e-12) + 1e-14) ++farther;
      prev = *r.rel_error * x.norm();
    }
    add("condition (B) run", audit.ok() && farther == 0,
        std::to_string(res.trace.size()) + " steps, D increases " +
            std::to_string(audit.discrepancy_increases) + ", B2 failures " +
            std::to_string(audit.b2_failures) + ", distance increases " + std::to_string(farther));
  }
  return rep;
}

inline void print_invariants(std::ostream &out, const InvariantReport &rep) {
  for (const auto &c : rep.checks)
    out << (c.ok ? "ok    " : "FAIL  ") << c.name << "  (" << c.detail << ")\n";
}

} // namespace l1pg::harness
