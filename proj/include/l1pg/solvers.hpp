#pragma once

// Iterative schemes for min ‖Kx − y‖² over the l1 ball B_R (and the
// penalized variant with fixed threshold):
//
//   thresholded Landweber   x⁺ = S_τ(x + K*(y − Kx))
//   projected Landweber     x⁺ = P_R(x + K*(y − Kx))
//   projected gradient      x⁺ = P_R(x + β K*(y − Kx)),  β from a StepPolicy
//   relaxed radius          x⁺ = P_{R_n}(x + β K*(y − Kx)),  R_n = (n+1)R/N
//   POCS                    x⁺ = P_R(x + K*(KK*)⁻¹(y − Kx))
//
// Every scheme records one IterationRecord per step; record n describes the
// step x^(n) -> x^(n+1).

#include "l1pg/operators.hpp"
#include "l1pg/prox.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace l1pg {

enum class StepMode { fixed_one, steepest_descent, steepest_descent_with_b };

struct StepPolicy {
  StepMode mode = StepMode::steepest_descent_with_b;
  double beta_max = 1e6;
  double backtrack_factor = 0.9;
  bool enforce_b2 = true;
  int max_backtracks = 200;

  bool enforces_b2() const { return enforce_b2 || mode == StepMode::steepest_descent_with_b; }

  void validate() const {
    detail::require(beta_max >= 1.0, "step policy: beta_max must be >= 1");
    detail::require(backtrack_factor > 0.0 && backtrack_factor < 1.0,
                    "step policy: backtrack factor must lie in (0, 1)");
    detail::require(max_backtracks >= 0, "step policy: max_backtracks must be >= 0");
  }
};

struct StoppingRule {
  double tol = 1e-8; ///< stop when ‖x⁺ − x‖ ≤ tol · max(1, ‖x‖)
  int max_iter = 10000;
};

struct RunOptions {
  Vector x0;                      ///< empty means the origin
  StoppingRule stop;
  std::optional<Vector> reference; ///< enables rel_error in the trace
};

struct IterationRecord {
  int n = 0;
  double beta = 1.0;
  double l1_norm = 0.0;
  double discrepancy = 0.0;
  double step_norm = 0.0;
  bool b2_satisfied = true;
  int backtracks = 0;
  double time_s = 0.0; ///< elapsed since the start of the run
  std::optional<double> rel_error;
};

struct SolverTrace {
  std::string solver;
  std::vector<IterationRecord> records;
  double initial_l1_norm = 0.0;
  double initial_discrepancy = 0.0;
  std::optional<double> initial_rel_error;
  bool converged = false;
  bool heuristic = false; ///< no convergence guarantee for this scheme
  bool condition_b_enforced = false;
  /// Records whose discrepancy rose by more than 1e-12 · D(x^(0)).
  int discrepancy_increases = 0;

  std::size_t size() const { return records.size(); }
};

struct MinimizerDiagnostics {
  double tau = 0.0;                ///< ‖K*(y − Kx)‖_∞
  std::vector<Index> support;      ///< nonzeros of x
  std::vector<Index> gamma_set;    ///< where |K*(y − Kx)| attains tau (relative tol)
  Vector sign_vector;              ///< sign of K*(y − Kx) on gamma_set, 0 elsewhere
  double fixed_point_residual = 0.0;
  double inner_product_check = 0.0; ///< ⟨x, e⟩, equals R at a minimizer
  bool support_in_gamma = true;
  bool degenerate = false;          ///< K*(y − Kx) = 0: x is a global minimizer of D
};

struct SolverResult {
  Vector x;
  SolverTrace trace;
  std::optional<MinimizerDiagnostics> diagnostics;
};

/// Thrown when an iteration produces non-finite values; carries the trace.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string &what, SolverTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const SolverTrace &trace() const { return trace_; }

private:
  SolverTrace trace_;
};

// ---------------------------------------------------------------------------
// Step-size primitives

/// β_st = ‖r‖² / ‖Kr‖² clamped to [1, beta_max]; nullopt when r = 0
/// (the iteration has converged).
inline std::optional<double> steepest_descent_beta(const Vector &r_vec, const Vector &kr,
                                                   double beta_max = 1e6) {
  const double rr = r_vec.squaredNorm();
  if (rr == 0.0) return std::nullopt;
  const double kk = kr.squaredNorm();
  if (kk == 0.0) return beta_max;
  return std::clamp(rr / kk, 1.0, beta_max);
}

/// (B2): β ‖K Δx‖² ≤ r ‖Δx‖².
inline bool condition_b2_holds(double beta, const Vector &dx, const Vector &kdx,
                               double r_bound) {
  const double dd = dx.squaredNorm();
  if (dd == 0.0) return true;
  return beta * kdx.squaredNorm() <= r_bound * dd * (1.0 + 1e-14);
}

/// max over β of ‖P_R(x + β K*(y − Kx)) − x‖; zero iff x minimizes D on B_R.
inline double verify_fixed_point(const Vector &x, const Problem &p, double radius,
                                 const std::vector<double> &betas = {1.0, 2.0, 5.0}) {
  const Vector r = p.residual_correlation(x);
  double worst = 0.0;
  for (double beta : betas)
    worst = std::max(worst, (project_l1(x + beta * r, radius).x - x).norm());
  return worst;
}

inline MinimizerDiagnostics minimizer_diagnostics(const Vector &x, const Problem &p,
                                                  double radius, double tol_gamma = 1e-6) {
  MinimizerDiagnostics d;
  const Vector c = p.residual_correlation(x);
  d.tau = c.cwiseAbs().maxCoeff();
  d.degenerate = (d.tau == 0.0);
  d.sign_vector = Vector::Zero(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) d.support.push_back(i);
    if (std::abs(c[i]) >= d.tau * (1.0 - tol_gamma)) {
      d.gamma_set.push_back(i);
      d.sign_vector[i] = c[i] > 0.0 ? 1.0 : (c[i] < 0.0 ? -1.0 : 0.0);
    }
  }
  d.support_in_gamma = std::includes(d.gamma_set.begin(), d.gamma_set.end(),
                                     d.support.begin(), d.support.end());
  d.inner_product_check = x.dot(d.sign_vector);
  d.fixed_point_residual = verify_fixed_point(x, p, radius, {1.0});
  return d;
}

/// Audit of a trace against what Condition (B) guarantees for runs started
/// inside B_R: nonincreasing D, β in [1, beta_max], (B2) on every step and
/// Σ‖Δx‖² ≤ (β̄ / (1 − r)) · D(x^(0)).
struct ConditionBAudit {
  int discrepancy_increases = 0;
  int beta_out_of_range = 0;
  int b2_failures = 0;
  double step_energy = 0.0;
  double step_energy_bound = 0.0;
  bool step_energy_ok = true;

  bool ok() const {
    return discrepancy_increases == 0 && beta_out_of_range == 0 && b2_failures == 0 &&
           step_energy_ok;
  }
};

inline ConditionBAudit audit_condition_b(const SolverTrace &trace, double r_bound,
                                         double beta_max, double rel_slack = 1e-12) {
  ConditionBAudit a;
  double prev = trace.initial_discrepancy;
  double beta_bar = 1.0;
  for (const auto &rec : trace.records) {
    if (rec.discrepancy > prev + rel_slack * trace.initial_discrepancy) ++a.discrepancy_increases;
    prev = rec.discrepancy;
    if (rec.beta < 1.0 || rec.beta > beta_max) ++a.beta_out_of_range;
    if (!rec.b2_satisfied) ++a.b2_failures;
    beta_bar = std::max(beta_bar, rec.beta);
    a.step_energy += rec.step_norm * rec.step_norm;
  }
  // With r = 1 the bound degenerates; only the monotonicity checks remain.
  a.step_energy_bound = r_bound < 1.0 ? beta_bar / (1.0 - r_bound) * trace.initial_discrepancy
                                      : std::numeric_limits<double>::infinity();
  a.step_energy_ok = a.step_energy <= a.step_energy_bound * (1.0 + 1e-10) + 1e-300;
  return a;
}

/// β ≡ 1 satisfies (B2) iff ‖K*K‖ ≤ r; checks the certified bound against a
/// fresh power-iteration estimate.
inline bool norm_bound_is_consistent(const Problem &p, double tol = 1e-6) {
  const auto est = estimate_spectral_norm(p.op(), tol);
  return est.value * est.value <= p.norm_bound() * (1.0 + 10.0 * tol);
}

// ---------------------------------------------------------------------------
// Iteration driver

namespace detail {

using Clock = std::chrono::steady_clock;

class Recorder {
public:
  Recorder(const Problem &p, const RunOptions &opts, std::string solver)
      : p_(p), opts_(opts), start_(Clock::now()) {
    trace_.solver = std::move(solver);
    if (opts.reference) {
      require(opts.reference->size() == p.cols(), "reference length must equal operator cols");
      ref_norm_ = opts.reference->norm();
    }
  }

  void start(const Vector &x0, const Vector &kx0) {
    trace_.initial_l1_norm = l1_norm(x0);
    trace_.initial_discrepancy = (kx0 - p_.y()).squaredNorm();
    trace_.initial_rel_error = rel_error(x0);
    last_discrepancy_ = trace_.initial_discrepancy;
  }

  /// Returns true when the stopping rule fires.
  bool record(const Vector &x_old, const Vector &x_new, const Vector &kx_new, double beta,
              bool b2, int backtracks) {
    IterationRecord rec;
    rec.n = static_cast<int>(trace_.records.size());
    rec.beta = beta;
    rec.l1_norm = l1_norm(x_new);
    rec.discrepancy = (kx_new - p_.y()).squaredNorm();
    rec.step_norm = (x_new - x_old).norm();
    rec.b2_satisfied = b2;
    rec.backtracks = backtracks;
    rec.time_s = std::chrono::duration<double>(Clock::now() - start_).count();
    rec.rel_error = rel_error(x_new);
    if (!std::isfinite(rec.l1_norm) || !std::isfinite(rec.discrepancy))
      throw SolverError(trace_.solver + ": non-finite iterate at step " + std::to_string(rec.n),
                        trace_);
    if (rec.discrepancy > last_discrepancy_ + 1e-12 * trace_.initial_discrepancy)
      ++trace_.discrepancy_increases;
    last_discrepancy_ = rec.discrepancy;
    trace_.records.push_back(rec);
    return rec.step_norm <= opts_.stop.tol * std::max(1.0, x_old.norm());
  }

  SolverTrace &trace() { return trace_; }

private:
  std::optional<double> rel_error(const Vector &x) const {
    if (!opts_.reference) return std::nullopt;
    const double diff = (x - *opts_.reference).norm();
    return ref_norm_ > 0.0 ? diff / ref_norm_ : diff;
  }

  const Problem &p_;
  const RunOptions &opts_;
  Clock::time_point start_;
  SolverTrace trace_;
  double ref_norm_ = 0.0;
  double last_discrepancy_ = 0.0;
};

inline Vector initial_point(const Problem &p, const RunOptions &opts) {
  if (opts.x0.size() == 0) return Vector::Zero(p.cols());
  require(opts.x0.size() == p.cols(), "x0 length must equal operator cols");
  require(opts.x0.allFinite(), "x0 must be finite");
  return opts.x0;
}

inline void require_stop(const StoppingRule &stop) {
  require(stop.tol >= 0.0, "stopping tolerance must be >= 0");
  require(stop.max_iter >= 0, "max_iter must be >= 0");
}

/// One projected-gradient step x⁺ = P_radius(x + β r) with the policy's β and
/// optional (B2) backtracking.
struct StepOutcome {
  Vector x_new, kdx;
  double beta = 1.0;
  bool b2 = true;
  int backtracks = 0;
};

inline StepOutcome projected_step(const Problem &p, const Vector &x, const Vector &r,
                                  double radius, const StepPolicy &policy) {
  double beta = 1.0;
  if (policy.mode != StepMode::fixed_one) {
    const Vector kr = p.op().apply(r);
    beta = steepest_descent_beta(r, kr, policy.beta_max).value_or(1.0);
  }
  StepOutcome out;
  for (;;) {
    out.x_new = project_l1(x + beta * r, radius).x;
    const Vector dx = out.x_new - x;
    out.kdx = p.op().apply(dx);
    out.beta = beta;
    out.b2 = condition_b2_holds(beta, dx, out.kdx, p.norm_bound());
    if (out.b2 || !policy.enforces_b2() || beta == 1.0) return out;
    if (out.backtracks >= policy.max_backtracks) {
      beta = 1.0;
    } else {
      beta = std::max(1.0, beta * policy.backtrack_factor);
    }
    ++out.backtracks;
  }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Solvers

/// x⁺ = S_τ(x + K*(y − Kx)); converges to the minimizer of ‖Kx − y‖² + 2τ‖x‖₁.
inline SolverResult run_thresholded_landweber(const Problem &p, double tau,
                                              const RunOptions &opts = {}) {
  detail::require(tau > 0.0, "thresholded Landweber: tau must be > 0");
  detail::require_stop(opts.stop);
  detail::Recorder rec(p, opts, "thresholded-landweber");
  Vector x = detail::initial_point(p, opts);
  Vector kx = p.op().apply(x);
  rec.start(x, kx);
  for (int n = 0; n < opts.stop.max_iter; ++n) {
    Vector x_new = soft_threshold(x + p.op().apply_adjoint(p.y() - kx), tau);
    Vector kx_new = p.op().apply(x_new);
    const bool done = rec.record(x, x_new, kx_new, 1.0, true, 0);
    x = std::move(x_new);
    kx = std::move(kx_new);
    if (done) {
      rec.trace().converged = true;
      break;
    }
  }
  return {std::move(x), std::move(rec.trace()), std::nullopt};
}

namespace detail {

inline SolverResult projected_loop(const Problem &p, double radius, const StepPolicy &policy,
                                   const RunOptions &opts, std::string name) {
  require(radius > 0.0, name + ": radius must be > 0");
  policy.validate();
  require_stop(opts.stop);
  Recorder rec(p, opts, std::move(name));
  rec.trace().condition_b_enforced = policy.enforces_b2();
  Vector x = initial_point(p, opts);
  Vector kx = p.op().apply(x);
  rec.start(x, kx);
  for (int n = 0; n < opts.stop.max_iter; ++n) {
    const Vector r = p.op().apply_adjoint(p.y() - kx);
    if (r.squaredNorm() == 0.0 && project_l1(x, radius).was_identity) {
      rec.trace().converged = true;
      break;
    }
    StepOutcome step = projected_step(p, x, r, radius, policy);
    Vector kx_new = p.op().apply(step.x_new);
    const bool done = rec.record(x, step.x_new, kx_new, step.beta, step.b2, step.backtracks);
    x = std::move(step.x_new);
    kx = std::move(kx_new);
    if (done) {
      rec.trace().converged = true;
      break;
    }
  }
  SolverResult out{std::move(x), std::move(rec.trace()), std::nullopt};
  out.diagnostics = minimizer_diagnostics(out.x, p, radius);
  return out;
}

} // namespace detail

/// x⁺ = P_R(x + K*(y − Kx)).
inline SolverResult run_projected_landweber(const Problem &p, double radius,
                                            const RunOptions &opts = {}) {
  StepPolicy fixed;
  fixed.mode = StepMode::fixed_one;
  fixed.enforce_b2 = false;
  return detail::projected_loop(p, radius, fixed, opts, "projected-landweber");
}

/// x⁺ = P_R(x + β K*(y − Kx)) with β from `policy`; when the policy enforces
/// (B2), β is shrunk by backtrack_factor until β‖KΔx‖² ≤ r‖Δx‖².
inline SolverResult run_projected_gradient(const Problem &p, double radius,
                                           const StepPolicy &policy = {},
                                           const RunOptions &opts = {}) {
  return detail::projected_loop(p, radius, policy, opts, "projected-gradient");
}

/// N steps from the origin with radius (n+1)R/N at step n. Heuristic: no
/// convergence guarantee.
inline SolverResult run_relaxed_radius(const Problem &p, double radius, int steps,
                                       const StepPolicy &policy = {},
                                       const RunOptions &opts = {}) {
  detail::require(radius > 0.0, "relaxed radius: radius must be > 0");
  detail::require(steps >= 1, "relaxed radius: N must be >= 1");
  detail::require(opts.x0.size() == 0 || opts.x0.isZero(0.0),
                  "relaxed radius: iteration starts at the origin");
  policy.validate();
  detail::Recorder rec(p, opts, "relaxed-radius");
  rec.trace().heuristic = true;
  rec.trace().condition_b_enforced = policy.enforces_b2();
  Vector x = Vector::Zero(p.cols());
  Vector kx = Vector::Zero(p.rows());
  rec.start(x, kx);
  for (int n = 0; n < steps; ++n) {
    const double radius_n = static_cast<double>(n + 1) * radius / static_cast<double>(steps);
    const Vector r = p.op().apply_adjoint(p.y() - kx);
    detail::StepOutcome step = detail::projected_step(p, x, r, radius_n, policy);
    Vector kx_new = p.op().apply(step.x_new);
    rec.record(x, step.x_new, kx_new, step.beta, step.b2, step.backtracks);
    x = std::move(step.x_new);
    kx = std::move(kx_new);
  }
  rec.trace().converged = false;
  return {std::move(x), std::move(rec.trace()), std::nullopt};
}

/// Applies (KK*)⁻¹ on the data space.
using GramInverse = std::function<Vector(const Vector &)>;

/// Dense Cholesky of KK*; rejects a singular Gram matrix.
inline GramInverse dense_gram_inverse(const LinearOperator &op, double rcond_min = 1e-12) {
  const Matrix k = op.materialize();
  const Matrix gram = k * k.transpose();
  Eigen::LLT<Matrix> llt(gram);
  detail::require(llt.info() == Eigen::Success, "POCS: KK* is singular (Cholesky failed)");
  const double rcond = llt.rcond();
  detail::require(rcond > rcond_min, "POCS: KK* is numerically singular (rcond " +
                                         std::to_string(rcond) + ")");
  return [llt = std::move(llt)](const Vector &v) -> Vector { return llt.solve(v); };
}

/// Nearest point to x on {a : Ka = y}: x + K*(KK*)⁻¹(y − Kx).
inline Vector affine_projection(const Problem &p, const Vector &x,
                                const GramInverse &gram_inverse) {
  return x + p.op().apply_adjoint(gram_inverse(p.y() - p.op().apply(x)));
}

/// Alternating projections x⁺ = P_R(affine_projection(x)).
inline SolverResult run_pocs(const Problem &p, double radius, const GramInverse &gram_inverse,
                             const RunOptions &opts = {}) {
  detail::require(radius > 0.0, "POCS: radius must be > 0");
  detail::require(static_cast<bool>(gram_inverse), "POCS: missing Gram inverse");
  detail::require_stop(opts.stop);
  detail::Recorder rec(p, opts, "pocs");
  Vector x = detail::initial_point(p, opts);
  Vector kx = p.op().apply(x);
  rec.start(x, kx);
  for (int n = 0; n < opts.stop.max_iter; ++n) {
    const Vector affine = x + p.op().apply_adjoint(gram_inverse(p.y() - kx));
    Vector x_new = project_l1(affine, radius).x;
    Vector kx_new = p.op().apply(x_new);
    const Vector dx = x_new - x;
    const bool b2 = condition_b2_holds(1.0, dx, kx_new - kx, p.norm_bound());
    const bool done = rec.record(x, x_new, kx_new, 1.0, b2, 0);
    x = std::move(x_new);
    kx = std::move(kx_new);
    if (done) {
      rec.trace().converged = true;
      break;
    }
  }
  return {std::move(x), std::move(rec.trace()), std::nullopt};
}

} // namespace l1pg
