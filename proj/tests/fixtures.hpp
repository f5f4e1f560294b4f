#pragma once

// Random test instances shared by the solver tests and the acceptance binary.

#include "l1pg/homotopy.hpp"
#include "l1pg/operators.hpp"
#include "l1pg/solvers.hpp"

#include <cmath>
#include <cstdint>

namespace l1pg::testing {

/// Gaussian rows×cols matrix (unit-variance columns in expectation) and
/// Gaussian data, rescaled to ‖K‖ ≤ 0.999.
inline Problem random_problem(std::uint64_t seed, Index rows, Index cols) {
  SplitMix64 rng(seed);
  const Matrix k = rng.normal_matrix(rows, cols) / std::sqrt(static_cast<double>(rows));
  const Vector y = rng.normal_vector(rows);
  return rescale_problem(LinearOperator::dense(k), y);
}

/// Exact penalized minimizer at τ = frac · ‖K*y‖_∞ and its l1 norm.
struct OracleSolution {
  double tau = 0.0;
  double radius = 0.0;
  Vector x;
};

inline OracleSolution oracle_at_fraction(const Problem &p, double frac) {
  const double tau_max = p.op().apply_adjoint(p.y()).cwiseAbs().maxCoeff();
  OracleSolution o;
  o.tau = frac * tau_max;
  o.x = solve_homotopy(p, HomotopyTarget::penalty(o.tau)).x;
  o.radius = o.x.lpNorm<1>();
  return o;
}

/// F_τ(x) = ‖Kx − y‖² + 2τ‖x‖₁
inline double penalized_objective(const Problem &p, const Vector &x, double tau) {
  return p.discrepancy(x) + 2.0 * tau * x.lpNorm<1>();
}

inline RunOptions tight_options(int max_iter = 1000000, double tol = 1e-14) {
  RunOptions o;
  o.stop.tol = tol;
  o.stop.max_iter = max_iter;
  return o;
}

} // namespace l1pg::testing
