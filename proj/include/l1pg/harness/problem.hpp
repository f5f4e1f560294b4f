#pragma once

// Seeded problem instances: operator, planted sparse vector, noisy data, the
// penalty τ and (optionally) the exact minimizer from the homotopy path.

#include "l1pg/harness/config.hpp"
#include "l1pg/homotopy.hpp"
#include "l1pg/operators.hpp"
#include "l1pg/random.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace l1pg::harness {

struct GeneratedProblem {
  Problem problem;
  Vector x_true;
  double sigma = 0.0; ///< noise level in the units of the rescaled problem
  double tau = 0.0;
  double radius = 0.0;
  /// x̄(τ) and the homotopy path it was read from (oracle runs only).
  std::optional<Vector> reference;
  std::optional<HomotopyPath> path;
  bool path_truncated = false; ///< the path stopped early at a singular active set
};

/// Ray-sum matrix on a grid × grid image: each row integrates along one
/// straight line with random angle and offset, by midpoint sampling with
/// step 1/64 pixel. Few rays and overlapping supports make it ill-conditioned.
inline Matrix tomography_matrix(Index rays, Index grid, SplitMix64 &rng) {
  const double g = static_cast<double>(grid);
  const double pi = std::acos(-1.0);
  const double dt = 1.0 / 64.0;
  Matrix k = Matrix::Zero(rays, grid * grid);
  for (Index i = 0; i < rays; ++i) {
    const double theta = pi * rng.uniform();
    const double offset = (rng.uniform() - 0.5) * 0.9 * g;
    const double dx = std::cos(theta), dy = std::sin(theta);
    const double cx = 0.5 * g - offset * dy, cy = 0.5 * g + offset * dx;
    for (double t = -g + 0.5 * dt; t < g; t += dt) {
      const double px = cx + t * dx, py = cy + t * dy;
      if (px < 0.0 || py < 0.0 || px >= g || py >= g) continue;
      const auto col = static_cast<Index>(py) * grid + static_cast<Index>(px);
      k(i, col) += dt;
    }
  }
  return k;
}

/// The rank-structured singular values: one top value, the rest evenly
/// spaced from tail_max down to tail_min.
inline std::vector<double> rank_structured_spectrum(const ProblemConfig &p) {
  const Index r = std::min(p.rows, p.cols);
  std::vector<double> s(static_cast<std::size_t>(r));
  s[0] = p.top_singular_value;
  for (Index i = 1; i < r; ++i) {
    const double t = r > 2 ? static_cast<double>(i - 1) / static_cast<double>(r - 2) : 0.0;
    s[static_cast<std::size_t>(i)] = p.tail_max + t * (p.tail_min - p.tail_max);
  }
  return s;
}

/// Builds the unscaled operator. Stream draws happen in a fixed order so
/// the same seed always gives the same operator.
inline LinearOperator build_problem_operator(const ProblemConfig &p, SplitMix64 &rng) {
  switch (p.op) {
  case ProblemKind::partial_dft:
    return LinearOperator::partial_dft(p.cols, rng.sample_indices(p.cols, p.rows));
  case ProblemKind::rank_structured:
    return LinearOperator::rank_structured(p.rows, p.cols, rank_structured_spectrum(p), rng.next());
  case ProblemKind::gaussian:
    return LinearOperator::dense(rng.normal_matrix(p.rows, p.cols) /
                                 std::sqrt(static_cast<double>(p.rows)));
  case ProblemKind::tomography:
    return LinearOperator::dense(tomography_matrix(p.rows, p.grid, rng));
  case ProblemKind::matrix:
    return LinearOperator::dense(read_matrix_file(p.matrix_file));
  }
  throw std::logic_error("unhandled operator kind");
}

/// Path down to τ = 0, or as far as the active Gram matrices stay regular.
inline HomotopyPath oracle_path(const Problem &p, bool &truncated) {
  truncated = false;
  try {
    return solve_homotopy(p, HomotopyTarget::full()).path;
  } catch (const HomotopyError &e) {
    truncated = true;
    return e.path();
  }
}

inline GeneratedProblem generate_problem(const ProblemConfig &cfg, std::uint64_t seed,
                                         bool with_oracle = true) {
  SplitMix64 rng(seed);
  SplitMix64 op_rng(rng.next()), x_rng(rng.next()), noise_rng(rng.next());

  const LinearOperator op = build_problem_operator(cfg, op_rng);
  const Index n = op.cols();
  const Index sparsity = std::min<Index>(cfg.sparsity, n);

  Vector x_true = Vector::Zero(n);
  for (Index j : x_rng.sample_indices(n, sparsity)) {
    const double mag = 1.0 + std::abs(x_rng.normal());
    x_true[j] = x_rng.uniform() < 0.5 ? -mag : mag;
  }
  Vector y = op.apply(x_true);
  if (cfg.noise_sigma > 0.0) y += cfg.noise_sigma * noise_rng.normal_vector(op.rows());

  // Orthonormal rows keep their unit norm, so the steepest-descent ratio
  // stays exactly 1; everything else is rescaled below 1.
  std::optional<Problem> scaled;
  if (cfg.op == ProblemKind::partial_dft)
    scaled = Problem::orthonormal_rows(op, y);
  else
    scaled = rescale_problem(op, y, cfg.rescale_target);

  GeneratedProblem g{*scaled, std::move(x_true)};
  g.sigma = cfg.noise_sigma * g.problem.scale_applied();
  const Problem &p = g.problem;
  const double tau_max = p.op().apply_adjoint(p.y()).cwiseAbs().maxCoeff();
  if (tau_max == 0.0) throw std::runtime_error("generate_problem: K*y = 0, every x = 0 is optimal");

  const bool need_path = with_oracle || cfg.tau_rule == TauRule::discrepancy ||
                         cfg.radius == 0.0;
  if (need_path) g.path = oracle_path(p, g.path_truncated);

  switch (cfg.tau_rule) {
  case TauRule::fixed: g.tau = cfg.tau; break;
  case TauRule::fraction: g.tau = cfg.tau_fraction * tau_max; break;
  case TauRule::discrepancy: {
    const double target = static_cast<double>(p.rows()) * g.sigma * g.sigma;
    const auto tau = penalty_for_discrepancy(*g.path, target);
    if (!tau)
      throw std::runtime_error("generate_problem: no τ on the computed path gives D = " +
                               std::to_string(target) + (g.path_truncated ? " (path truncated)" : ""));
    g.tau = *tau;
    break;
  }
  }

  if (g.path) {
    if (g.tau < g.path->tau_min())
      throw std::runtime_error("generate_problem: τ lies below the computed homotopy path");
    const Vector xbar = g.path->solution_at_tau(g.tau);
    g.radius = cfg.radius > 0.0 ? cfg.radius : xbar.lpNorm<1>();
    if (with_oracle) {
      // Re-solve at τ exactly rather than interpolating between breakpoints.
      g.reference = solve_homotopy(p, HomotopyTarget::penalty(g.tau)).x;
      if (cfg.radius > 0.0) g.reference = solve_homotopy(p, HomotopyTarget::radius(cfg.radius)).x;
    }
  } else {
    g.radius = cfg.radius;
  }
  if (!(g.radius > 0.0)) throw std::runtime_error("generate_problem: radius is zero (τ ≥ ‖K*y‖_∞)");
  return g;
}

} // namespace l1pg::harness
