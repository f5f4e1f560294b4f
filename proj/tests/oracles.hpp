#pragma once

// Reference computations used only by the tests. None of them call into the
// projection, thresholding or homotopy code they are used to check.

#include "l1pg/operators.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace l1pg::testing {

/// Euclidean projection onto {‖x‖₁ ≤ R} by a primal active-set QP method.
///
/// Works on magnitudes b = |a|: minimize ½‖z − b‖² s.t. z ≥ 0, Σz ≤ R, then
/// restores signs. The working set holds bound constraints z_i = 0 and
/// optionally the sum constraint; equality subproblems are solved in closed
/// form, blocking constraints are added, negative multipliers released.
inline Vector qp_project_l1(const Vector &a, double radius) {
  const Index m = a.size();
  const Vector b = a.cwiseAbs();
  if (b.sum() <= radius) return a;
  if (radius == 0.0) return Vector::Zero(m);

  Vector z = Vector::Zero(m);
  std::vector<char> bound(static_cast<std::size_t>(m), 1); // z_i = 0 in working set
  bool sum_active = false;

  for (int iter = 0; iter < 50 * static_cast<int>(m) + 100; ++iter) {
    std::vector<Index> free;
    for (Index i = 0; i < m; ++i)
      if (!bound[static_cast<std::size_t>(i)]) free.push_back(i);

    // Step p solving the equality-constrained subproblem.
    Vector p = Vector::Zero(m);
    double lambda = 0.0;
    if (!free.empty()) {
      double mean = 0.0;
      for (Index i : free) mean += b[i] - z[i];
      mean /= static_cast<double>(free.size());
      if (sum_active) lambda = mean;
      for (Index i : free) p[i] = b[i] - z[i] - lambda;
    }

    if (p.norm() <= 1e-15 * (1.0 + b.norm())) {
      // Multipliers: sum constraint lambda, bounds mu_i = lambda - b_i + z_i.
      if (sum_active && free.empty()) break;
      double worst = 0.0;
      Index release = -1; // -2 releases the sum constraint
      if (sum_active && lambda < worst) {
        worst = lambda;
        release = -2;
      }
      for (Index i = 0; i < m; ++i) {
        if (!bound[static_cast<std::size_t>(i)]) continue;
        const double mu = lambda - b[i];
        if (mu < worst) {
          worst = mu;
          release = i;
        }
      }
      if (release == -1) break;
      if (release == -2)
        sum_active = false;
      else
        bound[static_cast<std::size_t>(release)] = 0;
      continue;
    }

    double alpha = 1.0;
    Index block = -1;
    for (Index i : free) {
      if (p[i] < 0.0) {
        const double t = -z[i] / p[i];
        if (t < alpha) {
          alpha = t;
          block = i;
        }
      }
    }
    if (!sum_active) {
      const double growth = p.sum();
      if (growth > 0.0) {
        const double t = (radius - z.sum()) / growth;
        if (t < alpha) {
          alpha = t;
          block = -2;
        }
      }
    }
    z += alpha * p;
    if (block >= 0) {
      z[block] = 0.0;
      bound[static_cast<std::size_t>(block)] = 1;
    } else if (block == -2) {
      sum_active = true;
    }
  }
  Vector x(m);
  for (Index i = 0; i < m; ++i) x[i] = a[i] >= 0.0 ? z[i] : -z[i];
  return x;
}

/// argmin_x (x − a)² + 2τ|x| by grid search with local refinement.
inline double scalar_prox_grid(double a, double tau) {
  const auto f = [&](double x) { return (x - a) * (x - a) + 2.0 * tau * std::abs(x); };
  double lo = -std::abs(a) - 1.0, hi = std::abs(a) + 1.0;
  double best = 0.0;
  for (int round = 0; round < 12; ++round) {
    const int n = 2000;
    const double h = (hi - lo) / n;
    double best_val = f(best);
    for (int i = 0; i <= n; ++i) {
      const double x = lo + h * i;
      const double v = f(x);
      if (v < best_val) {
        best_val = v;
        best = x;
      }
    }
    lo = best - 2.0 * h;
    hi = best + 2.0 * h;
  }
  return best;
}

inline Vector singular_values(const Matrix &m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

inline double spectral_norm_svd(const Matrix &m) { return singular_values(m)[0]; }

} // namespace l1pg::testing
