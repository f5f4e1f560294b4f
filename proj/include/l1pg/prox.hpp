#pragma once

// Soft-thresholding and exact Euclidean projection onto the l1 ball.

#include "l1pg/operators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace l1pg {

namespace detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double l1_norm(const Vector &a) {
  CompensatedSum s;
  for (Index i = 0; i < a.size(); ++i) s.add(std::abs(a[i]));
  return s.value();
}

/// |a| sorted in nonincreasing order (a*_1 >= a*_2 >= ...).
inline std::vector<double> sorted_magnitudes(const Vector &a) {
  std::vector<double> mags(static_cast<std::size_t>(a.size()));
  for (Index i = 0; i < a.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(a[i]);
  std::stable_sort(mags.begin(), mags.end(), std::greater<>());
  return mags;
}

// ‖S_{a*_k}(a)‖₁ for k = 1..m, two equivalent ways. Entry k-1 of the result
// holds the value at knot a*_k.

/// Σ_{l<k} (a*_l − a*_k), via compensated prefix sums.
inline std::vector<double> knot_norms_direct(const std::vector<double> &sorted) {
  std::vector<double> out(sorted.size());
  CompensatedSum prefix;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    out[k] = prefix.value() - static_cast<double>(k) * sorted[k];
    prefix.add(sorted[k]);
  }
  return out;
}

/// Σ_{l<k} l (a*_l − a*_{l+1}), telescoped form.
inline std::vector<double> knot_norms_telescoped(const std::vector<double> &sorted) {
  std::vector<double> out(sorted.size());
  CompensatedSum acc;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (k > 0) acc.add(static_cast<double>(k) * (sorted[k - 1] - sorted[k]));
    out[k] = acc.value();
  }
  return out;
}

inline void require_finite(const Vector &a, const char *who) {
  if (!a.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

} // namespace detail

/// Componentwise S_τ(a): a_i − τ sign(a_i) when |a_i| > τ, else 0.
inline Vector soft_threshold(const Vector &a, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  Vector out(a.size());
  for (Index i = 0; i < a.size(); ++i) {
    const double v = a[i];
    out[i] = v > tau ? v - tau : (v < -tau ? v + tau : 0.0);
  }
  return out;
}

/// φ(τ) = ‖S_τ(a)‖₁ = Σ_{|a_i|>τ} (|a_i| − τ). Piecewise linear, nonincreasing.
inline double threshold_norm(const Vector &a, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("threshold_norm: tau must be >= 0");
  detail::CompensatedSum s;
  for (Index i = 0; i < a.size(); ++i) {
    const double m = std::abs(a[i]);
    if (m > tau) s.add(m - tau);
  }
  return s.value();
}

struct ProjectionResult {
  Vector x;                  ///< P_R(a)
  double mu = 0.0;           ///< threshold with S_mu(a) = P_R(a)
  bool was_identity = false; ///< ‖a‖₁ ≤ R
};

/// Euclidean projection of `a` onto {x : ‖x‖₁ ≤ radius}.
///
/// Sort |a| descending, find the last knot k with ‖S_{a*_k}(a)‖₁ ≤ R, and
/// interpolate linearly below it: on (a*_{k+1}, a*_k] the function φ has slope
/// −k, so μ = a*_k − (R − φ(a*_k)) / k. O(m log m).
inline ProjectionResult project_l1(const Vector &a, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("project_l1: radius must be >= 0");
  detail::require_finite(a, "project_l1");

  if (detail::l1_norm(a) <= radius) return {a, 0.0, true};
  if (radius == 0.0) return {Vector::Zero(a.size()), a.cwiseAbs().maxCoeff(), false};

  const std::vector<double> sorted = detail::sorted_magnitudes(a);
  const std::vector<double> knots = detail::knot_norms_telescoped(sorted);

  // Telescoped knots are nondecreasing by construction (every increment is
  // >= 0) with knots[0] = 0 <= R; find the last one <= R.
  const auto it = std::upper_bound(knots.begin(), knots.end(), radius);
  const std::size_t k = static_cast<std::size_t>(it - knots.begin()); // survivors
  const double nu = (radius - knots[k - 1]) / static_cast<double>(k);
  double mu = sorted[k - 1] - nu;

  // One exact-slope correction absorbs rounding in the knot sums.
  const double phi = threshold_norm(a, mu);
  mu += (phi - radius) / static_cast<double>(k);
  mu = std::clamp(mu, k < sorted.size() ? sorted[k] : 0.0, sorted[k - 1]);

  return {soft_threshold(a, mu), mu, false};
}

} // namespace l1pg
