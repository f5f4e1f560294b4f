#pragma once

// Exact solution path of min ‖Kx − y‖² + 2τ‖x‖₁ (LARS with the Lasso
// modification, no column normalization).
//
// On an active set A with signs s the optimality conditions
//   K_Aᵀ(y − K_A x_A) = τ s,   |Kᵀ(y − Kx)|_j ≤ τ  (j ∉ A)
// give x_A(τ) = G⁻¹(K_Aᵀy − τ s) with G = K_AᵀK_A, which is affine in τ. The
// path is followed downward from τ₀ = ‖Kᵀy‖_∞ by computing the next event:
// an inactive correlation reaching ±τ (join) or an active coefficient
// crossing zero (drop).

#include "l1pg/operators.hpp"
#include "l1pg/prox.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace l1pg {

struct Breakpoint {
  double tau = 0.0;
  Vector x;
  Vector kx;
  std::vector<Index> active;
};

struct TradeoffPoint {
  double tau = 0.0;
  double l1_norm = 0.0;
  double discrepancy = 0.0;
  Index support_size = 0;
};

/// Breakpoints (τ_k, x̄(τ_k)) with τ strictly decreasing; x̄ and Kx̄ are
/// affine in τ between consecutive breakpoints.
struct HomotopyPath {
  std::vector<Breakpoint> breakpoints;
  Vector y;
  bool complete = false;   ///< reached τ = 0 (the full path)
  bool degenerate = false; ///< simultaneous events were resolved one at a time

  bool empty() const { return breakpoints.empty(); }
  double tau_max() const { return breakpoints.front().tau; }
  double tau_min() const { return breakpoints.back().tau; }

  double l1_at(std::size_t k) const { return detail::l1_norm(breakpoints[k].x); }

  /// x̄(τ) for τ in [tau_min, ∞); clamps below tau_min.
  Vector solution_at_tau(double tau) const {
    const auto [k, t] = locate_tau(tau);
    if (t == 0.0) return breakpoints[k].x;
    return breakpoints[k].x + t * (breakpoints[k + 1].x - breakpoints[k].x);
  }

  double discrepancy_at_tau(double tau) const {
    const auto [k, t] = locate_tau(tau);
    Vector kx = breakpoints[k].kx;
    if (t != 0.0) kx += t * (breakpoints[k + 1].kx - breakpoints[k].kx);
    return (kx - y).squaredNorm();
  }

  /// τ with ‖x̄(τ)‖₁ = radius; tau_min when the radius exceeds the path.
  double tau_at_radius(double radius) const {
    if (radius <= 0.0) return tau_max();
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
      const double l0 = l1_at(k), l1 = l1_at(k + 1);
      if (radius <= l1) {
        const double t = l1 > l0 ? (radius - l0) / (l1 - l0) : 1.0;
        return breakpoints[k].tau + t * (breakpoints[k + 1].tau - breakpoints[k].tau);
      }
    }
    return tau_min();
  }

  /// min_{‖x‖₁ ≤ radius} ‖Kx − y‖², the trade-off curve. Past the end of the
  /// path the value stays at the last breakpoint's discrepancy.
  double discrepancy_at_radius(double radius) const {
    return discrepancy_at_tau(tau_at_radius(radius));
  }

private:
  std::pair<std::size_t, double> locate_tau(double tau) const {
    if (breakpoints.empty()) throw std::logic_error("homotopy path is empty");
    if (tau >= breakpoints.front().tau) return {0, 0.0};
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
      const double hi = breakpoints[k].tau, lo = breakpoints[k + 1].tau;
      if (tau >= lo) {
        const double t = hi > lo ? (hi - tau) / (hi - lo) : 1.0;
        return {k, t};
      }
    }
    return {breakpoints.size() - 1, 0.0};
  }
};

struct HomotopyTarget {
  enum class Kind { penalty, radius, full };
  Kind kind = Kind::full;
  double value = 0.0;

  static HomotopyTarget penalty(double tau) { return {Kind::penalty, tau}; }
  static HomotopyTarget radius(double r) { return {Kind::radius, r}; }
  static HomotopyTarget full() { return {Kind::full, 0.0}; }
};

struct HomotopyResult {
  Vector x;
  double tau = 0.0; ///< penalty at which x = x̄(τ)
  HomotopyPath path;
};

/// Active Gram matrix became singular; path() holds the breakpoints so far.
class HomotopyError : public std::runtime_error {
public:
  HomotopyError(const std::string &what, HomotopyPath path)
      : std::runtime_error(what), path_(std::move(path)) {}
  const HomotopyPath &path() const { return path_; }

private:
  HomotopyPath path_;
};

struct HomotopyOptions {
  double rcond_min = 1e-13; ///< active Gram reciprocal condition floor
  std::size_t max_breakpoints = 100000;
};

/// Follows the path on a dense K down to the target.
inline HomotopyResult solve_homotopy(const Matrix &k, const Vector &y, HomotopyTarget target,
                                     const HomotopyOptions &opts = {}) {
  detail::require(k.rows() == y.size(), "homotopy: data length must equal matrix rows");
  detail::require(k.allFinite() && y.allFinite(), "homotopy: non-finite input");
  if (target.kind == HomotopyTarget::Kind::penalty)
    detail::require(target.value > 0.0, "homotopy: penalty target must be > 0");
  if (target.kind == HomotopyTarget::Kind::radius)
    detail::require(target.value >= 0.0, "homotopy: radius target must be >= 0");

  const Index m = k.cols();
  HomotopyResult res;
  HomotopyPath &path = res.path;
  path.y = y;

  Vector x = Vector::Zero(m);
  Vector c = k.transpose() * y;
  double tau = c.size() > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
  path.breakpoints.push_back({tau, x, Vector::Zero(k.rows()), {}});

  const auto finish = [&](double t) {
    res.x = x;
    res.tau = t;
    return res;
  };

  if (tau == 0.0) {
    path.complete = true;
    return finish(0.0);
  }
  if (target.kind == HomotopyTarget::Kind::penalty && target.value >= tau) return finish(target.value);
  if (target.kind == HomotopyTarget::Kind::radius && target.value == 0.0) return finish(tau);

  std::vector<Index> active;
  std::vector<char> in_active(static_cast<std::size_t>(m), 0);
  Vector signs = Vector::Zero(m);

  const auto add = [&](Index j, double sign) {
    active.insert(std::upper_bound(active.begin(), active.end(), j), j);
    in_active[static_cast<std::size_t>(j)] = 1;
    signs[j] = sign;
  };

  {
    Index j0 = 0;
    c.cwiseAbs().maxCoeff(&j0); // first index attaining the max
    for (Index j = 0; j < m; ++j)
      if (j != j0 && std::abs(c[j]) == tau) path.degenerate = true;
    add(j0, c[j0] > 0 ? 1.0 : -1.0);
  }

  Index last_added = active.front();
  Index last_dropped = -1;
  const double tau0 = tau;

  while (path.breakpoints.size() < opts.max_breakpoints) {
    const auto na = static_cast<Index>(active.size());
    Matrix ka(k.rows(), na);
    Vector sa(na);
    for (Index a = 0; a < na; ++a) {
      ka.col(a) = k.col(active[static_cast<std::size_t>(a)]);
      sa[a] = signs[active[static_cast<std::size_t>(a)]];
    }
    const Matrix gram = ka.transpose() * ka;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success || llt.rcond() < opts.rcond_min)
      throw HomotopyError("homotopy: active Gram matrix is singular at tau = " +
                              std::to_string(tau) + " with " + std::to_string(na) +
                              " active columns",
                          path);

    // Re-solve on the current active set at the current τ.
    const Vector xa = llt.solve(ka.transpose() * y - tau * sa);
    x.setZero();
    for (Index a = 0; a < na; ++a) x[active[static_cast<std::size_t>(a)]] = xa[a];
    const Vector d = llt.solve(sa);
    const Vector kd = ka * d;
    const Vector kx = ka * xa;
    c = k.transpose() * (y - kx);
    const Vector corr_rate = k.transpose() * kd;

    // Step to the end of the path or to the target.
    double gamma_end = tau;
    bool target_hit = false;
    if (target.kind == HomotopyTarget::Kind::penalty) {
      gamma_end = tau - target.value;
      target_hit = true;
    }
    if (target.kind == HomotopyTarget::Kind::radius) {
      const double l1_now = detail::l1_norm(x);
      const double slope = sa.dot(d);
      if (slope > 0.0) {
        const double g = (target.value - l1_now) / slope;
        if (g <= gamma_end) {
          gamma_end = std::max(g, 0.0);
          target_hit = true;
        }
      }
    }

    double gamma = gamma_end;
    enum class Event { end, join, drop } event = Event::end;
    Index who = -1;
    double join_sign = 0.0;
    const double cutoff = gamma_end * (1.0 - 1e-12);

    // With as many active columns as rows, a further join would make the
    // Gram matrix singular.
    const bool can_join = na < k.rows();
    for (Index j = 0; can_join && j < m; ++j) {
      if (in_active[static_cast<std::size_t>(j)] || j == last_dropped) continue;
      const double cj = c[j], aj = corr_rate[j];
      // c_j − γ a_j = +(τ − γ)  or  −(τ − γ)
      const double cand[2] = {(1.0 - aj) > 0.0 ? (tau - cj) / (1.0 - aj) : -1.0,
                              (1.0 + aj) > 0.0 ? (tau + cj) / (1.0 + aj) : -1.0};
      for (int s = 0; s < 2; ++s) {
        const double g = cand[s];
        if (g > 0.0 && g < cutoff && g == gamma && event != Event::end) path.degenerate = true;
        if (g > 0.0 && g < cutoff && g < gamma) {
          gamma = g;
          event = Event::join;
          who = j;
          join_sign = s == 0 ? 1.0 : -1.0;
        }
      }
    }
    for (Index a = 0; a < na; ++a) {
      const Index i = active[static_cast<std::size_t>(a)];
      if (i == last_added || d[a] == 0.0) continue;
      const double g = -xa[a] / d[a];
      if (g > 0.0 && g < cutoff && g <= gamma) {
        if (g == gamma && event != Event::end) path.degenerate = true;
        if (g < gamma || event != Event::drop || i < who) {
          gamma = g;
          event = Event::drop;
          who = i;
        }
      }
    }

    tau -= gamma;
    if (event == Event::end && !target_hit) tau = 0.0;
    x.setZero();
    const Vector xa_new = xa + gamma * d;
    for (Index a = 0; a < na; ++a) x[active[static_cast<std::size_t>(a)]] = xa_new[a];

    last_added = -1;
    last_dropped = -1;
    if (event == Event::drop) {
      x[who] = 0.0;
      active.erase(std::find(active.begin(), active.end(), who));
      in_active[static_cast<std::size_t>(who)] = 0;
      signs[who] = 0.0;
      last_dropped = who;
    } else if (event == Event::join) {
      add(who, join_sign);
      last_added = who;
    }
    path.breakpoints.push_back({tau, x, k * x, active});

    if (event == Event::end) {
      path.complete = !target_hit || tau <= 0.0;
      return finish(target_hit ? tau : 0.0);
    }
    if (active.empty()) {
      // Everything dropped out; restart from the largest correlation.
      c = k.transpose() * (y - k * x);
      Index j0 = 0;
      const double cmax = c.cwiseAbs().maxCoeff(&j0);
      if (cmax <= 1e-15 * tau0) {
        path.complete = true;
        return finish(tau);
      }
      add(j0, c[j0] > 0 ? 1.0 : -1.0);
      last_added = j0;
    }
  }
  throw HomotopyError("homotopy: breakpoint limit reached", path);
}

inline HomotopyResult solve_homotopy(const Problem &p, HomotopyTarget target,
                                     const HomotopyOptions &opts = {}) {
  return solve_homotopy(p.op().materialize(), p.y(), target, opts);
}

/// (τ, ‖x̄‖₁, D, support size) sampled at evenly spaced l1 norms along the
/// path, from x̄ = 0 up to the last breakpoint.
inline std::vector<TradeoffPoint> tradeoff_curve(const HomotopyPath &path, int samples) {
  detail::require(!path.empty(), "tradeoff_curve: empty path");
  detail::require(samples >= 1, "tradeoff_curve: need at least one sample");
  const double l1_end = path.l1_at(path.breakpoints.size() - 1);
  std::vector<TradeoffPoint> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double radius =
        samples == 1 ? 0.0 : l1_end * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double tau = path.tau_at_radius(radius);
    const Vector x = path.solution_at_tau(tau);
    TradeoffPoint pt;
    pt.tau = tau;
    pt.l1_norm = detail::l1_norm(x);
    pt.discrepancy = path.discrepancy_at_tau(tau);
    pt.support_size = static_cast<Index>((x.array() != 0.0).count());
    out.push_back(pt);
  }
  return out;
}

/// The breakpoints themselves as trade-off points.
inline std::vector<TradeoffPoint> tradeoff_breakpoints(const HomotopyPath &path) {
  std::vector<TradeoffPoint> out;
  for (std::size_t k = 0; k < path.breakpoints.size(); ++k) {
    const auto &b = path.breakpoints[k];
    out.push_back({b.tau, path.l1_at(k), (b.kx - path.y).squaredNorm(),
                   static_cast<Index>((b.x.array() != 0.0).count())});
  }
  return out;
}

/// Bisection for the τ with D(x̄(τ)) = target_discrepancy on a computed path.
/// Returns nullopt when the target lies outside [D(x̄(tau_min)), ‖y‖²].
inline std::optional<double> penalty_for_discrepancy(const HomotopyPath &path,
                                                     double target_discrepancy,
                                                     int iterations = 200) {
  detail::require(!path.empty(), "penalty_for_discrepancy: empty path");
  double lo = path.tau_min(), hi = path.tau_max();
  if (path.discrepancy_at_tau(lo) > target_discrepancy ||
      path.discrepancy_at_tau(hi) < target_discrepancy)
    return std::nullopt;
  for (int i = 0; i < iterations && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (path.discrepancy_at_tau(mid) < target_discrepancy)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace l1pg
