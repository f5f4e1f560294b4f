#pragma once

#include "l1pg/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace l1pg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class OperatorKind { dense, partial_dft, rank_structured, composed, scaled };

inline const char *to_string(OperatorKind kind) {
  switch (kind) {
  case OperatorKind::dense: return "dense";
  case OperatorKind::partial_dft: return "partial-dft";
  case OperatorKind::rank_structured: return "rank-structured";
  case OperatorKind::composed: return "composed";
  case OperatorKind::scaled: return "scaled";
  }
  return "unknown";
}

namespace detail {

inline void require(bool ok, const std::string &what) {
  if (!ok) throw std::invalid_argument(what);
}

struct OperatorImpl {
  virtual ~OperatorImpl() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual OperatorKind kind() const = 0;
  virtual Vector forward(const Vector &x) const = 0;
  virtual Vector adjoint(const Vector &v) const = 0;
};

} // namespace detail

/// Immutable, matrix-free linear map K : R^cols -> R^rows with its adjoint.
/// Copies share the underlying implementation.
class LinearOperator {
public:
  Index rows() const { return impl_->rows(); }
  Index cols() const { return impl_->cols(); }
  OperatorKind kind() const { return impl_->kind(); }

  Vector apply(const Vector &x) const {
    detail::require(x.size() == cols(), "apply: expected vector of length " +
                                            std::to_string(cols()) + ", got " +
                                            std::to_string(x.size()));
    return impl_->forward(x);
  }

  Vector apply_adjoint(const Vector &v) const {
    detail::require(v.size() == rows(), "apply_adjoint: expected vector of length " +
                                            std::to_string(rows()) + ", got " +
                                            std::to_string(v.size()));
    return impl_->adjoint(v);
  }

  /// Dense copy of the operator, one forward application per column.
  Matrix materialize() const {
    Matrix m(rows(), cols());
    Vector e = Vector::Zero(cols());
    for (Index j = 0; j < cols(); ++j) {
      e[j] = 1.0;
      m.col(j) = impl_->forward(e);
      e[j] = 0.0;
    }
    return m;
  }

  static LinearOperator dense(Matrix matrix);
  static LinearOperator identity(Index n) { return dense(Matrix::Identity(n, n)); }
  static LinearOperator zero(Index rows, Index cols) { return dense(Matrix::Zero(rows, cols)); }
  static LinearOperator partial_dft(Index n, std::vector<Index> kept_rows);
  static LinearOperator rank_structured(Index rows, Index cols,
                                        std::vector<double> singular_values,
                                        std::uint64_t seed);
  /// outer ∘ inner
  static LinearOperator compose(LinearOperator outer, LinearOperator inner);
  LinearOperator scaled(double factor) const;

private:
  explicit LinearOperator(std::shared_ptr<const detail::OperatorImpl> impl)
      : impl_(std::move(impl)) {}

  std::shared_ptr<const detail::OperatorImpl> impl_;
};

inline Vector apply(const LinearOperator &op, const Vector &x) { return op.apply(x); }
inline Vector apply_adjoint(const LinearOperator &op, const Vector &v) {
  return op.apply_adjoint(v);
}

namespace detail {

class DenseOperator final : public OperatorImpl {
public:
  explicit DenseOperator(Matrix m) : m_(std::move(m)) {}
  Index rows() const override { return m_.rows(); }
  Index cols() const override { return m_.cols(); }
  OperatorKind kind() const override { return OperatorKind::dense; }
  Vector forward(const Vector &x) const override { return m_ * x; }
  Vector adjoint(const Vector &v) const override { return m_.transpose() * v; }

private:
  Matrix m_;
};

// Rows of the real orthonormal Fourier basis of R^n, in the order
//   0: constant, 2k-1: cos(2 pi k j / n), 2k: sin(2 pi k j / n), and for even
//   n the last row is the alternating (Nyquist) vector.
class PartialDftOperator final : public OperatorImpl {
public:
  PartialDftOperator(Index n, std::vector<Index> kept)
      : n_(n), kept_(std::move(kept)), cos_(n), sin_(n),
        inv_sqrt_n_(1.0 / std::sqrt(static_cast<double>(n))),
        amp_(std::sqrt(2.0 / static_cast<double>(n))) {
    for (Index t = 0; t < n_; ++t) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) /
                           static_cast<double>(n_);
      cos_[t] = std::cos(angle);
      sin_[t] = std::sin(angle);
    }
  }

  Index rows() const override { return static_cast<Index>(kept_.size()); }
  Index cols() const override { return n_; }
  OperatorKind kind() const override { return OperatorKind::partial_dft; }

  Vector forward(const Vector &x) const override {
    Vector out(rows());
    for (Index r = 0; r < rows(); ++r) {
      double acc = 0.0;
      const Index basis_row = kept_[static_cast<std::size_t>(r)];
      for (Index j = 0; j < n_; ++j) acc += entry(basis_row, j) * x[j];
      out[r] = acc;
    }
    return out;
  }

  Vector adjoint(const Vector &v) const override {
    Vector out = Vector::Zero(n_);
    for (Index r = 0; r < rows(); ++r) {
      const Index basis_row = kept_[static_cast<std::size_t>(r)];
      const double vr = v[r];
      for (Index j = 0; j < n_; ++j) out[j] += entry(basis_row, j) * vr;
    }
    return out;
  }

private:
  double entry(Index basis_row, Index j) const {
    if (basis_row == 0) return inv_sqrt_n_;
    if (n_ % 2 == 0 && basis_row == n_ - 1) return (j % 2 == 0) ? inv_sqrt_n_ : -inv_sqrt_n_;
    const Index k = (basis_row + 1) / 2;
    const Index t = (k * j) % n_;
    return (basis_row % 2 == 1) ? amp_ * cos_[t] : amp_ * sin_[t];
  }

  Index n_;
  std::vector<Index> kept_;
  Vector cos_, sin_;
  double inv_sqrt_n_, amp_;
};

// U diag(s) V^T with U, V having orthonormal columns.
class RankStructuredOperator final : public OperatorImpl {
public:
  RankStructuredOperator(Matrix u, Vector s, Matrix v)
      : u_(std::move(u)), s_(std::move(s)), v_(std::move(v)) {}
  Index rows() const override { return u_.rows(); }
  Index cols() const override { return v_.rows(); }
  OperatorKind kind() const override { return OperatorKind::rank_structured; }
  Vector forward(const Vector &x) const override {
    return u_ * (s_.cwiseProduct(v_.transpose() * x));
  }
  Vector adjoint(const Vector &w) const override {
    return v_ * (s_.cwiseProduct(u_.transpose() * w));
  }

private:
  Matrix u_;
  Vector s_;
  Matrix v_;
};

class ComposedOperator final : public OperatorImpl {
public:
  ComposedOperator(LinearOperator outer, LinearOperator inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {}
  Index rows() const override { return outer_.rows(); }
  Index cols() const override { return inner_.cols(); }
  OperatorKind kind() const override { return OperatorKind::composed; }
  Vector forward(const Vector &x) const override { return outer_.apply(inner_.apply(x)); }
  Vector adjoint(const Vector &v) const override {
    return inner_.apply_adjoint(outer_.apply_adjoint(v));
  }

private:
  LinearOperator outer_, inner_;
};

class ScaledOperator final : public OperatorImpl {
public:
  ScaledOperator(LinearOperator base, double factor)
      : base_(std::move(base)), factor_(factor) {}
  Index rows() const override { return base_.rows(); }
  Index cols() const override { return base_.cols(); }
  OperatorKind kind() const override { return OperatorKind::scaled; }
  Vector forward(const Vector &x) const override { return factor_ * base_.apply(x); }
  Vector adjoint(const Vector &v) const override { return factor_ * base_.apply_adjoint(v); }

private:
  LinearOperator base_;
  double factor_;
};

/// Haar-distributed orthonormal columns from a seeded Gaussian matrix.
inline Matrix random_orthonormal_columns(Index rows, Index cols, SplitMix64 &rng) {
  const Matrix g = rng.normal_matrix(rows, cols);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const Matrix r = qr.matrixQR().topLeftCorner(cols, cols);
  for (Index j = 0; j < cols; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

} // namespace detail

inline LinearOperator LinearOperator::dense(Matrix matrix) {
  detail::require(matrix.rows() > 0 && matrix.cols() > 0,
                  "dense operator needs positive dimensions");
  detail::require(matrix.allFinite(), "dense operator has non-finite entries");
  return LinearOperator(std::make_shared<detail::DenseOperator>(std::move(matrix)));
}

inline LinearOperator LinearOperator::partial_dft(Index n, std::vector<Index> kept_rows) {
  detail::require(n > 0, "partial-dft needs n > 0");
  detail::require(!kept_rows.empty(), "partial-dft needs a non-empty row set");
  for (Index r : kept_rows)
    detail::require(r >= 0 && r < n, "partial-dft row index out of range");
  std::vector<Index> sorted = kept_rows;
  std::sort(sorted.begin(), sorted.end());
  detail::require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                  "partial-dft row indices must be distinct");
  return LinearOperator(
      std::make_shared<detail::PartialDftOperator>(n, std::move(kept_rows)));
}

inline LinearOperator LinearOperator::rank_structured(Index rows, Index cols,
                                                      std::vector<double> singular_values,
                                                      std::uint64_t seed) {
  detail::require(rows > 0 && cols > 0, "rank-structured operator needs positive dimensions");
  const auto k = static_cast<Index>(singular_values.size());
  detail::require(k > 0 && k <= std::min(rows, cols),
                  "rank-structured operator needs 1..min(rows, cols) singular values");
  for (double s : singular_values)
    detail::require(std::isfinite(s) && s >= 0.0, "singular values must be finite and >= 0");
  SplitMix64 rng(seed);
  Matrix u = detail::random_orthonormal_columns(rows, k, rng);
  Matrix v = detail::random_orthonormal_columns(cols, k, rng);
  Vector s = Eigen::Map<const Vector>(singular_values.data(), k);
  return LinearOperator(std::make_shared<detail::RankStructuredOperator>(
      std::move(u), std::move(s), std::move(v)));
}

inline LinearOperator LinearOperator::compose(LinearOperator outer, LinearOperator inner) {
  detail::require(outer.cols() == inner.rows(), "compose: inner rows must equal outer cols");
  return LinearOperator(
      std::make_shared<detail::ComposedOperator>(std::move(outer), std::move(inner)));
}

inline LinearOperator LinearOperator::scaled(double factor) const {
  detail::require(std::isfinite(factor), "scale factor must be finite");
  return LinearOperator(std::make_shared<detail::ScaledOperator>(*this, factor));
}

// ---------------------------------------------------------------------------
// Operator specs

struct OperatorSpec;

struct DenseSpec {
  Matrix matrix;
};
struct PartialDftSpec {
  Index n = 0;
  std::vector<Index> kept_rows;
};
struct RankStructuredSpec {
  Index rows = 0, cols = 0;
  std::vector<double> singular_values;
  std::uint64_t seed = 0;
};
struct ComposedSpec {
  std::shared_ptr<const OperatorSpec> outer, inner;
};
struct ScaledSpec {
  double factor = 1.0;
  std::shared_ptr<const OperatorSpec> base;
};

struct OperatorSpec {
  std::variant<DenseSpec, PartialDftSpec, RankStructuredSpec, ComposedSpec, ScaledSpec> value;
};

inline LinearOperator build_operator(const OperatorSpec &spec) {
  return std::visit(
      [](const auto &s) -> LinearOperator {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseSpec>) {
          return LinearOperator::dense(s.matrix);
        } else if constexpr (std::is_same_v<T, PartialDftSpec>) {
          return LinearOperator::partial_dft(s.n, s.kept_rows);
        } else if constexpr (std::is_same_v<T, RankStructuredSpec>) {
          return LinearOperator::rank_structured(s.rows, s.cols, s.singular_values, s.seed);
        } else if constexpr (std::is_same_v<T, ComposedSpec>) {
          detail::require(s.outer && s.inner, "composed spec needs both operands");
          return LinearOperator::compose(build_operator(*s.outer), build_operator(*s.inner));
        } else {
          detail::require(static_cast<bool>(s.base), "scaled spec needs a base operator");
          return build_operator(*s.base).scaled(s.factor);
        }
      },
      spec.value);
}

// ---------------------------------------------------------------------------
// Spectral norm and rescaling

struct SpectralNormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false; ///< false: value is an estimate that hit max_iter
};

/// Power iteration on K*K from a seeded random start. Stops once the relative
/// change of the estimate drops below tol / 10.
inline SpectralNormEstimate estimate_spectral_norm(const LinearOperator &op,
                                                   double tol = 1e-6,
                                                   int max_iter = 10000,
                                                   std::uint64_t seed = 0x5eed) {
  detail::require(tol > 0.0, "estimate_spectral_norm: tol must be positive");
  detail::require(max_iter > 0, "estimate_spectral_norm: max_iter must be positive");
  SplitMix64 rng(seed);
  Vector v = rng.normal_vector(op.cols());
  v.normalize();

  SpectralNormEstimate est;
  double previous = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector kv = op.apply(v);
    const double sigma = kv.norm();
    est.value = sigma;
    est.iterations = it;
    if (sigma == 0.0) {
      est.converged = true;
      return est;
    }
    if (it > 1 && std::abs(sigma - previous) <= 0.1 * tol * sigma) {
      est.converged = true;
      return est;
    }
    previous = sigma;
    Vector w = op.apply_adjoint(kv);
    const double wn = w.norm();
    if (wn == 0.0) {
      est.converged = true;
      return est;
    }
    v = w / wn;
  }
  return est;
}

/// A linear inverse problem K x ≈ y with ‖K*K‖ ≤ norm_bound ≤ 1.
///
/// norm_bound = 1 is reserved for operators with orthonormal rows (see
/// orthonormal_rows); everything else is rescaled below 1.
class Problem {
public:
  Problem(LinearOperator op, Vector y, double norm_bound, double scale_applied = 1.0)
      : op_(std::move(op)), y_(std::move(y)), norm_bound_(norm_bound),
        scale_applied_(scale_applied) {
    detail::require(y_.size() == op_.rows(), "problem: data length must equal operator rows");
    detail::require(norm_bound_ > 0.0 && norm_bound_ <= 1.0,
                    "problem: norm bound must lie in (0, 1]");
    detail::require(y_.allFinite(), "problem: data must be finite");
  }

  /// Unscaled problem for K with KK* = I, checked on seeded random probes.
  static Problem orthonormal_rows(LinearOperator op, Vector y, int probes = 8,
                                  double tol = 1e-10, std::uint64_t seed = 0x0a7e) {
    SplitMix64 rng(seed);
    for (int i = 0; i < probes; ++i) {
      const Vector v = rng.normal_vector(op.rows());
      const double err = (op.apply(op.apply_adjoint(v)) - v).norm();
      detail::require(err <= tol * v.norm(), "problem: operator rows are not orthonormal");
    }
    return Problem(std::move(op), std::move(y), 1.0);
  }

  const LinearOperator &op() const { return op_; }
  const Vector &y() const { return y_; }
  double norm_bound() const { return norm_bound_; }
  double scale_applied() const { return scale_applied_; }
  Index rows() const { return op_.rows(); }
  Index cols() const { return op_.cols(); }

  /// D(x) = ‖Kx − y‖²
  double discrepancy(const Vector &x) const { return (op_.apply(x) - y_).squaredNorm(); }
  /// K*(y − Kx)
  Vector residual_correlation(const Vector &x) const {
    return op_.apply_adjoint(y_ - op_.apply(x));
  }

private:
  LinearOperator op_;
  Vector y_;
  double norm_bound_;
  double scale_applied_;
};

/// Scales K and y jointly by target/‖K‖ when ‖K‖ exceeds target, so that the
/// returned problem certifies ‖K*K‖ ≤ target².
inline Problem rescale_problem(const LinearOperator &op, const Vector &y,
                               double target = 0.999, double tol = 1e-6,
                               int max_iter = 10000) {
  detail::require(target > 0.0 && target < 1.0, "rescale_problem: target must lie in (0, 1)");
  detail::require(y.size() == op.rows(), "rescale_problem: data length must equal operator rows");
  const SpectralNormEstimate est = estimate_spectral_norm(op, tol, max_iter);
  detail::require(est.value > 0.0, "rescale_problem: operator is zero");
  if (est.value <= target) return Problem(op, y, target * target, 1.0);
  const double s = target / est.value;
  return Problem(op.scaled(s), s * y, target * target, s);
}

// ---------------------------------------------------------------------------
// Plain-text I/O

/// First line "rows cols", then rows*cols row-major decimals.
inline Matrix read_matrix(std::istream &in) {
  Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0)
    throw std::invalid_argument("matrix file: bad header, expected 'rows cols'");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j)))
        throw std::invalid_argument("matrix file: expected " + std::to_string(rows * cols) +
                                    " entries");
  return m;
}

inline Matrix read_matrix_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  return read_matrix(in);
}

/// Whitespace-separated decimals.
inline Vector read_vector(std::istream &in) {
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  if (!in.eof()) throw std::invalid_argument("vector file: non-numeric token");
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

inline Vector read_vector_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vector file: " + path);
  return read_vector(in);
}

} // namespace l1pg
