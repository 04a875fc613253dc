#pragma once

// Small dense SPD linear algebra shared by the estimator, the bounds and the
// verification oracles. Everything here is a pure function of its inputs.

#include <compare>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "snm/error.hpp"

namespace snm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Pivot threshold of the positive-definiteness test, relative to trace/dim.
inline constexpr double kPivotRelTol = 1e-12;

/// Nonnegative real or the distinguished value UNBOUNDED.
///
/// Arithmetic saturates: UNBOUNDED times a positive finite value stays
/// UNBOUNDED. UNBOUNDED times exactly zero is zero (a zero direction carries
/// no uncertainty).
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr explicit ExtendedReal(double v) : value_(v) {}

  static constexpr ExtendedReal unbounded() {
    ExtendedReal r;
    r.unbounded_ = true;
    return r;
  }

  constexpr bool is_finite() const { return !unbounded_; }
  constexpr bool is_unbounded() const { return unbounded_; }

  /// Finite value; throws on UNBOUNDED.
  double value() const {
    if (unbounded_) throw Error(ErrorCode::ParamOutOfRange, "value() on UNBOUNDED");
    return value_;
  }

  /// Finite value or +infinity.
  constexpr double to_double() const {
    return unbounded_ ? std::numeric_limits<double>::infinity() : value_;
  }

  /// Shortest round-trip decimal, or "inf".
  std::string to_string() const;

  ExtendedReal sqrt() const;

  friend ExtendedReal operator*(const ExtendedReal& a, const ExtendedReal& b);
  friend ExtendedReal operator*(const ExtendedReal& a, double b) { return a * ExtendedReal(b); }
  friend ExtendedReal operator*(double a, const ExtendedReal& b) { return ExtendedReal(a) * b; }
  friend ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.unbounded_ || b.unbounded_) return unbounded();
    return ExtendedReal(a.value_ + b.value_);
  }

  friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.unbounded_ == b.unbounded_ && (a.unbounded_ || a.value_ == b.value_);
  }
  friend constexpr std::partial_ordering operator<=>(const ExtendedReal& a,
                                                     const ExtendedReal& b) {
    return a.to_double() <=> b.to_double();
  }

 private:
  double value_ = 0.0;
  bool unbounded_ = false;
};

/// Dense symmetric matrix. Construction checks symmetry and stores the exact
/// symmetric part so downstream code never sees round-off asymmetry.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& entries);

  static SymMatrix zero(Eigen::Index dim) { return SymMatrix(Matrix::Zero(dim, dim)); }
  static SymMatrix identity(Eigen::Index dim) { return SymMatrix(Matrix::Identity(dim, dim)); }
  static SymMatrix diagonal(const Vector& diag) { return SymMatrix(Matrix(diag.asDiagonal())); }

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  double trace() const { return entries_.trace(); }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator*(double s, const SymMatrix& a);

 private:
  struct Trusted {};
  SymMatrix(Matrix entries, Trusted) : entries_(std::move(entries)) {}

  Matrix entries_;
};

/// Cholesky factor A = L·Lᵀ together with ln det A.
class SpdFactor {
 public:
  Eigen::Index dim() const { return lower_.rows(); }
  const Matrix& lower_factor() const { return lower_; }
  double log_det() const { return log_det_; }

  /// L⁻¹·x.
  Vector solve_lower(const Vector& x) const;
  /// A⁻¹·x via forward and back substitution.
  Vector solve(const Vector& x) const;
  /// A⁻¹·X column-wise.
  Matrix solve(const Matrix& x) const;

 private:
  friend std::optional<SpdFactor> try_cholesky(const SymMatrix& a);
  Matrix lower_;
  double log_det_ = 0.0;
};

/// Cholesky factorization; std::nullopt when some pivot is ≤ kPivotRelTol·trace/dim.
std::optional<SpdFactor> try_cholesky(const SymMatrix& a);

/// Throwing variant of try_cholesky (NOT_POSITIVE_DEFINITE).
SpdFactor cholesky(const SymMatrix& a);

inline bool is_positive_definite(const SymMatrix& a) { return try_cholesky(a).has_value(); }

/// PSD test: A + ε·I is positive definite for ε = 1e-12·trace(A). The zero
/// matrix is PSD.
bool is_positive_semidefinite(const SymMatrix& a);

/// xᵀ·A·x.
double weighted_sq_norm(const Vector& x, const SymMatrix& a);

/// xᵀ·A⁻¹·x where `f` factors A; one triangular solve, no explicit inverse.
double inv_weighted_sq_norm(const Vector& x, const SpdFactor& f);

/// ln det(I + P⁻¹·V) = ln det(P + V) − ln det(P). P must be PD, V PSD.
double logdet_ratio(const SymMatrix& p, const SymMatrix& v);

/// Largest eigenvalue of V⁻¹·V̄, UNBOUNDED when V is not positive definite.
/// Throws NOT_POSITIVE_DEFINITE when V̄ is not.
ExtendedReal gen_spectral_radius(const SymMatrix& v, const SymMatrix& vbar);

/// ‖M·A^{-1/2}‖_op where `f` factors A, computed as σ_max(M·L⁻ᵀ).
double whitened_op_norm(const Matrix& m, const SpdFactor& f);

/// I_{n_x} ⊗ φᵀ, so that kron_regressor(φ, n_x)·vec(Θ) = Θ·φ with row-stacking vec.
Matrix kron_regressor(const Vector& phi, Eigen::Index n_x);

/// I_{n_x} ⊗ Φ.
SymMatrix kron_identity(Eigen::Index n_x, const SymMatrix& phi);

/// Row-major stacking of a matrix into a vector.
Vector vec_rows(const Matrix& theta);
/// Inverse of vec_rows.
Matrix unvec_rows(const Vector& v, Eigen::Index rows, Eigen::Index cols);

}  // namespace snm
