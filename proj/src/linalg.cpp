#include "snm/linalg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace snm {

std::string ExtendedReal::to_string() const {
  if (unbounded_) return "inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value_);
  return std::string(buf, res.ptr);
}

ExtendedReal ExtendedReal::sqrt() const {
  if (unbounded_) return unbounded();
  return ExtendedReal(std::sqrt(value_));
}

ExtendedReal operator*(const ExtendedReal& a, const ExtendedReal& b) {
  if (a.is_finite() && b.is_finite()) return ExtendedReal(a.value_ * b.value_);
  if ((a.is_finite() && a.value_ == 0.0) || (b.is_finite() && b.value_ == 0.0)) {
    return ExtendedReal(0.0);
  }
  return ExtendedReal::unbounded();
}

SymMatrix::SymMatrix(const Matrix& entries) {
  require_dims(entries.rows() == entries.cols(), "SymMatrix requires a square matrix");
  const Eigen::Index n = entries.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double a = entries(i, j);
      const double b = entries(j, i);
      if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
        throw Error(ErrorCode::NotSymmetric, "entries (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ") differ");
      }
    }
  }
  entries_ = 0.5 * (entries + entries.transpose());
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  require_dims(a.dim() == b.dim(), "SymMatrix sum");
  return SymMatrix(a.entries_ + b.entries_, SymMatrix::Trusted{});
}

SymMatrix operator*(double s, const SymMatrix& a) {
  return SymMatrix(s * a.entries_, SymMatrix::Trusted{});
}

Vector SpdFactor::solve_lower(const Vector& x) const {
  require_dims(x.size() == dim(), "solve_lower");
  return lower_.triangularView<Eigen::Lower>().solve(x);
}

Vector SpdFactor::solve(const Vector& x) const {
  Vector z = solve_lower(x);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(z);
}

Matrix SpdFactor::solve(const Matrix& x) const {
  require_dims(x.rows() == dim(), "solve");
  Matrix z = lower_.triangularView<Eigen::Lower>().solve(x);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(z);
}

std::optional<SpdFactor> try_cholesky(const SymMatrix& a) {
  const Eigen::Index n = a.dim();
  if (n == 0) return std::nullopt;
  const double threshold = kPivotRelTol * a.trace() / static_cast<double>(n);
  const Matrix& src = a.matrix();

  SpdFactor f;
  f.lower_ = Matrix::Zero(n, n);
  Matrix& l = f.lower_;
  double log_det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = src(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > threshold) || !(pivot > 0.0)) return std::nullopt;
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    log_det += 2.0 * std::log(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (src(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / d;
    }
  }
  f.log_det_ = log_det;
  return f;
}

SpdFactor cholesky(const SymMatrix& a) {
  auto f = try_cholesky(a);
  if (!f) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "matrix of dimension " + std::to_string(a.dim()) + " is not positive definite");
  }
  return *std::move(f);
}

bool is_positive_semidefinite(const SymMatrix& a) {
  if (a.dim() == 0) return false;
  if (a.matrix().isZero(0.0)) return true;
  const double eps = 1e-12 * a.trace();
  if (!(eps > 0.0)) return false;
  return is_positive_definite(a + eps * SymMatrix::identity(a.dim()));
}

double weighted_sq_norm(const Vector& x, const SymMatrix& a) {
  require_dims(x.size() == a.dim(), "weighted_sq_norm");
  return x.dot(a.matrix() * x);
}

double inv_weighted_sq_norm(const Vector& x, const SpdFactor& f) {
  require_dims(x.size() == f.dim(), "inv_weighted_sq_norm");
  return f.solve_lower(x).squaredNorm();
}

double logdet_ratio(const SymMatrix& p, const SymMatrix& v) {
  require_dims(p.dim() == v.dim(), "logdet_ratio");
  const SpdFactor fp = cholesky(p);
  const SpdFactor fpv = cholesky(p + v);
  return std::max(0.0, fpv.log_det() - fp.log_det());
}

ExtendedReal gen_spectral_radius(const SymMatrix& v, const SymMatrix& vbar) {
  require_dims(v.dim() == vbar.dim(), "gen_spectral_radius");
  (void)cholesky(vbar);
  const auto fv = try_cholesky(v);
  if (!fv) return ExtendedReal::unbounded();
  const auto& l = fv->lower_factor();
  // C = L⁻¹·V̄·L⁻ᵀ shares its spectrum with V⁻¹·V̄.
  Matrix half = l.triangularView<Eigen::Lower>().solve(vbar.matrix());
  Matrix c = l.triangularView<Eigen::Lower>().solve(half.transpose());
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c, Eigen::EigenvaluesOnly);
  return ExtendedReal(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

double whitened_op_norm(const Matrix& m, const SpdFactor& f) {
  require_dims(m.cols() == f.dim(), "whitened_op_norm");
  if (m.rows() == 0) return 0.0;
  // (M·L⁻ᵀ)ᵀ = L⁻¹·Mᵀ
  Matrix xt = f.lower_factor().triangularView<Eigen::Lower>().solve(m.transpose());
  Eigen::JacobiSVD<Matrix> svd(xt);
  return svd.singularValues()(0);
}

Matrix kron_regressor(const Vector& phi, Eigen::Index n_x) {
  if (n_x < 1) throw Error(ErrorCode::ParamOutOfRange, "kron_regressor requires n_x >= 1");
  const Eigen::Index p = phi.size();
  Matrix m = Matrix::Zero(n_x, n_x * p);
  for (Eigen::Index i = 0; i < n_x; ++i) m.block(i, i * p, 1, p) = phi.transpose();
  return m;
}

SymMatrix kron_identity(Eigen::Index n_x, const SymMatrix& phi) {
  const Eigen::Index p = phi.dim();
  Matrix k = Matrix::Zero(n_x * p, n_x * p);
  for (Eigen::Index i = 0; i < n_x; ++i) k.block(i * p, i * p, p, p) = phi.matrix();
  return SymMatrix(k);
}

Vector vec_rows(const Matrix& theta) {
  Vector v(theta.size());
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    v.segment(i * theta.cols(), theta.cols()) = theta.row(i).transpose();
  }
  return v;
}

Matrix unvec_rows(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  require_dims(v.size() == rows * cols, "unvec_rows");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) m.row(i) = v.segment(i * cols, cols).transpose();
  return m;
}

}  // namespace snm
