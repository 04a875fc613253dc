#include "snm/estimator.hpp"

#include <cmath>

namespace snm {

Prior Prior::ols(Eigen::Index n) { return {Vector::Zero(n), SymMatrix::zero(n), 0.0}; }

EstimatorState EstimatorState::init(Prior prior, SymMatrix weight, Eigen::Index m,
                                    Eigen::Index n) {
  require_dims(m >= 1 && n >= 1, "estimator dimensions must be positive");
  require_dims(weight.dim() == m, "weight must be m x m");
  require_dims(prior.mu.size() == n && prior.p.dim() == n, "prior must have dimension n");
  if (!is_positive_definite(weight)) {
    throw Error(ErrorCode::NotPositiveDefinite, "weight W must be positive definite");
  }
  if (!is_positive_semidefinite(prior.p)) {
    throw Error(ErrorCode::NotPositiveDefinite, "prior P must be positive semidefinite");
  }
  if (!(prior.c_theta >= 0.0)) {
    throw Error(ErrorCode::ParamOutOfRange, "c_theta must be nonnegative");
  }

  EstimatorState s;
  s.m_ = m;
  s.n_ = n;
  s.weight_ = std::move(weight);
  s.v_ = SymMatrix::zero(n);
  s.b_ = prior.p.matrix() * prior.mu;
  if (auto f = try_cholesky(prior.p)) s.logdet_p_ = f->log_det();
  s.prior_ = std::move(prior);
  return s;
}

EstimatorState EstimatorState::update(const Observation& obs) const {
  require_dims(obs.m.rows() == m_ && obs.m.cols() == n_, "regressor must be m x n");
  require_dims(obs.y_next.size() == m_, "output must have dimension m");
  EstimatorState next = *this;
  const Matrix wm = weight_.matrix() * obs.m;
  const Matrix gain = obs.m.transpose() * wm;
  next.v_ = v_ + SymMatrix(0.5 * (gain + gain.transpose()));
  next.b_ = b_ + wm.transpose() * obs.y_next;
  next.t_ = t_ + 1;
  return next;
}

std::optional<SpdFactor> EstimatorState::regularized_factor() const {
  return try_cholesky(prior_.p + v_);
}

std::optional<Vector> EstimatorState::estimate() const {
  const auto f = regularized_factor();
  if (!f) return std::nullopt;
  return f->solve(b_);
}

ExtendedReal EstimatorState::self_normalized_error(const Vector& theta_true) const {
  require_dims(theta_true.size() == n_, "theta_true must have dimension n");
  const auto theta_hat = estimate();
  if (!theta_hat) return ExtendedReal::unbounded();
  const double sq = weighted_sq_norm(theta_true - *theta_hat, prior_.p + v_);
  return ExtendedReal(std::sqrt(std::max(0.0, sq)));
}

LtiEstimator::LtiEstimator(Eigen::Index n_x, Eigen::Index n_phi)
    : phi_gram_(SymMatrix::zero(n_phi)), cross_(Matrix::Zero(n_x, n_phi)) {}

LtiEstimator LtiEstimator::update(const Vector& phi, const Vector& x_next) const {
  require_dims(phi.size() == cross_.cols() && x_next.size() == cross_.rows(),
               "LTI update dimensions");
  LtiEstimator next = *this;
  next.phi_gram_ = phi_gram_ + SymMatrix(phi * phi.transpose());
  next.cross_ = cross_ + x_next * phi.transpose();
  next.t_ = t_ + 1;
  return next;
}

std::optional<Matrix> LtiEstimator::estimate() const {
  const auto f = try_cholesky(phi_gram_);
  if (!f) return std::nullopt;
  // Φ·Θ̂ᵀ = crossᵀ
  return f->solve(Matrix(cross_.transpose())).transpose();
}

}  // namespace snm
