#pragma once

// Online regularized multi-output least squares
//
//   min_θ ‖θ − μ‖²_P + Σ_k ‖y_{k+1} − M_k θ‖²_W
//
// kept as sufficient statistics V_t = Σ MᵀWM and b_t = P·μ + Σ MᵀW·y.

#include <optional>

#include "snm/linalg.hpp"

namespace snm {

struct Prior {
  Vector mu;
  SymMatrix p;
  double c_theta = 0.0;

  /// OLS prior: μ = 0, P = 0, c_θ = 0.
  static Prior ols(Eigen::Index n);
};

struct Observation {
  Matrix m;       ///< regressor, m × n
  Vector y_next;  ///< output, m
};

/// Immutable estimator state; update() returns a new value.
class EstimatorState {
 public:
  /// Throws NOT_POSITIVE_DEFINITE (W, or a non-PSD P) and DIMENSION_MISMATCH.
  static EstimatorState init(Prior prior, SymMatrix weight, Eigen::Index m, Eigen::Index n);

  EstimatorState update(const Observation& obs) const;

  /// θ̂_t = (P + V_t)⁻¹·b_t, or std::nullopt while P + V_t is singular.
  std::optional<Vector> estimate() const;

  /// Cholesky factor of P + V_t when it exists.
  std::optional<SpdFactor> regularized_factor() const;

  /// ‖θ★ − θ̂_t‖_{P+V_t}; UNBOUNDED while the estimate is singular.
  ExtendedReal self_normalized_error(const Vector& theta_true) const;

  std::size_t t() const { return t_; }
  Eigen::Index m() const { return m_; }
  Eigen::Index n() const { return n_; }
  const SymMatrix& weight() const { return weight_; }
  const Prior& prior() const { return prior_; }
  const SymMatrix& gram() const { return v_; }
  const Vector& rhs() const { return b_; }
  /// ln det P, absent when P is singular.
  const std::optional<double>& logdet_prior() const { return logdet_p_; }

 private:
  EstimatorState() = default;

  std::size_t t_ = 0;
  Eigen::Index m_ = 0;
  Eigen::Index n_ = 0;
  SymMatrix weight_;
  Prior prior_;
  SymMatrix v_;
  Vector b_;
  std::optional<double> logdet_p_;
};

/// Structure-agnostic OLS for x_{t+1} = Θ·φ_t + w_t:
/// Θ̂_t = (Σ x_{k+1}φ_kᵀ)·Φ_t⁻¹ with Φ_t = Σ φ_kφ_kᵀ.
class LtiEstimator {
 public:
  LtiEstimator(Eigen::Index n_x, Eigen::Index n_phi);

  LtiEstimator update(const Vector& phi, const Vector& x_next) const;

  std::optional<Matrix> estimate() const;

  std::size_t t() const { return t_; }
  const SymMatrix& gram() const { return phi_gram_; }
  const Matrix& cross() const { return cross_; }

 private:
  std::size_t t_ = 0;
  SymMatrix phi_gram_;
  Matrix cross_;
};

}  // namespace snm
