#pragma once

// Confidence radii for ‖θ★ − θ̂_t‖_{P+V_t}. All functions are pure in the
// estimator statistics; none of them look at the data stream.

#include <string_view>

#include "snm/linalg.hpp"

namespace snm {

/// Noise proxy scale, prior radius and confidence level.
struct BoundParams {
  double c_w = 1.0;
  double c_theta = 0.0;
  double delta = 0.05;

  /// Throws PARAM_OUT_OF_RANGE unless c_w > 0, c_θ >= 0 and 0 < δ < 1.
  void validate() const;
};

/// Persistent-excitation inputs of the pointwise OLS bound. ε = 0 and δ′ = 0 are
/// admitted for deterministic regressors; δ′ is carried for the caller's union
/// bound and does not enter the radius.
struct PointwiseParams {
  double epsilon = 0.0;
  double delta_prime = 0.0;
  SymMatrix expected_gram;

  void validate() const;
};

enum class BoundMethod { Thm2, Thm3, ExistingEq25, Pointwise, Subgaussian, LtiFrobenius, LtiOperator };

constexpr std::string_view to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::Thm2: return "THM2";
    case BoundMethod::Thm3: return "THM3";
    case BoundMethod::ExistingEq25: return "EXISTING_EQ25";
    case BoundMethod::Pointwise: return "POINTWISE";
    case BoundMethod::Subgaussian: return "SUBGAUSSIAN";
    case BoundMethod::LtiFrobenius: return "LTI_FR";
    case BoundMethod::LtiOperator: return "LTI_OP";
  }
  return "UNKNOWN";
}

struct Radius {
  ExtendedReal value;
  BoundMethod method;
};

/// Joint treatment of the regularization bias, P ≻ 0:
///   √(c_θ² + c_w²·ln det(I + P⁻¹V) + 2c_w²·ln(1/δ)).
Radius beta_thm2(const BoundParams& params, const SymMatrix& p, const SymMatrix& v);

/// Valid for any PSD P (including OLS), given V̄ ≻ 0:
///   √(1 + ρ(V⁻¹V̄)) · √(c_θ² + c_w²·ln det(I + V̄⁻¹V) + 2c_w²·ln(1/δ)),
/// UNBOUNDED while V is singular.
Radius beta_thm3(const BoundParams& params, const SymMatrix& p, const SymMatrix& v,
                 const SymMatrix& vbar);

/// Scalar-output baseline that adds the bias by the triangle inequality:
///   c_θ + c_w·√(ln det(I + P⁻¹V) + 2·ln(1/δ)).
Radius beta_existing_eq25(const BoundParams& params, const SymMatrix& p, const SymMatrix& v);

/// Pointwise OLS radius c_w·√(2n·ln(2/(1−ε)) + 4·ln(1/δ)).
Radius beta_pointwise(const BoundParams& params, const PointwiseParams& pw, Eigen::Index n_theta);

/// Squared-norm threshold 2n·ln 2 + 4·ln(1/δ) for ‖v‖²_{R⁻¹}, v subgaussian with proxy R.
double subgaussian_bound(Eigen::Index n_theta, double delta);

/// Frobenius-norm LTI radius for ‖(Θ★ − Θ̂_t)Φ_t^{1/2}‖_Fr:
///   c_w·√(1 + ρ(Φ⁻¹Φ̄))·√(n_x·ln det(I + Φ̄⁻¹Φ) + 2·ln(1/δ)).
Radius beta_lti_frobenius(const BoundParams& params, Eigen::Index n_x, const SymMatrix& phi,
                          const SymMatrix& phibar);

/// Operator-norm LTI radius from a covering argument:
///   2c_w·√(1 + ρ(Φ⁻¹Φ̄))·√(ln det(I + Φ̄⁻¹Φ) + 2n_x·ln 5 + 2·ln(1/δ)).
Radius beta_lti_operator(const BoundParams& params, Eigen::Index n_x, const SymMatrix& phi,
                         const SymMatrix& phibar);

/// β·σ_t(M) with σ_t(M) = ‖M(P+V_t)^{-1/2}‖_op; `f` factors P + V_t.
ExtendedReal output_radius(const Matrix& m, const SpdFactor& f, const Radius& beta);

}  // namespace snm
