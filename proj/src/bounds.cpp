#include "snm/bounds.hpp"

#include <cmath>
#include <numbers>

namespace snm {
namespace {

void require_range(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ParamOutOfRange, what);
}

double log_inv_delta(double delta) { return -std::log(delta); }

/// √(1 + ρ(V⁻¹V̄)), UNBOUNDED when V is singular.
ExtendedReal inflation(const SymMatrix& v, const SymMatrix& vbar) {
  const ExtendedReal rho = gen_spectral_radius(v, vbar);
  if (rho.is_unbounded()) return rho;
  return ExtendedReal(std::sqrt(1.0 + rho.value()));
}

}  // namespace

void BoundParams::validate() const {
  require_range(c_w > 0.0 && std::isfinite(c_w), "c_w must be positive");
  require_range(c_theta >= 0.0 && std::isfinite(c_theta), "c_theta must be nonnegative");
  require_range(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
}

void PointwiseParams::validate() const {
  require_range(epsilon >= 0.0 && epsilon < 1.0, "epsilon must lie in [0, 1)");
  require_range(delta_prime >= 0.0 && delta_prime < 1.0, "delta_prime must lie in [0, 1)");
  if (!is_positive_definite(expected_gram)) {
    throw Error(ErrorCode::NotPositiveDefinite, "expected Gram matrix must be positive definite");
  }
}

Radius beta_thm2(const BoundParams& params, const SymMatrix& p, const SymMatrix& v) {
  params.validate();
  const double ld = logdet_ratio(p, v);
  const double cw2 = params.c_w * params.c_w;
  const double sq = params.c_theta * params.c_theta + cw2 * ld +
                    2.0 * cw2 * log_inv_delta(params.delta);
  return {ExtendedReal(std::sqrt(sq)), BoundMethod::Thm2};
}

Radius beta_thm3(const BoundParams& params, const SymMatrix& p, const SymMatrix& v,
                 const SymMatrix& vbar) {
  params.validate();
  require_dims(p.dim() == v.dim() && v.dim() == vbar.dim(), "beta_thm3 dimensions");
  if (!is_positive_semidefinite(p)) {
    throw Error(ErrorCode::NotPositiveDefinite, "prior P must be positive semidefinite");
  }
  const ExtendedReal factor = inflation(v, vbar);
  if (factor.is_unbounded()) return {factor, BoundMethod::Thm3};
  const double ld = logdet_ratio(vbar, v);
  const double cw2 = params.c_w * params.c_w;
  const double sq = params.c_theta * params.c_theta + cw2 * ld +
                    2.0 * cw2 * log_inv_delta(params.delta);
  return {ExtendedReal(factor.value() * std::sqrt(sq)), BoundMethod::Thm3};
}

Radius beta_existing_eq25(const BoundParams& params, const SymMatrix& p, const SymMatrix& v) {
  params.validate();
  const double ld = logdet_ratio(p, v);
  const double r = params.c_theta + params.c_w * std::sqrt(ld + 2.0 * log_inv_delta(params.delta));
  return {ExtendedReal(r), BoundMethod::ExistingEq25};
}

Radius beta_pointwise(const BoundParams& params, const PointwiseParams& pw, Eigen::Index n_theta) {
  params.validate();
  pw.validate();
  require_range(n_theta >= 1, "n_theta must be >= 1");
  const double n = static_cast<double>(n_theta);
  const double sq =
      2.0 * n * std::log(2.0 / (1.0 - pw.epsilon)) + 4.0 * log_inv_delta(params.delta);
  return {ExtendedReal(params.c_w * std::sqrt(sq)), BoundMethod::Pointwise};
}

double subgaussian_bound(Eigen::Index n_theta, double delta) {
  require_range(n_theta >= 1, "n_theta must be >= 1");
  require_range(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  return 2.0 * static_cast<double>(n_theta) * std::numbers::ln2 + 4.0 * log_inv_delta(delta);
}

Radius beta_lti_frobenius(const BoundParams& params, Eigen::Index n_x, const SymMatrix& phi,
                          const SymMatrix& phibar) {
  params.validate();
  require_range(n_x >= 1, "n_x must be >= 1");
  const ExtendedReal factor = inflation(phi, phibar);
  if (factor.is_unbounded()) return {factor, BoundMethod::LtiFrobenius};
  const double ld = logdet_ratio(phibar, phi);
  const double sq = static_cast<double>(n_x) * ld + 2.0 * log_inv_delta(params.delta);
  return {ExtendedReal(params.c_w * factor.value() * std::sqrt(sq)), BoundMethod::LtiFrobenius};
}

Radius beta_lti_operator(const BoundParams& params, Eigen::Index n_x, const SymMatrix& phi,
                         const SymMatrix& phibar) {
  params.validate();
  require_range(n_x >= 1, "n_x must be >= 1");
  const ExtendedReal factor = inflation(phi, phibar);
  if (factor.is_unbounded()) return {factor, BoundMethod::LtiOperator};
  const double ld = logdet_ratio(phibar, phi);
  const double sq = ld + 2.0 * static_cast<double>(n_x) * std::log(5.0) +
                    2.0 * log_inv_delta(params.delta);
  return {ExtendedReal(2.0 * params.c_w * factor.value() * std::sqrt(sq)),
          BoundMethod::LtiOperator};
}

ExtendedReal output_radius(const Matrix& m, const SpdFactor& f, const Radius& beta) {
  return beta.value * ExtendedReal(whitened_op_norm(m, f));
}

}  // namespace snm
