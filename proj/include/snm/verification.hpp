#pragma once

// Empirical oracles for the probabilistic statements behind the radii:
// the subgaussian concentration inequality, the supermartingale maximal
// inequality, the self-normalized martingale bound and the subgaussian
// norm threshold, plus a quadrature check of the Gaussian integral identity.
//
// Gaussian noise is the canonical subgaussian instance throughout (proxy =
// covariance). Coverage checks pass when the violation rate is at most
// δ + 3·√(δ(1−δ)/n_runs).

#include <string>
#include <vector>

#include <json.hpp>

#include "snm/linalg.hpp"
#include "snm/rng.hpp"

namespace snm {

struct CoverageResult {
  std::size_t n_runs = 0;
  std::size_t n_violations = 0;
  double delta = 0.0;
  double slack = 0.0;

  static CoverageResult from_counts(std::size_t n_runs, std::size_t n_violations, double delta);

  double rate() const { return n_runs ? static_cast<double>(n_violations) / n_runs : 0.0; }
  bool pass() const { return rate() <= delta + slack; }
};

/// Three binomial standard errors at level δ.
double binomial_slack(double delta, std::size_t n_runs);

struct Lemma1Result {
  double lhs_estimate = 0.0;
  double rhs = 0.0;
  double std_error = 0.0;  ///< standard error of lhs_estimate
  bool finite_variance = true;  ///< R ≺ H; otherwise the estimator has infinite variance
  bool pass = false;
};

/// Monte Carlo estimate of E[exp(½‖x+v‖²_{(H+R)⁻¹})]/√det(H+R) for v ~ N(0, R)
/// against exp(½‖x‖²_{H⁻¹})/√det(H). For Gaussian v both sides agree in
/// expectation, so the pass tolerance is statistical: lhs ≤ rhs·(1 + 3·se/mean).
Lemma1Result mc_check_lemma1(const SymMatrix& h, const SymMatrix& r, const Vector& x,
                             std::size_t n_samples, RngStream rng);

struct QuadratureResult {
  double numeric = 0.0;
  double closed_form = 0.0;
  double rel_error() const;
};

/// ∫ exp(−½‖u‖²_{Σ⁻¹} + uᵀb) du by adaptive Gauss-Kronrod over a ±12σ box,
/// against √((2π)ⁿ det Σ)·exp(½‖b‖²_Σ). Dimension 1 or 2.
QuadratureResult quadrature_check_gaussian_integral(const SymMatrix& sigma, const Vector& b);

enum class SupermartingaleProcess {
  ExpRandomWalk,  ///< q_t = exp(Σ_{k<t} g_k − t/2), g_k ~ N(0,1)
  Constant,       ///< q_t = 1
  Decreasing,     ///< q_t = 1/(1+t)
};

/// Counts runs in which some q_t exceeds E[q_0]/δ (E[q_0] = 1 for all processes).
CoverageResult mc_check_lemma2(std::size_t n_runs, std::size_t horizon, double delta,
                               RngStream rng,
                               SupermartingaleProcess process = SupermartingaleProcess::ExpRandomWalk,
                               unsigned workers = 1);

enum class RegressorPlan {
  DeterministicFixed,  ///< M_t taken from a fixed list (cycled)
  StateFeedback,       ///< M_t = base + gain·x_t·𝟙ᵀ with x_{t+1} = 0.9·x_t + w_t
};

struct SnmTestCase {
  Vector shift_z;
  SymMatrix pbar;
  double noise_proxy_scale = 1.0;  ///< c_w; noise is N(0, c_w²·W⁻¹)
  std::size_t horizon = 20;
  SymMatrix weight;
  RegressorPlan plan = RegressorPlan::DeterministicFixed;
  std::vector<Matrix> fixed_regressors;
  Matrix feedback_base;
  double feedback_gain = 0.0;
  /// Multiplies the realized noise; 0 gives noiseless runs with the same proxy.
  double noise_realization_scale = 1.0;

  Eigen::Index m() const { return weight.dim(); }
  Eigen::Index n() const { return pbar.dim(); }
  void validate() const;
  Matrix regressor(std::size_t t, const Vector& feedback_state) const;
};

/// Uniform-in-time check of
///   ‖z + s_t‖²_{(P̄+V_t)⁻¹} ≤ ‖z‖²_{P̄⁻¹} + c_w²(ln det(I + P̄⁻¹V_t) + 2 ln(1/δ))
/// for t = 0..horizon; a run is a violation when any t fails.
CoverageResult mc_check_theorem1(const SnmTestCase& tc, std::size_t n_runs, double delta,
                                 RngStream rng, unsigned workers = 1);

/// Same runs evaluated for several δ at once (common random numbers).
std::vector<CoverageResult> mc_check_theorem1(const SnmTestCase& tc, std::size_t n_runs,
                                              const std::vector<double>& deltas, RngStream rng,
                                              unsigned workers = 1);

struct SupermartingaleBin {
  std::size_t count = 0;
  double mean_q_t = 0.0;
  double mean_q_next = 0.0;
  double std_error = 0.0;  ///< standard error of mean(q_{t+1} − q_t)
  bool pass() const { return mean_q_next - mean_q_t <= 3.0 * std_error; }
};

/// Bins runs by q_t (equal-count bins) and compares the per-bin mean of q_{t+1}
/// with that of q_t, where q_t = exp(½‖z+s_t‖²_{H_t⁻¹})/√det H_t, H_t = P̄ + V_t.
std::vector<SupermartingaleBin> check_snm_supermartingale(const SnmTestCase& tc,
                                                          std::size_t n_runs, std::size_t t,
                                                          std::size_t n_bins, RngStream rng);

struct Corollary2Result {
  CoverageResult coverage;
  double threshold = 0.0;       ///< 2n ln 2 + 4 ln(1/δ)
  double exact_tail = 0.0;      ///< P[χ²_n > threshold]
  double chi2_quantile = 0.0;   ///< (1−δ)-quantile of χ²_n
};

/// Counts draws v ~ N(0, R) with ‖v‖²_{R⁻¹} above the subgaussian threshold.
Corollary2Result mc_check_corollary2(const SymMatrix& r, std::size_t n_runs, double delta,
                                     RngStream rng);

struct Lemma1Case {
  SymMatrix h;
  SymMatrix r;
  Vector x;
};

/// Random instance in dimension 1..3 with the eigenvalues of H^{-1/2}RH^{-1/2}
/// in [0.05, 0.5], which keeps the Monte Carlo variance finite.
Lemma1Case random_lemma1_case(RandomGenerator& gen);

struct QuadratureCase {
  SymMatrix sigma;
  Vector b;
};

/// Random instance in dimension 1 or 2 with eigenvalues of Σ in [0.2, 2].
QuadratureCase random_quadrature_case(RandomGenerator& gen);

/// Fixed 2-output, 3-parameter instance for the self-normalized bound, one per plan.
SnmTestCase reference_snm_case(RegressorPlan plan);

/// JSON record {check, params, n_runs, n_violations, rate, threshold, pass, seed}.
struct VerificationRecord {
  std::string check;
  nlohmann::json params = nlohmann::json::object();
  std::size_t n_runs = 0;
  std::size_t n_violations = 0;
  double rate = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

}  // namespace snm
