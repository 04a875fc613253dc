#include "snm/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "snm/bounds.hpp"
#include "snm/parallel.hpp"

namespace snm {

double binomial_slack(double delta, std::size_t n_runs) {
  if (n_runs == 0) return 0.0;
  return 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(n_runs));
}

CoverageResult CoverageResult::from_counts(std::size_t n_runs, std::size_t n_violations,
                                           double delta) {
  return {n_runs, n_violations, delta, binomial_slack(delta, n_runs)};
}

namespace {

void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::ParamOutOfRange, "delta must lie in (0, 1)");
  }
}

struct MeanAndError {
  double mean = 0.0;
  double std_error = 0.0;
};

MeanAndError mean_and_error(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  MeanAndError r;
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

}  // namespace

Lemma1Result mc_check_lemma1(const SymMatrix& h, const SymMatrix& r, const Vector& x,
                             std::size_t n_samples, RngStream rng) {
  require_dims(h.dim() == r.dim() && x.size() == h.dim(), "lemma1 dimensions");
  if (!is_positive_semidefinite(r)) {
    throw Error(ErrorCode::NotPositiveDefinite, "R must be positive semidefinite");
  }
  if (n_samples < 2) throw Error(ErrorCode::ParamOutOfRange, "need at least two samples");
  const SpdFactor fh = cholesky(h);
  const SpdFactor fhr = cholesky(h + r);
  const GaussianSampler sampler(r);
  RandomGenerator gen(rng);

  // Samples are scaled by exp(−c) with c = ½‖x‖²_{H⁻¹}, the log of the rhs numerator.
  const double c = 0.5 * inv_weighted_sq_norm(x, fh);
  std::vector<double> e(n_samples);
  for (auto& ei : e) {
    const Vector v = sampler.sample(gen);
    ei = std::exp(0.5 * inv_weighted_sq_norm(x + v, fhr) - c);
  }
  const MeanAndError me = mean_and_error(e);

  Lemma1Result res;
  const double lhs_scale = std::exp(c - 0.5 * fhr.log_det());
  res.lhs_estimate = me.mean * lhs_scale;
  res.std_error = me.std_error * lhs_scale;
  res.rhs = std::exp(c - 0.5 * fh.log_det());
  res.finite_variance = is_positive_definite(h + (-1.0) * r);
  const double rel_se = me.mean > 0.0 ? me.std_error / me.mean : 0.0;
  res.pass = res.lhs_estimate <= res.rhs * (1.0 + 3.0 * rel_se);
  return res;
}

double QuadratureResult::rel_error() const {
  return std::abs(numeric - closed_form) / std::abs(closed_form);
}

QuadratureResult quadrature_check_gaussian_integral(const SymMatrix& sigma, const Vector& b) {
  const Eigen::Index n = sigma.dim();
  require_dims(b.size() == n, "gaussian integral dimensions");
  if (n < 1 || n > 2) throw Error(ErrorCode::ParamOutOfRange, "quadrature supports dim 1 or 2");
  const SpdFactor f = cholesky(sigma);

  const Vector center = sigma.matrix() * b;  // mode of the integrand
  const double peak = 0.5 * b.dot(center);   // exponent at the mode
  const Matrix precision = f.solve(Matrix(Matrix::Identity(n, n)));
  auto exponent = [&](const Vector& u) { return -0.5 * u.dot(precision * u) + u.dot(b) - peak; };

  constexpr double kTol = 1e-12;
  constexpr unsigned kDepth = 20;
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;

  double integral = 0.0;
  if (n == 1) {
    const double sd = std::sqrt(sigma(0, 0));
    integral = Quad::integrate(
        [&](double u) { return std::exp(exponent(Vector::Constant(1, u))); },
        center(0) - 12.0 * sd, center(0) + 12.0 * sd, kDepth, kTol);
  } else {
    const double sd0 = std::sqrt(sigma(0, 0));
    // Inner limits track the conditional law of u₁ given u₀.
    const double slope = sigma(0, 1) / sigma(0, 0);
    const double sd1 = std::sqrt(sigma(1, 1) - sigma(0, 1) * slope);
    auto inner = [&](double u0) {
      const double mid = center(1) + slope * (u0 - center(0));
      return Quad::integrate(
          [&](double u1) { return std::exp(exponent((Vector(2) << u0, u1).finished())); },
          mid - 12.0 * sd1, mid + 12.0 * sd1, kDepth, kTol);
    };
    integral = Quad::integrate(inner, center(0) - 12.0 * sd0, center(0) + 12.0 * sd0, kDepth, kTol);
  }

  QuadratureResult res;
  res.numeric = integral * std::exp(peak);
  res.closed_form = std::sqrt(std::pow(2.0 * std::numbers::pi, static_cast<double>(n)) *
                              std::exp(f.log_det())) *
                    std::exp(0.5 * b.dot(sigma.matrix() * b));
  return res;
}

CoverageResult mc_check_lemma2(std::size_t n_runs, std::size_t horizon, double delta,
                               RngStream rng, SupermartingaleProcess process, unsigned workers) {
  require_delta(delta);
  if (n_runs == 0) throw Error(ErrorCode::ParamOutOfRange, "n_runs must be positive");
  const double log_level = std::log(1.0 / delta);  // ln(E[q_0]/δ), E[q_0] = 1

  auto run = [&](std::size_t i) -> std::uint8_t {
    RandomGenerator gen(rng.substream(i));
    double log_q = 0.0;
    for (std::size_t t = 0; t <= horizon; ++t) {
      if (log_q > log_level) return 1;
      switch (process) {
        case SupermartingaleProcess::ExpRandomWalk: log_q += gen.normal() - 0.5; break;
        case SupermartingaleProcess::Constant: break;
        case SupermartingaleProcess::Decreasing:
          log_q = -std::log(static_cast<double>(t + 2));
          break;
      }
    }
    return 0;
  };
  const auto flags = parallel_map(n_runs, workers, run);
  const std::size_t violations = std::accumulate(flags.begin(), flags.end(), std::size_t{0});
  return CoverageResult::from_counts(n_runs, violations, delta);
}

void SnmTestCase::validate() const {
  require_dims(shift_z.size() == pbar.dim(), "shift z must match P̄");
  if (!is_positive_definite(pbar)) throw Error(ErrorCode::NotPositiveDefinite, "P̄ must be PD");
  if (!is_positive_definite(weight)) throw Error(ErrorCode::NotPositiveDefinite, "W must be PD");
  if (!(noise_proxy_scale > 0.0)) throw Error(ErrorCode::ParamOutOfRange, "c_w must be positive");
  if (plan == RegressorPlan::DeterministicFixed) {
    require_dims(!fixed_regressors.empty(), "fixed regressor list is empty");
    for (const auto& m : fixed_regressors) {
      require_dims(m.rows() == this->m() && m.cols() == this->n(), "fixed regressor shape");
    }
  } else {
    require_dims(feedback_base.rows() == this->m() && feedback_base.cols() == this->n(),
                 "feedback base shape");
  }
}

Matrix SnmTestCase::regressor(std::size_t t, const Vector& feedback_state) const {
  if (plan == RegressorPlan::DeterministicFixed) {
    return fixed_regressors[t % fixed_regressors.size()];
  }
  return feedback_base + feedback_gain * feedback_state * Eigen::RowVectorXd::Ones(n());
}

std::vector<CoverageResult> mc_check_theorem1(const SnmTestCase& tc, std::size_t n_runs,
                                              const std::vector<double>& deltas, RngStream rng,
                                              unsigned workers) {
  tc.validate();
  for (double d : deltas) require_delta(d);
  if (n_runs == 0) throw Error(ErrorCode::ParamOutOfRange, "n_runs must be positive");
  const double cw2 = tc.noise_proxy_scale * tc.noise_proxy_scale;
  const SpdFactor f_pbar = cholesky(tc.pbar);
  const double baseline = inv_weighted_sq_norm(tc.shift_z, f_pbar);
  const SpdFactor f_w = cholesky(tc.weight);
  const SymMatrix noise_cov(cw2 * f_w.solve(Matrix(Matrix::Identity(tc.m(), tc.m()))));
  const GaussianSampler noise(noise_cov);
  const Matrix& w = tc.weight.matrix();

  std::vector<double> slack_terms;
  for (double d : deltas) slack_terms.push_back(2.0 * cw2 * std::log(1.0 / d));

  auto run = [&](std::size_t i) {
    RandomGenerator gen(rng.substream(i));
    std::vector<std::uint8_t> violated(deltas.size(), 0);
    Vector s = Vector::Zero(tc.n());
    SymMatrix v = SymMatrix::zero(tc.n());
    Vector state = Vector::Zero(tc.m());
    for (std::size_t t = 0;; ++t) {
      const SpdFactor f = cholesky(tc.pbar + v);
      const double lhs = inv_weighted_sq_norm(tc.shift_z + s, f);
      const double growth = baseline + cw2 * (f.log_det() - f_pbar.log_det());
      for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (lhs > growth + slack_terms[k]) violated[k] = 1;
      }
      if (t == tc.horizon) break;
      const Matrix m = tc.regressor(t, state);
      const Vector noise_t = tc.noise_realization_scale * noise.sample(gen);
      s += m.transpose() * (w * noise_t);
      const Matrix gain = m.transpose() * w * m;
      v = v + SymMatrix(0.5 * (gain + gain.transpose()));
      state = 0.9 * state + noise_t;
    }
    return violated;
  };
  const auto flags = parallel_map(n_runs, workers, run);

  std::vector<CoverageResult> out;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    std::size_t count = 0;
    for (const auto& f : flags) count += f[k];
    out.push_back(CoverageResult::from_counts(n_runs, count, deltas[k]));
  }
  return out;
}

CoverageResult mc_check_theorem1(const SnmTestCase& tc, std::size_t n_runs, double delta,
                                 RngStream rng, unsigned workers) {
  return mc_check_theorem1(tc, n_runs, std::vector<double>{delta}, rng, workers).front();
}

std::vector<SupermartingaleBin> check_snm_supermartingale(const SnmTestCase& tc,
                                                          std::size_t n_runs, std::size_t t,
                                                          std::size_t n_bins, RngStream rng) {
  tc.validate();
  if (n_bins == 0 || n_runs < 2 * n_bins) {
    throw Error(ErrorCode::ParamOutOfRange, "need at least two runs per bin");
  }
  const double cw2 = tc.noise_proxy_scale * tc.noise_proxy_scale;
  const SpdFactor f_w = cholesky(tc.weight);
  const SymMatrix noise_cov(cw2 * f_w.solve(Matrix(Matrix::Identity(tc.m(), tc.m()))));
  const GaussianSampler noise(noise_cov);
  const Matrix& w = tc.weight.matrix();

  // The process is defined for unit proxy; rescale s and z by 1/c_w.
  const double inv_cw = 1.0 / tc.noise_proxy_scale;
  auto q_of = [&](const Vector& s, const SymMatrix& v) {
    const SpdFactor f = cholesky(tc.pbar + v);
    const Vector y = inv_cw * (tc.shift_z + s);
    return std::exp(0.5 * inv_weighted_sq_norm(y, f) - 0.5 * f.log_det());
  };

  std::vector<std::pair<double, double>> samples(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i) {
    RandomGenerator gen(rng.substream(i));
    Vector s = Vector::Zero(tc.n());
    SymMatrix v = SymMatrix::zero(tc.n());
    Vector state = Vector::Zero(tc.m());
    double q_t = 0.0;
    for (std::size_t k = 0; k <= t; ++k) {
      if (k == t) q_t = q_of(s, v);
      const Matrix m = tc.regressor(k, state);
      const Vector noise_k = tc.noise_realization_scale * noise.sample(gen);
      s += m.transpose() * (w * noise_k);
      const Matrix gain = m.transpose() * w * m;
      v = v + SymMatrix(0.5 * (gain + gain.transpose()));
      state = 0.9 * state + noise_k;
    }
    samples[i] = {q_t, q_of(s, v)};
  }
  // Bin on q_t alone; ties keep run order so q_{t+1} cannot leak into the binning.
  std::stable_sort(samples.begin(), samples.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<SupermartingaleBin> bins;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const std::size_t lo = b * n_runs / n_bins;
    const std::size_t hi = (b + 1) * n_runs / n_bins;
    std::vector<double> diffs;
    SupermartingaleBin bin;
    bin.count = hi - lo;
    for (std::size_t i = lo; i < hi; ++i) {
      bin.mean_q_t += samples[i].first;
      bin.mean_q_next += samples[i].second;
      diffs.push_back(samples[i].second - samples[i].first);
    }
    bin.mean_q_t /= static_cast<double>(bin.count);
    bin.mean_q_next /= static_cast<double>(bin.count);
    bin.std_error = mean_and_error(diffs).std_error;
    bins.push_back(bin);
  }
  return bins;
}

Corollary2Result mc_check_corollary2(const SymMatrix& r, std::size_t n_runs, double delta,
                                     RngStream rng) {
  require_delta(delta);
  if (n_runs == 0) throw Error(ErrorCode::ParamOutOfRange, "n_runs must be positive");
  const SpdFactor f = cholesky(r);
  const GaussianSampler sampler(r);
  RandomGenerator gen(rng);

  Corollary2Result res;
  res.threshold = subgaussian_bound(r.dim(), delta);
  std::size_t violations = 0;
  for (std::size_t i = 0; i < n_runs; ++i) {
    if (inv_weighted_sq_norm(sampler.sample(gen), f) > res.threshold) ++violations;
  }
  res.coverage = CoverageResult::from_counts(n_runs, violations, delta);

  const boost::math::chi_squared_distribution<double> chi2(static_cast<double>(r.dim()));
  res.exact_tail = boost::math::cdf(boost::math::complement(chi2, res.threshold));
  res.chi2_quantile = boost::math::quantile(boost::math::complement(chi2, delta));
  return res;
}

namespace {

SymMatrix random_spd(RandomGenerator& gen, Eigen::Index n, double lo, double hi) {
  const Eigen::HouseholderQR<Matrix> qr(Matrix(n, n).unaryExpr([&](double) { return gen.normal(); }));
  const Matrix q = qr.householderQ();
  const Vector eig = gen.uniform_vector(n, lo, hi);
  return SymMatrix(q * eig.asDiagonal() * q.transpose());
}

}  // namespace

Lemma1Case random_lemma1_case(RandomGenerator& gen) {
  const auto n = static_cast<Eigen::Index>(1 + gen.next_u64() % 3);
  Lemma1Case c;
  c.h = random_spd(gen, n, 0.5, 2.0);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(c.h.matrix());
  const Matrix h_half = es.operatorSqrt();
  const SymMatrix whitened = random_spd(gen, n, 0.05, 0.5);
  c.r = SymMatrix(h_half * whitened.matrix() * h_half);
  c.x = gen.normal_vector(n);
  return c;
}

QuadratureCase random_quadrature_case(RandomGenerator& gen) {
  const auto n = static_cast<Eigen::Index>(1 + gen.next_u64() % 2);
  QuadratureCase c;
  c.sigma = random_spd(gen, n, 0.2, 2.0);
  c.b = 0.5 * gen.normal_vector(n);
  return c;
}

SnmTestCase reference_snm_case(RegressorPlan plan) {
  SnmTestCase tc;
  tc.shift_z = (Vector(3) << 0.5, -0.3, 0.2).finished();
  tc.pbar = SymMatrix::identity(3);
  tc.noise_proxy_scale = 0.5;
  tc.horizon = 30;
  tc.weight = SymMatrix::diagonal((Vector(2) << 1.0, 2.0).finished());
  tc.plan = plan;
  RandomGenerator gen(RngStream{20240101, 0});
  for (int k = 0; k < 5; ++k) {
    tc.fixed_regressors.push_back(Matrix(2, 3).unaryExpr([&](double) { return gen.normal(); }));
  }
  tc.feedback_base = (Matrix(2, 3) << 1.0, 0.0, 0.5, 0.0, 1.0, -0.5).finished();
  tc.feedback_gain = 0.5;
  return tc;
}

nlohmann::json VerificationRecord::to_json() const {
  return {{"check", check},          {"params", params},       {"n_runs", n_runs},
          {"n_violations", n_violations}, {"rate", rate},     {"threshold", threshold},
          {"pass", pass},            {"seed", seed}};
}

}  // namespace snm
