#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "snm/verification.hpp"

using namespace snm;

namespace {

SymMatrix scalar(double a) { return SymMatrix(Matrix::Constant(1, 1, a)); }

}  // namespace

TEST(Coverage, SlackIsThreeStandardErrors) {
  EXPECT_NEAR(binomial_slack(0.05, 10000), 3.0 * std::sqrt(0.05 * 0.95 / 10000), 1e-15);
  const auto c = CoverageResult::from_counts(100, 7, 0.05);
  EXPECT_DOUBLE_EQ(c.rate(), 0.07);
  EXPECT_TRUE(c.pass());
  EXPECT_FALSE(CoverageResult::from_counts(100, 20, 0.05).pass());
}

TEST(Lemma1, ScalarUnitCaseIsEquality) {
  const auto res = mc_check_lemma1(scalar(1.0), scalar(1.0), Vector::Zero(1), 100000, RngStream{1, 0});
  EXPECT_DOUBLE_EQ(res.rhs, 1.0);
  EXPECT_FALSE(res.finite_variance);
  EXPECT_NEAR(res.lhs_estimate, 1.0, 0.05);
}

TEST(Lemma1, ScalarUnitCaseConvergesWithSamples) {
  // R = H sits on the boundary of finite variance, so only the trend is checked.
  double err_small = 0.0;
  double err_large = 0.0;
  constexpr int kSeeds = 20;
  for (int s = 0; s < kSeeds; ++s) {
    const RngStream stream{static_cast<std::uint64_t>(100 + s), 0};
    err_small += std::abs(mc_check_lemma1(scalar(1), scalar(1), Vector::Zero(1), 1000, stream).lhs_estimate - 1.0);
    err_large += std::abs(mc_check_lemma1(scalar(1), scalar(1), Vector::Zero(1), 100000, stream).lhs_estimate - 1.0);
  }
  EXPECT_LT(err_large, err_small / 3.0);
}

TEST(Lemma1, NoNoiseGivesExactEquality) {
  const SymMatrix h(Matrix((Matrix(2, 2) << 2.0, 0.5, 0.5, 1.0).finished()));
  const auto res = mc_check_lemma1(h, SymMatrix::zero(2), (Vector(2) << 0.3, -0.7).finished(), 100,
                                   RngStream{2, 0});
  EXPECT_NEAR(res.lhs_estimate, res.rhs, 1e-14 * res.rhs);
  EXPECT_EQ(res.std_error, 0.0);
  EXPECT_TRUE(res.pass);
}

TEST(Lemma1, RandomCasesPass) {
  RandomGenerator gen(RngStream{3, 0});
  for (std::uint64_t k = 0; k < 10; ++k) {
    const Lemma1Case c = random_lemma1_case(gen);
    EXPECT_TRUE(is_positive_definite(c.h + (-1.0) * c.r));
    const auto res = mc_check_lemma1(c.h, c.r, c.x, 20000, RngStream{3, 1}.substream(k));
    EXPECT_TRUE(res.finite_variance);
    EXPECT_TRUE(res.pass) << "case " << k << " lhs " << res.lhs_estimate << " rhs " << res.rhs;
  }
}

TEST(Lemma1, RejectsIndefiniteNoise) {
  EXPECT_THROW(mc_check_lemma1(scalar(1.0), scalar(-1.0), Vector::Zero(1), 10, RngStream{}), Error);
}

TEST(GaussianIntegral, HandValues) {
  const double two_pi = 2.0 * std::numbers::pi;
  const auto a = quadrature_check_gaussian_integral(scalar(1.0), Vector::Zero(1));
  EXPECT_NEAR(a.closed_form, std::sqrt(two_pi), 1e-14);
  EXPECT_LT(a.rel_error(), 1e-10);
  const auto b = quadrature_check_gaussian_integral(scalar(1.0), Vector::Ones(1));
  EXPECT_NEAR(b.closed_form, std::sqrt(two_pi) * std::exp(0.5), 1e-13);
  EXPECT_LT(b.rel_error(), 1e-10);
  const auto c = quadrature_check_gaussian_integral(SymMatrix::diagonal((Vector(2) << 1.0, 4.0).finished()),
                                                    (Vector(2) << 1.0, 0.0).finished());
  EXPECT_NEAR(c.closed_form, std::sqrt(two_pi * two_pi * 4.0) * std::exp(0.5), 1e-12);
  EXPECT_LT(c.rel_error(), 1e-10);
}

TEST(GaussianIntegral, CorrelatedTwoDimensional) {
  const SymMatrix sigma(Matrix((Matrix(2, 2) << 1.5, -0.9, -0.9, 0.8).finished()));
  const auto r = quadrature_check_gaussian_integral(sigma, (Vector(2) << 0.4, -0.6).finished());
  EXPECT_LT(r.rel_error(), 1e-8);
}

TEST(GaussianIntegral, RejectsBadInputs) {
  EXPECT_THROW(quadrature_check_gaussian_integral(SymMatrix::identity(3), Vector::Zero(3)), Error);
  EXPECT_THROW(quadrature_check_gaussian_integral(scalar(0.0), Vector::Zero(1)), Error);
}

TEST(Lemma2, MartingaleCoverage) {
  const auto c = mc_check_lemma2(4000, 20, 0.05, RngStream{4, 0});
  EXPECT_TRUE(c.pass()) << c.rate();
  EXPECT_GT(c.n_violations, 0u);
}

TEST(Lemma2, DegenerateProcessesNeverCross) {
  EXPECT_EQ(mc_check_lemma2(500, 20, 0.5, RngStream{5, 0}, SupermartingaleProcess::Constant).n_violations, 0u);
  EXPECT_EQ(mc_check_lemma2(500, 20, 0.05, RngStream{5, 1}, SupermartingaleProcess::Decreasing).n_violations,
            0u);
  EXPECT_THROW(mc_check_lemma2(10, 5, 1.0, RngStream{}), Error);
}

TEST(Lemma2, IndependentOfWorkerCount) {
  const auto a = mc_check_lemma2(3000, 20, 0.2, RngStream{6, 0}, SupermartingaleProcess::ExpRandomWalk, 1);
  const auto b = mc_check_lemma2(3000, 20, 0.2, RngStream{6, 0}, SupermartingaleProcess::ExpRandomWalk, 4);
  EXPECT_EQ(a.n_violations, b.n_violations);
}

TEST(Theorem1, ReferenceCasesPass) {
  for (auto plan : {RegressorPlan::DeterministicFixed, RegressorPlan::StateFeedback}) {
    const auto results = mc_check_theorem1(reference_snm_case(plan), 2000, {0.01, 0.05, 0.2}, RngStream{7, 0});
    for (const auto& c : results) EXPECT_TRUE(c.pass()) << c.delta << " " << c.rate();
  }
}

TEST(Theorem1, ZeroShiftDeterministicRegressors) {
  SnmTestCase tc = reference_snm_case(RegressorPlan::DeterministicFixed);
  tc.shift_z = Vector::Zero(3);
  EXPECT_TRUE(mc_check_theorem1(tc, 2000, 0.05, RngStream{8, 0}).pass());
}

TEST(Theorem1, ZeroNoiseNeverViolates) {
  for (auto plan : {RegressorPlan::DeterministicFixed, RegressorPlan::StateFeedback}) {
    SnmTestCase tc = reference_snm_case(plan);
    tc.noise_realization_scale = 0.0;
    EXPECT_EQ(mc_check_theorem1(tc, 200, 0.5, RngStream{9, 0}).n_violations, 0u);
  }
}

TEST(Theorem1, RatesMonotoneInDeltaOnSharedStreams) {
  const std::vector<double> deltas{0.01, 0.05, 0.2, 0.5};
  const auto results =
      mc_check_theorem1(reference_snm_case(RegressorPlan::StateFeedback), 3000, deltas, RngStream{10, 0});
  for (std::size_t k = 1; k < results.size(); ++k) {
    EXPECT_LE(results[k - 1].rate(), results[k].rate() + results[k].slack);
    EXPECT_LE(results[k - 1].n_violations, results[k].n_violations);
  }
}

TEST(Theorem1, SingleDeltaMatchesGrid) {
  const auto tc = reference_snm_case(RegressorPlan::DeterministicFixed);
  const auto grid = mc_check_theorem1(tc, 500, {0.05, 0.2}, RngStream{11, 0});
  EXPECT_EQ(mc_check_theorem1(tc, 500, 0.2, RngStream{11, 0}).n_violations, grid[1].n_violations);
  EXPECT_EQ(mc_check_theorem1(tc, 500, {0.05, 0.2}, RngStream{11, 0}, 3)[0].n_violations,
            grid[0].n_violations);
}

TEST(Theorem1, ValidatesCase) {
  SnmTestCase tc = reference_snm_case(RegressorPlan::DeterministicFixed);
  tc.fixed_regressors.clear();
  EXPECT_THROW(mc_check_theorem1(tc, 10, 0.05, RngStream{}), Error);
  tc = reference_snm_case(RegressorPlan::DeterministicFixed);
  tc.pbar = SymMatrix::zero(3);
  EXPECT_THROW(mc_check_theorem1(tc, 10, 0.05, RngStream{}), Error);
}

TEST(Theorem1, ProofProcessIsSupermartingale) {
  // q_{t+1} has finite fourth moment only while 3 V_{t+1} < P̄, so P̄ is sized from the Gram.
  for (std::size_t t : {0u, 3u, 10u}) {
    SnmTestCase tc = reference_snm_case(RegressorPlan::DeterministicFixed);
    Matrix v = Matrix::Zero(tc.n(), tc.n());
    for (std::size_t k = 0; k <= t; ++k) {
      const Matrix m = tc.regressor(k, Vector::Zero(tc.m()));
      v += m.transpose() * tc.weight.matrix() * m;
    }
    tc.pbar = SymMatrix(Matrix(4.0 * v + Matrix::Identity(tc.n(), tc.n())));
    const auto bins = check_snm_supermartingale(tc, 20000, t, 5, RngStream{12, t});
    ASSERT_EQ(bins.size(), 5u);
    for (const auto& b : bins) {
      EXPECT_TRUE(b.pass()) << "t=" << t << " mean q_t " << b.mean_q_t << " next " << b.mean_q_next;
    }
  }
}

TEST(Corollary2, ThresholdIsConservative) {
  const auto res = mc_check_corollary2(scalar(2.0), 5000, 0.05, RngStream{13, 0});
  EXPECT_NEAR(res.threshold, 13.369223455335854, 1e-12);
  EXPECT_NEAR(res.chi2_quantile, 3.841458820694124, 1e-9);
  EXPECT_LT(res.coverage.rate(), 0.05);
  EXPECT_TRUE(res.coverage.pass());
  EXPECT_LT(res.exact_tail, 0.05);
}

TEST(Corollary2, QuantileTableFromIndependentRoutine) {
  // (1 − δ)-quantiles of χ²_n from scipy.stats.chi2.ppf, n ∈ {1, 2, 5, 10}, δ ∈ {0.01, 0.05, 0.2}.
  const double table[4][3] = {{6.6348966010212145, 3.841458820694124, 1.642374415149818},
                              {9.21034037197618, 5.991464547107979, 3.218875824868201},
                              {15.08627246938899, 11.070497693516351, 7.289276126648961},
                              {23.209251158954356, 18.307038053275146, 13.441957574973113}};
  const Eigen::Index dims[] = {1, 2, 5, 10};
  const double deltas[] = {0.01, 0.05, 0.2};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      const auto res = mc_check_corollary2(SymMatrix::identity(dims[i]), 100, deltas[j], RngStream{14, 0});
      EXPECT_NEAR(res.chi2_quantile, table[i][j], 1e-8);
      EXPECT_GE(res.threshold, res.chi2_quantile);
    }
  }
}

TEST(Corollary2, LimitThresholdTailBelowOne) {
  const auto res = mc_check_corollary2(SymMatrix::identity(3), 1000, 1.0 - 1e-9, RngStream{15, 0});
  EXPECT_NEAR(res.threshold, 6.0 * std::numbers::ln2, 1e-8);
  EXPECT_LT(res.exact_tail, 1.0);
  EXPECT_GT(res.exact_tail, 0.0);
}

TEST(VerificationRecord, JsonKeys) {
  VerificationRecord r;
  r.check = "lemma2";
  r.n_runs = 10;
  r.pass = true;
  const auto j = r.to_json();
  for (const char* key : {"check", "params", "n_runs", "n_violations", "rate", "threshold", "pass", "seed"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}
