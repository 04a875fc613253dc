#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "snm/bounds.hpp"
#include "snm/experiments.hpp"

using namespace snm;

namespace {

ExperimentConfig small(ExperimentTag tag, std::size_t runs) {
  ExperimentConfig cfg = ExperimentConfig::defaults(tag);
  cfg.n_runs = runs;
  return cfg;
}

std::vector<std::string> sorted_lines(const std::string& csv) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < csv.size()) {
    const std::size_t end = csv.find('\n', start);
    lines.push_back(csv.substr(start, end - start));
    start = end + 1;
  }
  std::sort(lines.begin(), lines.end());
  return lines;
}

}  // namespace

TEST(LogSpacedTimes, IncreasingAndEndsAtHorizon) {
  const auto times = log_spaced_times(1000, 30);
  ASSERT_FALSE(times.empty());
  EXPECT_EQ(times.front(), 1u);
  EXPECT_EQ(times.back(), 1000u);
  EXPECT_TRUE(std::is_sorted(times.begin(), times.end()));
  EXPECT_EQ(std::adjacent_find(times.begin(), times.end()), times.end());
  EXPECT_LE(times.size(), 30u);
  EXPECT_EQ(log_spaced_times(5, 1), std::vector<std::size_t>{5});
  EXPECT_EQ(log_spaced_times(3, 30), (std::vector<std::size_t>{1, 2, 3}));
}

TEST(ExperimentConfig, DefaultsFollowDocumentedChoices) {
  const auto v = ExperimentConfig::defaults(ExperimentTag::Ex1Violation);
  EXPECT_EQ(v.n_runs, 10000u);
  EXPECT_EQ(v.horizon, 20u);
  EXPECT_DOUBLE_EQ(v.c_w, 0.2);
  EXPECT_EQ(v.delta_grid, (std::vector<double>{0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5}));
  EXPECT_NEAR(v.c_theta_grid.at(0), std::sqrt(16.0 / 105.0), 1e-15);

  const auto s = ExperimentConfig::defaults(ExperimentTag::Ex1BetaSweep);
  ASSERT_EQ(s.c_theta_grid.size(), 20u);
  EXPECT_NEAR(s.c_theta_grid.front(), 0.1 * ex1_prior_radius(), 1e-15);
  EXPECT_NEAR(s.c_theta_grid.back(), 10.0 * ex1_prior_radius(), 1e-13);
  for (std::size_t k = 1; k < s.c_theta_grid.size(); ++k) {
    EXPECT_NEAR(s.c_theta_grid[k] / s.c_theta_grid[k - 1], std::pow(100.0, 1.0 / 19.0), 1e-12);
  }

  const auto e = ExperimentConfig::defaults(ExperimentTag::Ex2Shrink);
  EXPECT_EQ(e.n_runs, 1u);
  EXPECT_EQ(e.horizon, 1000u);
  EXPECT_EQ(e.eval_set_size, 1000u);
  EXPECT_DOUBLE_EQ(e.theta_max, 100.0);
  EXPECT_DOUBLE_EQ(e.c_w, 1.0 / std::sqrt(3.0));
  EXPECT_EQ(e.delta_grid, std::vector<double>{0.05});
  EXPECT_EQ(e.c_theta_grid, std::vector<double>{0.0});

  const auto b = ExperimentConfig::defaults(ExperimentTag::Ex1Bands);
  EXPECT_EQ(b.u_grid_points, 101u);
  EXPECT_EQ(b.delta_grid, std::vector<double>{0.05});
}

TEST(ExperimentConfig, JsonRoundTrip) {
  ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentTag::Ex1Violation);
  cfg.n_runs = 123;
  cfg.base_seed = 77;
  cfg.delta_grid = {0.1, 0.3};
  const auto back = ExperimentConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json(), cfg.to_json());
}

TEST(ExperimentConfig, MissingKeysTakeTagDefaults) {
  const auto cfg = ExperimentConfig::from_json({{"experiment", "EX2_SHRINK"}, {"horizon", 50}});
  EXPECT_EQ(cfg.horizon, 50u);
  EXPECT_DOUBLE_EQ(cfg.c_w, 1.0 / std::sqrt(3.0));
}

TEST(ExperimentConfig, SchemaErrors) {
  for (const nlohmann::json& bad :
       {nlohmann::json{{"n_runs", 3}}, nlohmann::json{{"experiment", "FIG9"}},
        nlohmann::json{{"experiment", "EX1_BANDS"}, {"bogus", 1}},
        nlohmann::json{{"experiment", "EX1_BANDS"}, {"n_runs", "many"}}}) {
    try {
      ExperimentConfig::from_json(bad);
      FAIL() << bad.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch) << bad.dump();
    }
  }
}

TEST(ExperimentConfig, ValidateRejectsOutOfRange) {
  auto cfg = ExperimentConfig::defaults(ExperimentTag::Ex1Violation);
  cfg.delta_grid = {0.05, 1.5};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ExperimentConfig::defaults(ExperimentTag::Ex1Violation);
  cfg.n_runs = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ExperimentConfig::defaults(ExperimentTag::Ex1Violation);
  cfg.c_w = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_THROW(run_ex1_bands(ExperimentConfig::defaults(ExperimentTag::Ex1Violation)), Error);
}

TEST(Bands, ShapeAndContainment) {
  const auto data = run_ex1_bands(small(ExperimentTag::Ex1Bands, 30));
  EXPECT_EQ(data.rows.size(), 30u * 101u);
  EXPECT_EQ(to_csv(data).substr(0, to_csv(data).find('\n')), "run,u,g_true,g_hat,band_halfwidth");
  for (const auto& row : data.rows) {
    const double u = cell_to_double(row.cells[1]);
    EXPECT_GE(u, -1.0);
    EXPECT_LE(u, 1.0);
    EXPECT_DOUBLE_EQ(cell_to_double(row.cells[2]), u - u * u * u);
    EXPECT_GT(cell_to_double(row.cells[4]), 0.0);
  }
  const auto c = band_containment(data);
  EXPECT_EQ(c.runs, 30u);
  EXPECT_GE(c.fraction(), 0.8);
}

TEST(Bands, NoiselessRunIsContained) {
  PolyClosedLoop sys;
  sys.c_w = 0.0;
  for (std::uint64_t run = 0; run < 10; ++run) {
    const auto traj = simulate_poly(sys, RngStream{3, run});
    auto state = EstimatorState::init({Vector::Zero(4), poly_l2_gram(), 0.0}, SymMatrix::identity(1), 1, 4);
    for (const auto& o : traj.observations) state = state.update(o);
    const SpdFactor f = *state.regularized_factor();
    const Vector theta_hat = *state.estimate();
    const Radius beta = beta_thm2({0.2, ex1_prior_radius(), 0.05}, state.prior().p, state.gram());
    for (int k = 0; k <= 100; ++k) {
      const double u = -1.0 + 0.02 * k;
      const double gap = std::abs(poly_eval(ex1_theta_true(), u) - poly_eval(theta_hat, u));
      EXPECT_LE(gap, output_radius(poly_regressor(u), f, beta).value());
    }
  }
}

TEST(Sweep, ExistingDominatesAndLhsIsPerRun) {
  const auto data = run_ex1_beta_sweep(small(ExperimentTag::Ex1BetaSweep, 5));
  ASSERT_EQ(data.rows.size(), 5u * 20u);
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto& cells = data.rows[i].cells;
    const double b2 = cell_to_double(cells[3]);
    const double b25 = cell_to_double(cells[4]);
    EXPECT_LE(b2, b25 + 1e-12);
    EXPECT_LE(b25, std::sqrt(2.0) * b2 + 1e-12);
    if (i % 20 != 0) EXPECT_EQ(cell_to_string(cells[2]), cell_to_string(data.rows[i - 1].cells[2]));
  }
}

TEST(Violation, RowsCountsAndOrdering) {
  const auto data = run_ex1_violation(small(ExperimentTag::Ex1Violation, 500));
  const auto rows = violation_rows(data);
  ASSERT_EQ(rows.size(), 14u);
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    EXPECT_EQ(rows[i].method, "EXISTING_EQ25");
    EXPECT_EQ(rows[i + 1].method, "THM2");
    EXPECT_EQ(rows[i].delta, rows[i + 1].delta);
    EXPECT_EQ(rows[i].n_runs, 500);
    EXPECT_GE(rows[i + 1].n_violations, rows[i].n_violations);
    EXPECT_DOUBLE_EQ(rows[i + 1].rate, rows[i + 1].n_violations / 500.0);
  }
}

TEST(Violation, CountsAddAcrossRunRanges) {
  auto cfg = small(ExperimentTag::Ex1Violation, 300);
  cfg.workers = 1;
  const auto whole = run_ex1_violation(cfg);
  cfg.workers = 3;
  const auto sharded = run_ex1_violation(cfg);
  EXPECT_EQ(to_csv(whole), to_csv(sharded));
}

TEST(Shrink, QualitativeShapeOnShortRun) {
  auto cfg = ExperimentConfig::defaults(ExperimentTag::Ex2Shrink);
  cfg.horizon = 200;
  cfg.eval_set_size = 200;
  const auto data = run_ex2_shrink(cfg);
  const auto a = analyze_shrink(data);
  EXPECT_EQ(data.rows.size(), 3u * a.reported_times);
  EXPECT_GT(a.compared_times, 0u);
  EXPECT_TRUE(a.structured_below_lti);
  EXPECT_LT(a.structured_last_rhs, a.structured_first_rhs);
  // Before seven samples the LTI Gram matrix cannot be invertible.
  EXPECT_EQ(cell_to_string(data.rows[1].cells[3]), "inf");
  EXPECT_EQ(cell_to_string(data.rows[1].cells[2]), "inf");
}

TEST(Determinism, EveryExperimentIgnoresWorkerCount) {
  for (auto tag : {ExperimentTag::Ex1Bands, ExperimentTag::Ex1BetaSweep, ExperimentTag::Ex1Violation,
                   ExperimentTag::Ex2Shrink}) {
    auto cfg = small(tag, tag == ExperimentTag::Ex2Shrink ? 3 : 12);
    if (tag == ExperimentTag::Ex2Shrink) {
      cfg.horizon = 60;
      cfg.eval_set_size = 50;
    }
    cfg.workers = 1;
    const std::string one = to_csv(run_experiment(cfg));
    cfg.workers = 4;
    const std::string four = to_csv(run_experiment(cfg));
    EXPECT_EQ(one, four) << to_string(tag);
    EXPECT_EQ(one, to_csv(run_experiment(cfg))) << to_string(tag);
  }
}

TEST(Aggregate, IdentityOrderIndependenceAndErrors) {
  auto cfg = small(ExperimentTag::Ex1BetaSweep, 4);
  const auto a = run_ex1_beta_sweep(cfg);
  cfg.base_seed = 9;
  const auto b = run_ex1_beta_sweep(cfg);
  EXPECT_EQ(to_csv(aggregate({a})), to_csv(a));
  EXPECT_EQ(sorted_lines(to_csv(aggregate({a, b}))), sorted_lines(to_csv(aggregate({b, a}))));
  const auto v = run_ex1_violation(small(ExperimentTag::Ex1Violation, 10));
  try {
    aggregate({a, v});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
  }
  FigureData bad = a;
  bad.rows.front().cells.pop_back();
  EXPECT_THROW(aggregate({bad}), Error);
  EXPECT_THROW(aggregate({}), Error);
}

TEST(Aggregate, ViolationCountsAreSummed) {
  auto cfg = small(ExperimentTag::Ex1Violation, 50);
  const auto a = run_ex1_violation(cfg);
  cfg.base_seed = 2;
  const auto b = run_ex1_violation(cfg);
  const auto sum = violation_rows(aggregate({a, b}));
  const auto ra = violation_rows(a);
  const auto rb = violation_rows(b);
  for (std::size_t i = 0; i < sum.size(); ++i) {
    EXPECT_EQ(sum[i].n_runs, 100);
    EXPECT_EQ(sum[i].n_violations, ra[i].n_violations + rb[i].n_violations);
  }
}

TEST(FigureData, MetaAndJsonRows) {
  auto cfg = ExperimentConfig::defaults(ExperimentTag::Ex2Shrink);
  cfg.horizon = 10;
  cfg.eval_set_size = 10;
  const auto data = run_ex2_shrink(cfg);
  for (const char* key : {"experiment", "config", "base_seed", "schema_version", "code_version"}) {
    EXPECT_TRUE(data.meta.contains(key)) << key;
  }
  EXPECT_EQ(data.meta["experiment"], "EX2_SHRINK");
  const auto rows = to_json_rows(data);
  ASSERT_EQ(rows.size(), data.rows.size());
  EXPECT_EQ(rows[1]["method"], "lti_fr");
  EXPECT_EQ(rows[1]["rhs"], "inf");
  EXPECT_TRUE(rows[0]["rhs"].is_number());
  EXPECT_EQ(data.column("rhs"), 3u);
  EXPECT_THROW(data.column("nope"), Error);
}

TEST(Summaries, OneLinePerExperiment) {
  const auto s = summarize(run_ex1_violation(small(ExperimentTag::Ex1Violation, 20)));
  EXPECT_EQ(s.find('\n'), std::string::npos);
  EXPECT_NE(s.find("EX1_VIOLATION"), std::string::npos);
}
