#include "snm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "snm/bounds.hpp"
#include "snm/io.hpp"
#include "snm/parallel.hpp"

namespace snm {
namespace {

void require_config(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ParamOutOfRange, what);
}

RngStream run_stream(const ExperimentConfig& cfg, std::uint64_t run) {
  return {cfg.base_seed, run};
}

nlohmann::json make_meta(const ExperimentConfig& cfg) {
  return {{"experiment", std::string(to_string(cfg.experiment))},
          {"config", cfg.to_json()},
          {"base_seed", cfg.base_seed},
          {"schema_version", kSchemaVersion},
          {"code_version", kCodeVersion}};
}

/// Splits runs across workers (run r goes to shard r mod W) and merges.
template <class PerRun>
FigureData sharded(const ExperimentConfig& cfg, PerRun&& per_run) {
  const unsigned workers =
      std::min<unsigned>(resolve_workers(cfg.workers), static_cast<unsigned>(cfg.n_runs));
  auto shards = parallel_map(workers, workers, [&](std::size_t w) {
    FigureData part;
    part.experiment = cfg.experiment;
    for (std::size_t r = w; r < cfg.n_runs; r += workers) per_run(r, part);
    return part;
  });
  FigureData out = aggregate(shards);
  out.meta = make_meta(cfg);
  return out;
}

PolyClosedLoop ex1_system(const ExperimentConfig& cfg) {
  PolyClosedLoop sys;
  sys.theta_true = ex1_theta_true();
  sys.c_w = cfg.c_w;
  sys.horizon = cfg.horizon;
  return sys;
}

/// Estimator states after t = 0..T updates on an Example-1 trajectory.
std::vector<EstimatorState> ex1_states(const SimulatedTrajectory& traj) {
  Prior prior{Vector::Zero(4), poly_l2_gram(), 0.0};
  std::vector<EstimatorState> states;
  states.reserve(traj.observations.size() + 1);
  states.push_back(EstimatorState::init(std::move(prior), SymMatrix::identity(1), 1, 4));
  for (const auto& obs : traj.observations) states.push_back(states.back().update(obs));
  return states;
}

double ex1_c_theta(const ExperimentConfig& cfg) {
  return cfg.c_theta_grid.empty() ? ex1_prior_radius() : cfg.c_theta_grid.front();
}

std::vector<FigureRow> band_rows(const SimulatedTrajectory& traj, const ExperimentConfig& cfg,
                                 std::uint64_t run) {
  const Vector theta_true = ex1_theta_true();
  const EstimatorState final_state = ex1_states(traj).back();
  const SymMatrix& p = final_state.prior().p;
  const Radius beta =
      beta_thm2({cfg.c_w, ex1_c_theta(cfg), cfg.delta_grid.front()}, p, final_state.gram());
  const SpdFactor f = cholesky(p + final_state.gram());
  const Vector theta_hat = f.solve(final_state.rhs());

  std::vector<FigureRow> rows;
  const std::size_t n = cfg.u_grid_points;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n - 1);
    const ExtendedReal half = output_radius(poly_regressor(u), f, beta);
    rows.push_back({run,
                    {static_cast<std::int64_t>(run), u, poly_eval(theta_true, u),
                     poly_eval(theta_hat, u), half}});
  }
  return rows;
}

}  // namespace

Vector ex1_theta_true() { return (Vector(4) << 0.0, 1.0, 0.0, -1.0).finished(); }

double ex1_prior_radius() {
  return std::sqrt(weighted_sq_norm(ex1_theta_true(), poly_l2_gram()));
}

std::vector<double> ex1_default_c_theta_grid() {
  const double c = ex1_prior_radius();
  std::vector<double> grid;
  constexpr int kPoints = 20;
  for (int k = 0; k < kPoints; ++k) {
    const double e = -1.0 + 2.0 * k / (kPoints - 1);
    grid.push_back(c * std::pow(10.0, e));
  }
  return grid;
}

std::vector<double> ex1_default_delta_grid() { return {0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5}; }

std::vector<std::size_t> log_spaced_times(std::size_t horizon, std::size_t points) {
  std::set<std::size_t> times;
  if (horizon == 0) return {};
  if (points <= 1) return {horizon};
  const double top = std::log(static_cast<double>(horizon));
  for (std::size_t k = 0; k < points; ++k) {
    const double e = top * static_cast<double>(k) / static_cast<double>(points - 1);
    times.insert(std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::exp(e))), 1,
                                         horizon));
  }
  times.insert(horizon);
  return {times.begin(), times.end()};
}

ExperimentConfig ExperimentConfig::defaults(ExperimentTag tag) {
  ExperimentConfig cfg;
  cfg.experiment = tag;
  switch (tag) {
    case ExperimentTag::Ex1Bands:
      cfg.n_runs = 20;
      cfg.delta_grid = {0.05};
      cfg.c_theta_grid = {ex1_prior_radius()};
      break;
    case ExperimentTag::Ex1BetaSweep:
      cfg.n_runs = 20;
      cfg.delta_grid = {0.05};
      cfg.c_theta_grid = ex1_default_c_theta_grid();
      break;
    case ExperimentTag::Ex1Violation:
      cfg.n_runs = 10000;
      cfg.delta_grid = ex1_default_delta_grid();
      cfg.c_theta_grid = {ex1_prior_radius()};
      break;
    case ExperimentTag::Ex2Shrink:
      cfg.n_runs = 1;
      cfg.horizon = 1000;
      cfg.delta_grid = {0.05};
      cfg.c_theta_grid = {0.0};
      cfg.c_w = 1.0 / std::sqrt(3.0);
      break;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  require_config(n_runs >= 1, "n_runs must be >= 1");
  require_config(horizon >= 1, "horizon must be >= 1");
  require_config(!delta_grid.empty(), "delta grid must be nonempty");
  require_config(!c_theta_grid.empty(), "c_theta grid must be nonempty");
  for (double d : delta_grid) require_config(d > 0.0 && d < 1.0, "delta must lie in (0, 1)");
  for (double c : c_theta_grid) require_config(c >= 0.0 && std::isfinite(c), "c_theta must be >= 0");
  require_config(c_w > 0.0 && std::isfinite(c_w), "c_w must be positive");
  require_config(eval_set_size >= 1, "eval set size must be >= 1");
  require_config(u_grid_points >= 1, "u grid needs at least one point");
  require_config(report_points >= 1, "report grid needs at least one point");
  require_config(theta_max > 0.0, "theta_max must be positive");
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"experiment", std::string(to_string(experiment))},
          {"n_runs", n_runs},
          {"horizon", horizon},
          {"delta_grid", delta_grid},
          {"c_theta_grid", c_theta_grid},
          {"base_seed", base_seed},
          {"eval_set_size", eval_set_size},
          {"c_w", c_w},
          {"u_grid_points", u_grid_points},
          {"report_points", report_points},
          {"theta_max", theta_max}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("experiment")) {
    throw Error(ErrorCode::SchemaMismatch, "config must be an object with an \"experiment\" key");
  }
  ExperimentConfig cfg = defaults(experiment_tag_from_string(j.at("experiment").get<std::string>()));
  static const std::set<std::string> known{"experiment", "n_runs", "horizon", "delta_grid",
                                           "c_theta_grid", "base_seed", "eval_set_size", "c_w",
                                           "u_grid_points", "report_points", "theta_max"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw Error(ErrorCode::SchemaMismatch, "unknown config key " + key);
    }
    if (j.contains("n_runs")) cfg.n_runs = j["n_runs"].get<std::size_t>();
    if (j.contains("horizon")) cfg.horizon = j["horizon"].get<std::size_t>();
    if (j.contains("delta_grid")) cfg.delta_grid = j["delta_grid"].get<std::vector<double>>();
    if (j.contains("c_theta_grid")) cfg.c_theta_grid = j["c_theta_grid"].get<std::vector<double>>();
    if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("eval_set_size")) cfg.eval_set_size = j["eval_set_size"].get<std::size_t>();
    if (j.contains("c_w")) cfg.c_w = j["c_w"].get<double>();
    if (j.contains("u_grid_points")) cfg.u_grid_points = j["u_grid_points"].get<std::size_t>();
    if (j.contains("report_points")) cfg.report_points = j["report_points"].get<std::size_t>();
    if (j.contains("theta_max")) cfg.theta_max = j["theta_max"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("bad config value: ") + e.what());
  }
  return cfg;
}

FigureData run_ex1_bands(const ExperimentConfig& cfg) {
  cfg.validate();
  require_config(cfg.experiment == ExperimentTag::Ex1Bands, "config is not EX1_BANDS");
  const PolyClosedLoop sys = ex1_system(cfg);
  return sharded(cfg, [&](std::uint64_t r, FigureData& part) {
    const auto traj = simulate_poly(sys, run_stream(cfg, r));
    for (auto& row : band_rows(traj, cfg, r)) part.rows.push_back(std::move(row));
  });
}

FigureData run_ex1_beta_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  require_config(cfg.experiment == ExperimentTag::Ex1BetaSweep, "config is not EX1_BETA_SWEEP");
  const PolyClosedLoop sys = ex1_system(cfg);
  const Vector theta_true = ex1_theta_true();
  const double delta = cfg.delta_grid.front();
  return sharded(cfg, [&](std::uint64_t r, FigureData& part) {
    const auto traj = simulate_poly(sys, run_stream(cfg, r));
    const EstimatorState final_state = ex1_states(traj).back();
    const ExtendedReal lhs = final_state.self_normalized_error(theta_true);
    for (double c_theta : cfg.c_theta_grid) {
      const BoundParams params{cfg.c_w, c_theta, delta};
      const SymMatrix& p = final_state.prior().p;
      const Radius b2 = beta_thm2(params, p, final_state.gram());
      const Radius b25 = beta_existing_eq25(params, p, final_state.gram());
      part.rows.push_back({r, {static_cast<std::int64_t>(r), c_theta, lhs, b2.value, b25.value}});
    }
  });
}

FigureData run_ex1_violation(const ExperimentConfig& cfg) {
  cfg.validate();
  require_config(cfg.experiment == ExperimentTag::Ex1Violation, "config is not EX1_VIOLATION");
  const PolyClosedLoop sys = ex1_system(cfg);
  const Vector theta_true = ex1_theta_true();
  const double c_theta = ex1_c_theta(cfg);
  const std::size_t nd = cfg.delta_grid.size();
  const std::string thm2(to_string(BoundMethod::Thm2));
  const std::string eq25(to_string(BoundMethod::ExistingEq25));

  return sharded(cfg, [&](std::uint64_t r, FigureData& part) {
    const auto traj = simulate_poly(sys, run_stream(cfg, r));
    std::vector<std::int64_t> hit_thm2(nd, 0), hit_eq25(nd, 0);
    // A run counts once if the inequality fails at any t (uniform in time).
    for (const auto& state : ex1_states(traj)) {
      const ExtendedReal lhs = state.self_normalized_error(theta_true);
      for (std::size_t k = 0; k < nd; ++k) {
        const BoundParams params{cfg.c_w, c_theta, cfg.delta_grid[k]};
        if (lhs > beta_thm2(params, state.prior().p, state.gram()).value) hit_thm2[k] = 1;
        if (lhs > beta_existing_eq25(params, state.prior().p, state.gram()).value) hit_eq25[k] = 1;
      }
    }
    for (std::size_t k = 0; k < nd; ++k) {
      const double d = cfg.delta_grid[k];
      part.rows.push_back({0, {d, thm2, std::int64_t{1}, hit_thm2[k], static_cast<double>(hit_thm2[k])}});
      part.rows.push_back({0, {d, eq25, std::int64_t{1}, hit_eq25[k], static_cast<double>(hit_eq25[k])}});
    }
  });
}

FigureData run_ex2_shrink(const ExperimentConfig& cfg) {
  cfg.validate();
  require_config(cfg.experiment == ExperimentTag::Ex2Shrink, "config is not EX2_SHRINK");
  HeatChain sys;
  sys.horizon = cfg.horizon;
  sys.theta_max = cfg.theta_max;
  const Eigen::Index nx = sys.n_x;
  const Eigen::Index nphi = nx + 2;
  const Vector theta_true = (Vector(2) << sys.alpha_true, sys.beta_true).finished();
  const Matrix big_theta_true = lti_theta(lti_true_matrices(sys.alpha_true, sys.beta_true, nx));
  const auto eval_set = sample_eval_set({cfg.base_seed, kEvalSetStream}, cfg.eval_set_size, nx,
                                        cfg.theta_max);
  const std::vector<std::size_t> times = log_spaced_times(cfg.horizon, cfg.report_points);
  const BoundParams params{cfg.c_w, cfg.c_theta_grid.front(), cfg.delta_grid.front()};
  const double scale2 = cfg.theta_max * cfg.theta_max;
  const SymMatrix vbar = scale2 * SymMatrix::identity(2);
  const SymMatrix phibar = scale2 * SymMatrix::identity(nphi);

  return sharded(cfg, [&](std::uint64_t r, FigureData& part) {
    const auto traj = simulate_heat(sys, run_stream(cfg, r));
    EstimatorState structured =
        EstimatorState::init(Prior::ols(2), SymMatrix::identity(nx), nx, 2);
    LtiEstimator lti(nx, nphi);
    std::size_t consumed = 0;
    for (std::size_t t : times) {
      for (; consumed < t; ++consumed) {
        structured = structured.update(traj.observations[consumed]);
        lti = lti.update(traj.lti_phis[consumed], traj.states[consumed + 1]);
      }
      const auto t_cell = static_cast<std::int64_t>(t);

      // Structure-exploiting identification of (α, β).
      ExtendedReal lhs_s = ExtendedReal::unbounded();
      ExtendedReal rhs_s = ExtendedReal::unbounded();
      if (auto f = structured.regularized_factor()) {
        const Vector theta_hat = f->solve(structured.rhs());
        const Radius beta = beta_thm3(params, structured.prior().p, structured.gram(), vbar);
        double worst_err = 0.0;
        double worst_sigma = 0.0;
        for (const auto& [x, u] : eval_set) {
          const Matrix m = structured_regressor(x, u);
          worst_err = std::max(worst_err, (m * (theta_true - theta_hat)).norm());
          worst_sigma = std::max(worst_sigma, whitened_op_norm(m, *f));
        }
        lhs_s = ExtendedReal(worst_err);
        rhs_s = beta.value * ExtendedReal(worst_sigma);
      }
      part.rows.push_back({r, {t_cell, std::string("structured"), lhs_s, rhs_s}});

      // Structure-agnostic identification of [A B].
      ExtendedReal lhs_l = ExtendedReal::unbounded();
      ExtendedReal rhs_fr = ExtendedReal::unbounded();
      ExtendedReal rhs_op = ExtendedReal::unbounded();
      if (auto f = try_cholesky(lti.gram())) {
        const Matrix err = big_theta_true - f->solve(Matrix(lti.cross().transpose())).transpose();
        double worst_err = 0.0;
        double worst_norm = 0.0;
        for (const auto& [x, u] : eval_set) {
          Vector phi(nphi);
          phi << x, u;
          worst_err = std::max(worst_err, (err * phi).norm());
          worst_norm = std::max(worst_norm, std::sqrt(inv_weighted_sq_norm(phi, *f)));
        }
        lhs_l = ExtendedReal(worst_err);
        rhs_fr = beta_lti_frobenius(params, nx, lti.gram(), phibar).value * ExtendedReal(worst_norm);
        rhs_op = beta_lti_operator(params, nx, lti.gram(), phibar).value * ExtendedReal(worst_norm);
      }
      part.rows.push_back({r, {t_cell, std::string("lti_fr"), lhs_l, rhs_fr}});
      part.rows.push_back({r, {t_cell, std::string("lti_op"), lhs_l, rhs_op}});
    }
  });
}

FigureData run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentTag::Ex1Bands: return run_ex1_bands(cfg);
    case ExperimentTag::Ex1BetaSweep: return run_ex1_beta_sweep(cfg);
    case ExperimentTag::Ex1Violation: return run_ex1_violation(cfg);
    case ExperimentTag::Ex2Shrink: return run_ex2_shrink(cfg);
  }
  throw Error(ErrorCode::SchemaMismatch, "unknown experiment");
}

BandContainment band_containment(const FigureData& bands) {
  if (bands.experiment != ExperimentTag::Ex1Bands) {
    throw Error(ErrorCode::SchemaMismatch, "band containment needs EX1_BANDS data");
  }
  std::map<std::int64_t, bool> inside;
  for (const auto& row : bands.rows) {
    const auto run = std::get<std::int64_t>(row.cells[0]);
    const double gap = std::abs(cell_to_double(row.cells[2]) - cell_to_double(row.cells[3]));
    const bool ok = gap <= cell_to_double(row.cells[4]);
    auto [it, fresh] = inside.emplace(run, ok);
    if (!fresh) it->second = it->second && ok;
  }
  BandContainment res;
  res.runs = inside.size();
  for (const auto& [run, ok] : inside) res.contained += ok ? 1 : 0;
  return res;
}

std::vector<ViolationRow> violation_rows(const FigureData& violation) {
  if (violation.experiment != ExperimentTag::Ex1Violation) {
    throw Error(ErrorCode::SchemaMismatch, "violation rows need EX1_VIOLATION data");
  }
  std::vector<ViolationRow> out;
  for (const auto& row : violation.rows) {
    out.push_back({std::get<double>(row.cells[0]), std::get<std::string>(row.cells[1]),
                   std::get<std::int64_t>(row.cells[2]), std::get<std::int64_t>(row.cells[3]),
                   std::get<double>(row.cells[4])});
  }
  return out;
}

ShrinkAnalysis analyze_shrink(const FigureData& shrink) {
  if (shrink.experiment != ExperimentTag::Ex2Shrink) {
    throw Error(ErrorCode::SchemaMismatch, "shrink analysis needs EX2_SHRINK data");
  }
  struct AtTime {
    std::map<std::string, std::pair<ExtendedReal, ExtendedReal>> by_method;
  };
  std::map<std::int64_t, AtTime> table;
  for (const auto& row : shrink.rows) {
    table[std::get<std::int64_t>(row.cells[0])].by_method[std::get<std::string>(row.cells[1])] = {
        std::get<ExtendedReal>(row.cells[2]), std::get<ExtendedReal>(row.cells[3])};
  }

  ShrinkAnalysis a;
  a.reported_times = table.size();
  bool seen_first = false;
  for (const auto& [t, at] : table) {
    const auto& s = at.by_method.at("structured");
    const auto& fr = at.by_method.at("lti_fr");
    const auto& op = at.by_method.at("lti_op");
    if (s.second.is_finite() && fr.second.is_finite() && op.second.is_finite()) {
      ++a.compared_times;
      if (!(s.second < fr.second && s.second < op.second)) a.structured_below_lti = false;
    }
    if (s.second.is_finite()) {
      if (!seen_first) {
        a.structured_first_rhs = s.second.value();
        seen_first = true;
      }
      a.structured_last_rhs = s.second.value();
    }
    for (const auto& [method, lr] : at.by_method) {
      if (lr.first.is_unbounded() && lr.second.is_unbounded()) continue;  // no estimate yet
      ++a.lhs_checks;
      if (lr.first <= lr.second) {
        ++a.lhs_within;
      } else {
        a.flagged.push_back(method + "@t=" + std::to_string(t));
      }
    }
  }
  return a;
}

std::string summarize(const FigureData& data) {
  std::ostringstream out;
  out << to_string(data.experiment) << ": " << data.rows.size() << " rows";
  switch (data.experiment) {
    case ExperimentTag::Ex1Bands: {
      const auto c = band_containment(data);
      out << ", truth inside band for " << c.contained << "/" << c.runs << " runs";
      break;
    }
    case ExperimentTag::Ex1BetaSweep:
      break;
    case ExperimentTag::Ex1Violation: {
      out << ", THM2 rates";
      for (const auto& row : violation_rows(data)) {
        if (row.method == to_string(BoundMethod::Thm2)) {
          out << " " << format_double(row.delta) << ":" << format_double(row.rate);
        }
      }
      break;
    }
    case ExperimentTag::Ex2Shrink: {
      const auto a = analyze_shrink(data);
      out << ", structured rhs " << format_double(a.structured_first_rhs) << " -> "
          << format_double(a.structured_last_rhs) << ", lhs<=rhs at " << a.lhs_within << "/"
          << a.lhs_checks;
      if (!a.flagged.empty()) out << " (flagged " << a.flagged.size() << ")";
      break;
    }
  }
  return out.str();
}

}  // namespace snm
