#pragma once

// Figure-producing experiments. Every run r draws from the stream
// (base_seed, r), runs are sharded across workers by index, and shards are
// merged with aggregate(), so the output does not depend on the worker count.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "snm/figure_data.hpp"
#include "snm/simulators.hpp"

namespace snm {

inline constexpr const char* kCodeVersion = "0.1.0";

/// Stream index reserved for the fixed evaluation set of the heat-chain study.
inline constexpr std::uint64_t kEvalSetStream = 0x8000'0000'0000'0000ull;

struct ExperimentConfig {
  ExperimentTag experiment = ExperimentTag::Ex1Violation;
  std::size_t n_runs = 10000;
  std::size_t horizon = 20;
  std::vector<double> delta_grid;
  std::vector<double> c_theta_grid;
  std::uint64_t base_seed = 1;
  std::size_t eval_set_size = 1000;
  double c_w = 0.2;
  std::size_t u_grid_points = 101;
  std::size_t report_points = 30;
  double theta_max = 100.0;
  /// 0 selects the available hardware parallelism. Not part of the output.
  unsigned workers = 0;

  static ExperimentConfig defaults(ExperimentTag tag);
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys take the defaults of the tag named by "experiment".
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// θ★ of the polynomial task, (0, 1, 0, −1), i.e. g(u) = u − u³.
Vector ex1_theta_true();
/// ‖θ★‖_P under the L² Gram prior: √(16/105).
double ex1_prior_radius();
/// 20 log-spaced points on [0.1·‖θ★‖_P, 10·‖θ★‖_P].
std::vector<double> ex1_default_c_theta_grid();
std::vector<double> ex1_default_delta_grid();
/// Integer times 1..horizon, approximately log-spaced, ending at horizon.
std::vector<std::size_t> log_spaced_times(std::size_t horizon, std::size_t points);

FigureData run_ex1_bands(const ExperimentConfig& cfg);
FigureData run_ex1_beta_sweep(const ExperimentConfig& cfg);
FigureData run_ex1_violation(const ExperimentConfig& cfg);
FigureData run_ex2_shrink(const ExperimentConfig& cfg);
FigureData run_experiment(const ExperimentConfig& cfg);

struct BandContainment {
  std::size_t runs = 0;
  std::size_t contained = 0;  ///< runs whose band holds g(·;θ★) at every grid point
  double fraction() const { return runs ? static_cast<double>(contained) / runs : 0.0; }
};
BandContainment band_containment(const FigureData& bands);

struct ViolationRow {
  double delta = 0.0;
  std::string method;
  std::int64_t n_runs = 0;
  std::int64_t n_violations = 0;
  double rate = 0.0;
};
std::vector<ViolationRow> violation_rows(const FigureData& violation);

struct ShrinkAnalysis {
  std::size_t reported_times = 0;
  std::size_t compared_times = 0;       ///< times where all three rhs are finite
  bool structured_below_lti = true;     ///< structured rhs < both LTI rhs at every compared time
  double structured_first_rhs = 0.0;    ///< at the first finite time
  double structured_last_rhs = 0.0;     ///< at the final reported time
  std::size_t lhs_checks = 0;
  std::size_t lhs_within = 0;           ///< (time, method) pairs with lhs ≤ rhs
  std::vector<std::string> flagged;     ///< realized violations, reported not failed
  double lhs_within_fraction() const {
    return lhs_checks ? static_cast<double>(lhs_within) / lhs_checks : 1.0;
  }
};
ShrinkAnalysis analyze_shrink(const FigureData& shrink);

/// One-line human summary of an experiment's output.
std::string summarize(const FigureData& data);

}  // namespace snm
