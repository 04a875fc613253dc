#include "snm/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "snm/io.hpp"
#include "snm/verification.hpp"

namespace snm {
namespace {

const CLI::Validator kOpenUnit(
    [](std::string& s) -> std::string {
      double v = 0.0;
      try {
        v = std::stod(s);
      } catch (const std::exception&) {
        return "value " + s + " is not a number";
      }
      return v > 0.0 && v < 1.0 ? "" : "value " + s + " must lie in (0, 1)";
    },
    "in (0,1)");

const CLI::Validator kNonNegative(
    [](std::string& s) -> std::string {
      double v = -1.0;
      try {
        v = std::stod(s);
      } catch (const std::exception&) {
        return "value " + s + " is not a number";
      }
      return v >= 0.0 ? "" : "value " + s + " must be >= 0";
    },
    ">= 0");

const CLI::Validator kPositive(
    [](std::string& s) -> std::string {
      double v = 0.0;
      try {
        v = std::stod(s);
      } catch (const std::exception&) {
        return "value " + s + " is not a number";
      }
      return v > 0.0 ? "" : "value " + s + " must be > 0";
    },
    "> 0");

ExperimentTag tag_of(const std::string& sub) {
  if (sub == "example1" || sub == "bands") return ExperimentTag::Ex1Bands;
  if (sub == "sweep") return ExperimentTag::Ex1BetaSweep;
  if (sub == "violation") return ExperimentTag::Ex1Violation;
  return ExperimentTag::Ex2Shrink;
}

/// Flags bound to one subcommand, with the setters that copy explicitly given
/// values onto the final config.
struct SubcommandFlags {
  CLI::App* app = nullptr;
  ExperimentConfig values;
  double delta = 0.05;
  double c_theta = 0.0;
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> setters;

  template <class T, class Setter>
  CLI::Option* add(const std::string& name, T& target, const std::string& help, Setter set) {
    CLI::Option* opt = app->add_option(name, target, help)->capture_default_str();
    setters.emplace_back(opt, std::move(set));
    return opt;
  }
};

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

/// The trajectory CSV as an array of objects; every field is numeric.
nlohmann::json csv_to_json_rows(const std::string& csv) {
  const auto lines = split_lines(csv);
  nlohmann::json arr = nlohmann::json::array();
  if (lines.empty()) return arr;
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string field; std::getline(in, field, ',');) out.push_back(field);
    return out;
  };
  const auto header = split(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i]);
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t k = 0; k < header.size() && k < fields.size(); ++k) {
      if (header[k] == "t") {
        obj[header[k]] = std::stoll(fields[k]);
      } else {
        obj[header[k]] = std::stod(fields[k]);
      }
    }
    arr.push_back(std::move(obj));
  }
  return arr;
}

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path == "-") {
    out << contents;
  } else {
    write_file_atomic(path, contents);
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, path + ": " + e.what());
  }
}

VerificationRecord coverage_record(const std::string& check, nlohmann::json params,
                                   const CoverageResult& c, std::uint64_t seed) {
  VerificationRecord rec;
  rec.check = check;
  params["delta"] = c.delta;
  params["slack"] = c.slack;
  rec.params = std::move(params);
  rec.n_runs = c.n_runs;
  rec.n_violations = c.n_violations;
  rec.rate = c.rate();
  rec.threshold = c.delta + c.slack;
  rec.pass = c.pass();
  rec.seed = seed;
  return rec;
}

int run_example1(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  PolyClosedLoop sys;
  sys.c_w = inv.config.c_w;
  sys.horizon = inv.config.horizon;
  const RngStream stream{inv.config.base_seed, inv.run_index};
  const SimulatedTrajectory traj = simulate_poly(sys, stream);
  const std::string csv = trajectory_csv(traj);
  std::ostream& summary = inv.out_path == "-" ? err : out;
  if (inv.format == OutputFormat::Json) {
    emit(inv.out_path, csv_to_json_rows(csv).dump(2) + "\n", out);
    if (inv.out_path != "-") {
      write_file_atomic(inv.out_path + ".meta.json",
                        nlohmann::json{{"config", inv.config.to_json()},
                                       {"seed", stream.seed},
                                       {"stream_index", stream.stream_index},
                                       {"phase", traj.phase}}
                                .dump(2) + "\n");
    }
  } else if (inv.out_path == "-") {
    out << csv;
  } else {
    write_trajectory(traj, inv.out_path, inv.config.to_json().dump(), stream);
  }
  summary << "example1: run " << inv.run_index << ", " << traj.observations.size()
          << " steps, phase " << format_double(traj.phase) << "\n";
  return 0;
}

int run_figure(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  const FigureData data = run_experiment(inv.config);
  const std::string body =
      inv.format == OutputFormat::Json ? to_json_rows(data).dump(2) + "\n" : to_csv(data);
  emit(inv.out_path, body, out);
  if (inv.out_path != "-") {
    write_file_atomic(inv.out_path + ".meta.json", data.meta.dump(2) + "\n");
  }
  if (inv.subcommand == "example2" && !inv.trajectory_path.empty()) {
    HeatChain sys;
    sys.horizon = inv.config.horizon;
    sys.theta_max = inv.config.theta_max;
    const RngStream stream{inv.config.base_seed, 0};
    write_trajectory(simulate_heat(sys, stream), inv.trajectory_path, inv.config.to_json().dump(),
                     stream);
  }
  (inv.out_path == "-" ? err : out) << summarize(data) << "\n";
  return 0;
}

int run_verify(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  const auto records = run_verification(inv.verify, inv.config.base_seed, inv.config.workers);
  std::string body;
  if (inv.format == OutputFormat::Json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) arr.push_back(r.to_json());
    body = arr.dump(2) + "\n";
  } else {
    std::ostringstream csv;
    csv << "check,n_runs,n_violations,rate,threshold,pass,seed\n";
    for (const auto& r : records) {
      csv << r.check << ',' << r.n_runs << ',' << r.n_violations << ',' << format_double(r.rate)
          << ',' << format_double(r.threshold) << ',' << (r.pass ? "true" : "false") << ','
          << r.seed << '\n';
    }
    body = csv.str();
  }
  emit(inv.out_path, body, out);
  const auto failed = std::count_if(records.begin(), records.end(),
                                    [](const VerificationRecord& r) { return !r.pass; });
  (inv.out_path == "-" ? err : out) << "verify: " << records.size() - failed << "/"
                                    << records.size() << " checks passed\n";
  return failed ? 1 : 0;
}

}  // namespace

std::vector<VerificationRecord> run_verification(const VerifyOptions& opts, std::uint64_t seed,
                                                 unsigned workers) {
  static const std::vector<std::string> all{"lemma1", "gaussian_integral", "lemma2", "theorem1",
                                            "corollary2"};
  if (opts.check != "all" && std::find(all.begin(), all.end(), opts.check) == all.end()) {
    throw Error(ErrorCode::ParamOutOfRange, "unknown check " + opts.check);
  }
  auto selected = [&](const std::string& name) { return opts.check == "all" || opts.check == name; };
  std::vector<VerificationRecord> records;

  if (selected("lemma1")) {
    RandomGenerator gen(RngStream{seed, 1});
    for (std::size_t k = 0; k < opts.cases; ++k) {
      const Lemma1Case c = random_lemma1_case(gen);
      const Lemma1Result res = mc_check_lemma1(c.h, c.r, c.x, opts.samples, RngStream{seed, 1}.substream(k));
      VerificationRecord rec;
      rec.check = "lemma1";
      rec.params = {{"case", k}, {"dim", c.h.dim()}, {"std_error", res.std_error}};
      rec.n_runs = opts.samples;
      rec.n_violations = res.pass ? 0 : 1;
      rec.rate = res.lhs_estimate;
      rec.threshold = res.rhs;
      rec.pass = res.pass;
      rec.seed = seed;
      records.push_back(std::move(rec));
    }
  }
  if (selected("gaussian_integral")) {
    constexpr double kTol = 1e-6;
    RandomGenerator gen(RngStream{seed, 2});
    for (std::size_t k = 0; k < opts.cases; ++k) {
      const QuadratureCase c = random_quadrature_case(gen);
      const QuadratureResult res = quadrature_check_gaussian_integral(c.sigma, c.b);
      VerificationRecord rec;
      rec.check = "gaussian_integral";
      rec.params = {{"case", k}, {"dim", c.sigma.dim()}, {"numeric", res.numeric},
                    {"closed_form", res.closed_form}};
      rec.rate = res.rel_error();
      rec.threshold = kTol;
      rec.pass = res.rel_error() <= kTol;
      rec.n_violations = rec.pass ? 0 : 1;
      rec.seed = seed;
      records.push_back(std::move(rec));
    }
  }
  if (selected("lemma2")) {
    for (std::size_t k = 0; k < opts.deltas.size(); ++k) {
      const auto c = mc_check_lemma2(opts.runs, opts.horizon, opts.deltas[k],
                                     RngStream{seed, 3}.substream(k),
                                     SupermartingaleProcess::ExpRandomWalk, workers);
      records.push_back(coverage_record("lemma2", {{"horizon", opts.horizon}}, c, seed));
    }
  }
  if (selected("theorem1")) {
    for (auto plan : {RegressorPlan::DeterministicFixed, RegressorPlan::StateFeedback}) {
      const SnmTestCase tc = reference_snm_case(plan);
      const auto results = mc_check_theorem1(tc, opts.runs, opts.deltas,
                                             RngStream{seed, 4}.substream(static_cast<std::uint64_t>(plan)),
                                             workers);
      const char* plan_name =
          plan == RegressorPlan::DeterministicFixed ? "DETERMINISTIC_FIXED" : "STATE_FEEDBACK";
      for (const auto& c : results) {
        records.push_back(
            coverage_record("theorem1", {{"plan", plan_name}, {"horizon", tc.horizon}}, c, seed));
      }
    }
  }
  if (selected("corollary2")) {
    std::uint64_t child = 0;
    for (Eigen::Index n : {1, 2, 5, 10}) {
      const SymMatrix r = SymMatrix::diagonal(Vector::LinSpaced(n, 0.5, 2.0));
      for (double d : opts.deltas) {
        const auto res = mc_check_corollary2(r, opts.runs, d, RngStream{seed, 5}.substream(child++));
        auto rec = coverage_record("corollary2",
                                   {{"n", n}, {"bound", res.threshold},
                                    {"chi2_quantile", res.chi2_quantile},
                                    {"exact_tail", res.exact_tail}},
                                   res.coverage, seed);
        rec.pass = rec.pass && res.chi2_quantile <= res.threshold;
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

ParseOutcome parse_args(const std::vector<std::string>& argv) {
  CLI::App app{"Self-normalized confidence bounds for regularized least squares", "snm_cli"};
  app.require_subcommand(1);
  app.fallthrough(false);

  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::string out_path = "-";
  std::string format = "csv";
  std::size_t run_index = 0;
  std::string trajectory_path;
  VerifyOptions verify;

  std::vector<SubcommandFlags> subs;
  subs.reserve(6);
  const std::vector<std::pair<std::string, std::string>> names{
      {"example1", "Simulate one closed-loop polynomial trajectory"},
      {"bands", "Prediction bands of the polynomial task"},
      {"sweep", "Radius versus c_theta for the new and the existing bound"},
      {"violation", "Uniform-in-time violation frequency versus delta"},
      {"example2", "Heat-chain bound shrinkage, structured versus LTI"},
      {"verify", "Monte Carlo and quadrature checks of the probabilistic lemmas"}};

  for (const auto& [name, help] : names) {
    SubcommandFlags& s = subs.emplace_back();
    s.app = app.add_subcommand(name, help);
    s.app->add_option("--seed", seed, "Base seed (SNM_SEED overrides)")->capture_default_str();
    s.app->add_option("--out", out_path, "Output path, - for standard output")->capture_default_str();
    s.app->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    s.app->add_option("--workers", workers, "Worker threads, 0 = available parallelism")
        ->capture_default_str();

    if (name == "verify") {
      s.app->add_option("--check", verify.check, "Check to run")
          ->check(CLI::IsMember({"lemma1", "lemma2", "theorem1", "corollary2", "gaussian_integral", "all"}))
          ->capture_default_str();
      s.app->add_option("--runs", verify.runs, "Monte Carlo runs per coverage check")
          ->check(CLI::PositiveNumber)->capture_default_str();
      s.app->add_option("--samples", verify.samples, "Samples per lemma1 case")
          ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))
          ->capture_default_str();
      s.app->add_option("--cases", verify.cases, "Random cases for lemma1 and gaussian_integral")
          ->capture_default_str();
      s.app->add_option("--horizon", verify.horizon, "Horizon of the lemma2 process")
          ->capture_default_str();
      s.app->add_option("--deltas", verify.deltas, "Confidence levels")
          ->delimiter(',')->check(kOpenUnit)->capture_default_str();
      continue;
    }

    const ExperimentTag tag = tag_of(name);
    s.values = ExperimentConfig::defaults(tag);
    s.delta = s.values.delta_grid.front();
    s.c_theta = s.values.c_theta_grid.front();
    s.app->add_option("--config", s.config_path, "ExperimentConfig JSON; explicit flags override it");
    s.add("--horizon", s.values.horizon, "Steps per run",
          [&s](ExperimentConfig& c) { c.horizon = s.values.horizon; })
        ->check(CLI::PositiveNumber);
    s.add("--c-w", s.values.c_w, "Noise proxy c_w", [&s](ExperimentConfig& c) { c.c_w = s.values.c_w; })
        ->check(kPositive);
    s.add("--delta", s.delta, "Confidence level delta",
          [&s](ExperimentConfig& c) { c.delta_grid = {s.delta}; })
        ->check(kOpenUnit);
    if (name == "example1") {
      s.app->add_option("--run-index", run_index, "Run whose stream is simulated")->capture_default_str();
      continue;
    }
    s.add("--runs", s.values.n_runs, "Independent runs",
          [&s](ExperimentConfig& c) { c.n_runs = s.values.n_runs; })
        ->check(CLI::PositiveNumber);
    if (name == "violation") {
      s.add("--deltas", s.values.delta_grid, "Delta grid",
            [&s](ExperimentConfig& c) { c.delta_grid = s.values.delta_grid; })
          ->delimiter(',')->check(kOpenUnit);
      s.add("--c-theta", s.c_theta, "Prior radius c_theta",
            [&s](ExperimentConfig& c) { c.c_theta_grid = {s.c_theta}; })
          ->check(kNonNegative);
    } else if (name == "sweep") {
      s.add("--c-thetas", s.values.c_theta_grid, "c_theta grid",
            [&s](ExperimentConfig& c) { c.c_theta_grid = s.values.c_theta_grid; })
          ->delimiter(',')->check(kNonNegative);
    } else if (name == "bands") {
      s.add("--c-theta", s.c_theta, "Prior radius c_theta",
            [&s](ExperimentConfig& c) { c.c_theta_grid = {s.c_theta}; })
          ->check(kNonNegative);
      s.add("--u-grid", s.values.u_grid_points, "Points of the u grid on [-1, 1]",
            [&s](ExperimentConfig& c) { c.u_grid_points = s.values.u_grid_points; })
          ->check(CLI::PositiveNumber);
    } else {
      s.add("--eval-size", s.values.eval_set_size, "Size of the fixed evaluation set",
            [&s](ExperimentConfig& c) { c.eval_set_size = s.values.eval_set_size; })
          ->check(CLI::PositiveNumber);
      s.add("--theta-max", s.values.theta_max, "Temperature scale theta_max",
            [&s](ExperimentConfig& c) { c.theta_max = s.values.theta_max; })
          ->check(kPositive);
      s.add("--report-points", s.values.report_points, "Log-spaced reporting times",
            [&s](ExperimentConfig& c) { c.report_points = s.values.report_points; })
          ->check(CLI::PositiveNumber);
      s.app->add_option("--trajectory", trajectory_path, "Also write run 0's trajectory CSV here");
    }
  }

  ParseOutcome outcome;
  try {
    std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    std::ostringstream text;
    outcome.exit_code = app.exit(e, text, text) == 0 ? 0 : 2;
    outcome.message = text.str();
    return outcome;
  }

  CliInvocation inv;
  SubcommandFlags* chosen = nullptr;
  for (auto& s : subs) {
    if (s.app->parsed()) chosen = &s;
  }
  inv.subcommand = chosen->app->get_name();
  inv.out_path = out_path;
  inv.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  inv.run_index = run_index;
  inv.trajectory_path = trajectory_path;
  inv.verify = verify;

  try {
    if (inv.subcommand != "verify") {
      const ExperimentTag tag = tag_of(inv.subcommand);
      ExperimentConfig cfg = ExperimentConfig::defaults(tag);
      if (!chosen->config_path.empty()) {
        cfg = ExperimentConfig::from_json(read_json_file(chosen->config_path));
        if (cfg.experiment != tag) {
          throw Error(ErrorCode::SchemaMismatch, "--config: experiment " +
                                                     std::string(to_string(cfg.experiment)) +
                                                     " does not match " + inv.subcommand);
        }
        if (chosen->app->count("--seed") == 0) seed = cfg.base_seed;
      }
      for (const auto& [opt, set] : chosen->setters) {
        if (opt->count() > 0) set(cfg);
      }
      inv.config = cfg;
    }
    if (const char* env = std::getenv("SNM_SEED"); env != nullptr && *env != '\0') {
      try {
        std::size_t used = 0;
        seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParamOutOfRange, std::string("SNM_SEED: not an unsigned integer: ") + env);
      }
    }
    inv.config.base_seed = seed;
    inv.config.workers = workers;
    if (inv.subcommand != "verify") inv.config.validate();
  } catch (const Error& e) {
    outcome.exit_code = 2;
    outcome.message = std::string(e.what()) + "\n";
    return outcome;
  }
  outcome.invocation = std::move(inv);
  return outcome;
}

int run(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  try {
    if (inv.subcommand == "example1") return run_example1(inv, out, err);
    if (inv.subcommand == "verify") return run_verify(inv, out, err);
    return run_figure(inv, out, err);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.code() == ErrorCode::Io ? 1 : 2;
  }
}

}  // namespace snm
