#pragma once

// Command-line front end. parse_args() never exits the process; it returns
// either an invocation or an exit code with the text to print.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "snm/experiments.hpp"
#include "snm/verification.hpp"

namespace snm {

enum class OutputFormat { Csv, Json };

struct VerifyOptions {
  std::string check = "all";  ///< lemma1|lemma2|theorem1|corollary2|gaussian_integral|all
  std::size_t runs = 10000;
  std::size_t samples = 100000;
  std::size_t cases = 5;
  std::size_t horizon = 20;
  std::vector<double> deltas{0.01, 0.05, 0.2};
};

struct CliInvocation {
  std::string subcommand;  ///< example1|example2|violation|sweep|verify|bands
  ExperimentConfig config;
  std::string out_path = "-";  ///< "-" writes to standard output
  OutputFormat format = OutputFormat::Csv;
  std::size_t run_index = 0;      ///< example1: which run's trajectory to write
  std::string trajectory_path;    ///< example2: optional trajectory dump
  VerifyOptions verify;
};

struct ParseOutcome {
  std::optional<CliInvocation> invocation;
  int exit_code = 0;    ///< meaningful when invocation is empty: 0 for --help, 2 for usage errors
  std::string message;  ///< help text or error message
};

/// `argv[0]` is the program name. SNM_SEED, when set, overrides --seed.
ParseOutcome parse_args(const std::vector<std::string>& argv);

/// Executes the invocation. The summary line goes to `out` when the data goes to
/// a file; errors go to `err`. Returns 0, or 1 on IO errors and failed checks.
int run(const CliInvocation& inv, std::ostream& out, std::ostream& err);

/// Verification records for the selected checks.
std::vector<VerificationRecord> run_verification(const VerifyOptions& opts, std::uint64_t seed,
                                                 unsigned workers);

}  // namespace snm
