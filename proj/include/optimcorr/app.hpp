#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "optimcorr/core.hpp"
#include "optimcorr/estimators.hpp"
#include "optimcorr/report.hpp"

namespace optimcorr {

enum class Command { Fit, Validate, Simulate };

inline constexpr std::uint64_t kDefaultSeed = 20200101;

struct RunConfig {
  Command command = Command::Validate;
  std::string input_path;  // CSV for fit/validate, JSON config for simulate
  std::string outcome_column = "y";
  Strategy strategy;
  std::optional<std::size_t> B;  // validate: 2000 when unset; simulate: overrides the config
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;  // 0 = all hardware threads
  std::string output_path;  // empty = stdout
  std::string table_path;   // simulate: CSV bias/RMSE table
  bool grid = false;
  bool verbose = false;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitFit = 3;
inline constexpr int kExitValidation = 4;

int exit_code_for(ErrorCode code);

/// Header row, then numeric rows. The outcome column must hold only 0 and 1;
/// the remaining columns become predictors in header order.
Dataset parse_dataset_csv(const std::string& path, const std::string& outcome_column);
Dataset parse_dataset_csv(std::istream& in, const std::string& outcome_column);

/// Threads from OPTIMCORR_THREADS, or 0 when unset or invalid.
unsigned threads_from_environment();

/// Each returns an exit code and writes diagnostics to `err`.
int run_fit(const RunConfig& config, std::ostream& err);
int run_validate(const RunConfig& config, std::ostream& err);
int run_simulate(const RunConfig& config, std::ostream& err);
int run(const RunConfig& config, std::ostream& err);

}  // namespace optimcorr
