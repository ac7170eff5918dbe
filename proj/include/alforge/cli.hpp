#pragma once

// `al_forge` subcommands: benchgen, run, compare.
// Exit codes: 0 success, 2 usage or config, 3 data, 4 numeric failure.

#include "alforge/core.hpp"
#include "alforge/driver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace alforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

int exit_code_for(ErrorCode code);

struct ComparisonRow {
  std::string strategy;  // display name
  double accuracy = 0.0;
  std::int64_t cost = 0;
  double cost_per_accuracy = 0.0;
};

/// Rows sorted by Cost/Acc. ascending, then by name.
std::vector<ComparisonRow> compare(const std::vector<driver::Summary>& summaries);
void write_comparison_text(std::ostream& out, const std::vector<ComparisonRow>& rows);
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

/// Reads AL_FORGE_LOG (error, info, debug; default info) and routes logging
/// to stderr.
void configure_logging();

/// Entry point; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace alforge::cli
