#pragma once

#include <string>

#include "swg/config.hpp"
#include "swg/series.hpp"

namespace swg {

// Exit codes shared by the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitNumerical = 4;

// Ingest the station panel named by the config (dly/csv via quality filter
// and seasonization, or a pre-seasonized series_json).
DailySeries load_station_series(const RunConfig& cfg);

// Model structure for a crossval variant string "<family>:<trend|no_trend>".
ModelSpec variant_spec(const RunConfig& cfg, const std::string& variant);

void cmd_fit(const RunConfig& cfg, bool resume = false);
void cmd_assess(const RunConfig& cfg);
void cmd_crossval(const RunConfig& cfg, bool resume = false);
void cmd_trend(const RunConfig& cfg);
void cmd_simulate(const RunConfig& cfg);
void cmd_impute(const RunConfig& cfg);

// Dispatch by name; translates exceptions to exit codes and prints the error.
int run_command(const std::string& command, const RunConfig& cfg, bool resume = false);

}  // namespace swg
