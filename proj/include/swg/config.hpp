#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "swg/calendar.hpp"
#include "swg/eval.hpp"
#include "swg/ghcn.hpp"
#include "swg/mcmc.hpp"
#include "swg/params.hpp"
#include "swg/trend.hpp"

namespace swg {

// Minimal TOML-style reader: [section] headers, key = value lines, # comments.
// Values: "strings", booleans, numbers, and arrays (one nesting level, for
// period pairs). This is the whole grammar; the schema is documented in the
// README.
struct TomlValue {
  enum Kind { String, Number, Boolean, Array } kind = Number;
  std::string s;
  double num = 0.0;
  bool b = false;
  std::vector<TomlValue> arr;
};
std::map<std::string, TomlValue> parse_toml(const std::string& text);  // "section.key" keys

struct RunConfig {
  // data
  std::string data_path;
  std::string data_format = "dly";  // dly | csv | series_json
  std::string station_id;
  Season season = Season::DJF;
  int year_start = 1900;
  int year_end = 2021;
  double ceiling_cm = 200.0;

  // model
  ModelSpec model;
  double wet_cutoff_cm = 0.3;

  // mcmc
  ChainConfig chain;

  // holdout
  std::vector<int> holdout_years;  // empty -> every_nth below
  int holdout_from = 1910, holdout_to = 2020, holdout_every = 10;

  // crossval variants as "<family>:<trend|no_trend>"
  std::vector<std::string> variants = {"gamma:no_trend", "gamma:trend", "gpd:trend"};

  // assessment
  double omission_threshold = 0.25;
  int assess_max_draws = 0;  // 0 = all saved draws

  // trend
  std::vector<std::pair<int, int>> periods = {{1920, 2021}, {1950, 2021}, {1980, 2021}};
  std::vector<Metric> metrics = {Metric::MeanDsl, Metric::Intensity};
  int trend_kday = 40;
  int trend_max_draws = 0;

  // simulate / impute commands
  int emit_count = 10;

  // output
  std::string output_dir = "out";
  int workers = 1;

  void validate() const;
  HoldoutPlan holdout_plan() const;
};

RunConfig parse_run_config(const std::string& toml_text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);  // parses back identically

}  // namespace swg
