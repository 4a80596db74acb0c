#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "swg/engine.hpp"
#include "swg/series.hpp"

namespace swg {

// One unconditional draw of the full panel (all years, all season days).
struct SimulatedSeries {
  std::vector<std::vector<double>> values;  // [year][day] cm
};

// Draw a value from a state's emission mixture, rounded to the reporting grid.
double draw_emission_value(const EmissionAt& e, EmissionFamily family, double report_grid_cm,
                           std::mt19937_64& rng);

SimulatedSeries simulate_series(const Engine& engine, std::mt19937_64& rng);

// Copy the data's missingness onto a simulation. The unmasked simulation is
// kept by callers for the spell-length figure, which deliberately shows
// simulated values in years the observations cannot support.
DailySeries apply_mask(const SimulatedSeries& sim, const DailySeries& data);

// Read-only view over either an observed panel or a simulation.
struct SeriesView {
  const std::vector<std::vector<double>>* values = nullptr;
  const std::vector<std::vector<bool>>* missing = nullptr;  // null = complete
  const std::vector<int>* day_counts = nullptr;

  int n_years() const { return static_cast<int>(values->size()); }
  int days(int t) const { return (*day_counts)[t]; }
  bool is_missing(int t, int s) const { return missing && (*missing)[t][s]; }
  double value(int t, int s) const { return (*values)[t][s]; }
};
SeriesView view_of(const DailySeries& d);
SeriesView view_of(const SimulatedSeries& sim, const DailySeries& shape);

// ---- grouped statistics ----------------------------------------------
// All statistics skip missing entries; a group whose inputs are empty or
// undefined yields nullopt.

enum class YearStat { SeasonalTotal, ProbExceed, Intensity, MeanDsl, DryToDry, WetToDry };
// threshold: exceedance level for ProbExceed, wet/dry cutoff otherwise.
std::vector<std::optional<double>> yearly_stat(const SeriesView& v, YearStat stat,
                                               double threshold);

enum class DayStat { ProbExceed, Intensity };
// grouped by day-of-season across years (days beyond a short year skipped)
std::vector<std::optional<double>> daily_stat(const SeriesView& v, DayStat stat,
                                              double threshold, int max_days);

// Conditional next-day bin distribution given the previous day's bin.
// Bins: dry [0, 0.3), moist [0.3, 1.0), wet [1.0, inf) cm.
int precip_bin(double v_cm);
extern const char* const kBinNames[3];
std::vector<std::optional<double>> yearly_transition(const SeriesView& v, int from_bin,
                                                     int to_bin);
std::vector<std::optional<double>> daily_transition(const SeriesView& v, int from_bin,
                                                    int to_bin, int max_days);

// Pooled samples feeding the Q-Q comparisons.
std::vector<double> pooled_daily(const SeriesView& v);
std::vector<double> pooled_kday_sums(const SeriesView& v, int k);  // fully observed windows
std::vector<double> pooled_dry_spells(const SeriesView& v, double cutoff);  // complete years

// Type-7 quantile of a sorted sample at probability p.
double quantile_sorted(const std::vector<double>& sorted, double p);

// ---- ensemble summaries ----------------------------------------------

// Tidy per-group comparison of observed values against simulation bands.
struct GroupSummary {
  std::string stat;
  std::string group_kind;  // "year", "day", or "position"
  std::vector<double> group;
  std::vector<double> observed;  // NaN where undefined
  std::vector<char> observed_defined;
  std::vector<double> sim_median, sim_lo, sim_hi;
  std::vector<char> omitted;  // missing-fraction rule
};

// Band quantiles across simulations per group; simulations with undefined
// group values are dropped from that group's band.
GroupSummary summarize_ensemble(const std::string& stat, const std::string& group_kind,
                                const std::vector<double>& group,
                                const std::vector<std::optional<double>>& observed,
                                const std::vector<std::vector<std::optional<double>>>& sims,
                                const std::vector<char>& omitted, double lo_q, double hi_q);

// Q-Q summary: observed order statistics against per-simulation quantiles at
// the matching plotting positions (i - 0.5)/n.
GroupSummary summarize_qq(const std::string& stat, std::vector<double> observed_sample,
                          const std::vector<std::vector<double>>& sim_samples, double lo_q,
                          double hi_q);

// Group omission flags from the data's missingness (fraction > threshold).
std::vector<char> yearly_omission(const DailySeries& d, double threshold);
std::vector<char> daily_omission(const DailySeries& d, double threshold, int max_days);

void write_group_summary(const GroupSummary& g, const std::string& path);

}  // namespace swg
