#pragma once

#include <span>
#include <string>
#include <vector>

#include "swg/simulate.hpp"

namespace swg {

enum class Metric { MeanDsl, Intensity, WetSpellCount, MeanWetSpellPrecip, MaxKdayPrecip };
std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);

// Per-year scalar from a complete daily vector. Dry/wet classification uses
// value < cutoff vs >= cutoff; spells truncated at the season edges count.
// NaN marks an undefined year (e.g. intensity with no wet days).
double compute_metric(std::span<const double> days, Metric metric, double cutoff = 0.3,
                      int kday = 40);

struct MetricSeries {
  Metric metric = Metric::MeanDsl;
  std::vector<int> years;
  std::vector<double> values;  // NaN = undefined year
  std::string source;          // "observed", "imputation <m>", "simulation <m>"

  MetricSeries restrict_period(int y0, int y1) const;
  long n_defined() const;
};

// Yearly metric values over a view; observed panels yield NaN for years with
// any missing day (spells cannot span gaps).
MetricSeries metric_series(const SeriesView& v, const std::vector<int>& years, Metric metric,
                           double cutoff = 0.3, int kday = 40, std::string source = "");

// Median pairwise slope, scaled to units per decade. Undefined years are
// excluded pairwise; needs >= 2 defined years.
double sens_slope(const MetricSeries& ms);

struct MkResult {
  long long S = 0;
  double var_S = 0.0;
  double z = 0.0;
  double p = 1.0;
};

// Mann-Kendall S with tie-corrected variance and continuity correction
// (|S| shrunk by one; z = 0 when S = 0). Needs >= 4 defined years.
MkResult mann_kendall(const MetricSeries& ms);

struct TrendResult {
  double sen_slope = 0.0;  // per decade; mean over imputations
  double S_bar = 0.0;      // mean of continuity-corrected S statistics
  double var_total = 0.0;  // within + (1 + 1/M) between
  double z = 0.0;
  double p = 1.0;
  int m_imputations = 0;
};

// Rubin combination over per-imputation Mann-Kendall results; the continuity
// correction has already been applied inside mann_kendall's z, so this
// recorrects from the raw S of each result.
TrendResult rubin_combine(const std::vector<MkResult>& per_imputation,
                          const std::vector<double>& per_imputation_slopes);

struct SlopeSummary {
  std::vector<double> slopes;  // one per simulation, sorted
  double quantile(double p) const;
  double median() const { return quantile(0.5); }
};

// Fully Bayesian slope distribution: Sen's slope of each simulated metric
// series over [y0, y1]. Simulations with fewer than 2 defined years in the
// period are skipped.
SlopeSummary posterior_slope_summary(const std::vector<MetricSeries>& sims, int y0, int y1);

}  // namespace swg
