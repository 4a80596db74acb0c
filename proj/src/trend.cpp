#include "swg/trend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "swg/dist.hpp"
#include "swg/errors.hpp"

namespace swg {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::MeanDsl: return "mean_dsl";
    case Metric::Intensity: return "intensity";
    case Metric::WetSpellCount: return "wet_spell_count";
    case Metric::MeanWetSpellPrecip: return "mean_wet_spell_precip";
    case Metric::MaxKdayPrecip: return "max_kday_precip";
  }
  return "?";
}

Metric metric_from_name(const std::string& name) {
  if (name == "mean_dsl") return Metric::MeanDsl;
  if (name == "intensity") return Metric::Intensity;
  if (name == "wet_spell_count") return Metric::WetSpellCount;
  if (name == "mean_wet_spell_precip") return Metric::MeanWetSpellPrecip;
  if (name == "max_kday_precip") return Metric::MaxKdayPrecip;
  throw ConfigError("unknown metric: " + name);
}

double compute_metric(std::span<const double> days, Metric metric, double cutoff, int kday) {
  switch (metric) {
    case Metric::MeanDsl: {
      long runs = 0, total = 0, run = 0;
      for (double v : days) {
        if (v < cutoff) {
          ++run;
        } else if (run > 0) {
          total += run;
          ++runs;
          run = 0;
        }
      }
      if (run > 0) {
        total += run;
        ++runs;
      }
      return runs > 0 ? static_cast<double>(total) / runs : 0.0;
    }
    case Metric::Intensity: {
      double acc = 0;
      long n = 0;
      for (double v : days)
        if (v >= cutoff) {
          acc += v;
          ++n;
        }
      return n > 0 ? acc / n : kNaN;
    }
    case Metric::WetSpellCount: {
      long runs = 0;
      bool in_run = false;
      for (double v : days) {
        if (v >= cutoff) {
          if (!in_run) ++runs;
          in_run = true;
        } else {
          in_run = false;
        }
      }
      return static_cast<double>(runs);
    }
    case Metric::MeanWetSpellPrecip: {
      double spell = 0, acc = 0;
      long runs = 0;
      bool in_run = false;
      for (double v : days) {
        if (v >= cutoff) {
          spell += v;
          in_run = true;
        } else if (in_run) {
          acc += spell;
          ++runs;
          spell = 0;
          in_run = false;
        }
      }
      if (in_run) {
        acc += spell;
        ++runs;
      }
      return runs > 0 ? acc / runs : kNaN;
    }
    case Metric::MaxKdayPrecip: {
      int S = static_cast<int>(days.size());
      if (S < kday) return kNaN;
      double acc = 0;
      for (int i = 0; i < kday; ++i) acc += days[i];
      double best = acc;
      for (int i = kday; i < S; ++i) {
        acc += days[i] - days[i - kday];
        best = std::max(best, acc);
      }
      return best;
    }
  }
  return kNaN;
}

MetricSeries MetricSeries::restrict_period(int y0, int y1) const {
  MetricSeries out;
  out.metric = metric;
  out.source = source;
  for (size_t i = 0; i < years.size(); ++i) {
    if (years[i] < y0 || years[i] > y1) continue;
    out.years.push_back(years[i]);
    out.values.push_back(values[i]);
  }
  return out;
}

long MetricSeries::n_defined() const {
  long n = 0;
  for (double v : values)
    if (!std::isnan(v)) ++n;
  return n;
}

MetricSeries metric_series(const SeriesView& v, const std::vector<int>& years, Metric metric,
                           double cutoff, int kday, std::string source) {
  if (static_cast<int>(years.size()) != v.n_years())
    throw InputError("metric_series: year labels disagree with the panel");
  MetricSeries out;
  out.metric = metric;
  out.years = years;
  out.source = std::move(source);
  out.values.resize(years.size(), kNaN);
  std::vector<double> buf;
  for (int t = 0; t < v.n_years(); ++t) {
    int S = v.days(t);
    bool complete = true;
    buf.clear();
    buf.reserve(S);
    for (int s = 0; s < S && complete; ++s) {
      if (v.is_missing(t, s))
        complete = false;
      else
        buf.push_back(v.value(t, s));
    }
    if (complete) out.values[t] = compute_metric(buf, metric, cutoff, kday);
  }
  return out;
}

double sens_slope(const MetricSeries& ms) {
  std::vector<double> slopes;
  size_t n = ms.values.size();
  for (size_t i = 0; i < n; ++i) {
    if (std::isnan(ms.values[i])) continue;
    for (size_t j = i + 1; j < n; ++j) {
      if (std::isnan(ms.values[j])) continue;
      slopes.push_back((ms.values[j] - ms.values[i]) /
                       static_cast<double>(ms.years[j] - ms.years[i]));
    }
  }
  if (slopes.empty()) throw InputError("sens_slope needs >= 2 defined years");
  return 10.0 * median_of(slopes);
}

MkResult mann_kendall(const MetricSeries& ms) {
  std::vector<double> v;
  for (double x : ms.values)
    if (!std::isnan(x)) v.push_back(x);
  size_t n = v.size();
  if (n < 4) throw InputError("mann_kendall needs >= 4 defined years");

  MkResult out;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      double d = v[j] - v[i];
      out.S += d > 0 ? 1 : (d < 0 ? -1 : 0);
    }

  std::map<double, long> ties;
  for (double x : v) ++ties[x];
  double nn = static_cast<double>(n);
  double var = nn * (nn - 1.0) * (2.0 * nn + 5.0);
  for (auto& [val, t] : ties) {
    (void)val;
    if (t > 1) {
      double td = static_cast<double>(t);
      var -= td * (td - 1.0) * (2.0 * td + 5.0);
    }
  }
  out.var_S = var / 18.0;

  if (out.S == 0 || out.var_S <= 0.0) {
    out.z = 0.0;
    out.p = 1.0;
    return out;
  }
  double corrected = out.S > 0 ? out.S - 1.0 : out.S + 1.0;
  out.z = corrected / std::sqrt(out.var_S);
  out.p = two_sided_p(out.z);
  return out;
}

TrendResult rubin_combine(const std::vector<MkResult>& per_imputation,
                          const std::vector<double>& per_imputation_slopes) {
  size_t M = per_imputation.size();
  if (M == 0) throw InputError("rubin_combine needs >= 1 imputation");
  if (per_imputation_slopes.size() != M)
    throw InputError("rubin_combine: slope count disagrees with imputation count");

  TrendResult out;
  out.m_imputations = static_cast<int>(M);
  double sbar = 0, wbar = 0;
  std::vector<double> corrected(M);
  for (size_t m = 0; m < M; ++m) {
    double S = static_cast<double>(per_imputation[m].S);
    corrected[m] = S > 0 ? S - 1.0 : (S < 0 ? S + 1.0 : 0.0);
    sbar += corrected[m];
    wbar += per_imputation[m].var_S;
  }
  sbar /= M;
  wbar /= M;
  double between = 0;
  if (M > 1) {
    for (double c : corrected) between += (c - sbar) * (c - sbar);
    between /= (M - 1);
  }
  out.S_bar = sbar;
  out.var_total = wbar + (1.0 + 1.0 / M) * between;
  for (double s : per_imputation_slopes) out.sen_slope += s;
  out.sen_slope /= M;
  if (out.var_total > 0.0) {
    out.z = sbar / std::sqrt(out.var_total);
    out.p = two_sided_p(out.z);
  } else {
    out.z = 0.0;
    out.p = sbar == 0.0 ? 1.0 : 0.0;
  }
  return out;
}

double SlopeSummary::quantile(double p) const { return quantile_sorted(slopes, p); }

SlopeSummary posterior_slope_summary(const std::vector<MetricSeries>& sims, int y0, int y1) {
  SlopeSummary out;
  out.slopes.reserve(sims.size());
  for (const auto& sim : sims) {
    MetricSeries r = sim.restrict_period(y0, y1);
    if (r.n_defined() < 2) continue;
    out.slopes.push_back(sens_slope(r));
  }
  if (out.slopes.empty()) throw InputError("posterior_slope_summary: no usable simulations");
  std::sort(out.slopes.begin(), out.slopes.end());
  return out;
}

}  // namespace swg
