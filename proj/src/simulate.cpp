#include "swg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "swg/dist.hpp"
#include "swg/errors.hpp"

namespace swg {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int draw_categorical5(const double* w, std::mt19937_64& rng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0;
  for (int k = 0; k < kNumStates - 1; ++k) {
    acc += w[k];
    if (u <= acc) return k;
  }
  return kNumStates - 1;
}
}  // namespace

double draw_emission_value(const EmissionAt& e, EmissionFamily family, double report_grid_cm,
                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (unif(rng) < e.pi) return 0.0;
  double v = family == EmissionFamily::gamma
                 ? std::gamma_distribution<double>(e.shape, e.scale)(rng)
                 : gpd_quantile(unif(rng), e.shape, e.scale);
  return std::round(v / report_grid_cm) * report_grid_cm;
}

SimulatedSeries simulate_series(const Engine& engine, std::mt19937_64& rng) {
  const ModelData& md = engine.model();
  auto init = engine.init_weights_bound();
  SimulatedSeries out;
  out.values.resize(md.n_years);
  for (int t = 0; t < md.n_years; ++t) {
    int S = md.days_in_year[t];
    out.values[t].resize(S);
    int z = draw_categorical5(init.data(), rng);
    out.values[t][0] = draw_emission_value(engine.emission_at(state_block(z), 0, t),
                                           md.spec.family, md.spec.report_grid_cm, rng);
    for (int s = 1; s < S; ++s) {
      const double* row = engine.transition_into_day(t, s) + z * 5;
      z = draw_categorical5(row, rng);
      out.values[t][s] = draw_emission_value(engine.emission_at(state_block(z), s, t),
                                             md.spec.family, md.spec.report_grid_cm, rng);
    }
  }
  return out;
}

DailySeries apply_mask(const SimulatedSeries& sim, const DailySeries& data) {
  if (static_cast<int>(sim.values.size()) != data.n_years())
    throw InputError("apply_mask: simulation and data shapes disagree");
  DailySeries out = data;
  for (int t = 0; t < data.n_years(); ++t) {
    if (sim.values[t].size() != data.values[t].size())
      throw InputError("apply_mask: simulation and data shapes disagree");
    for (size_t s = 0; s < sim.values[t].size(); ++s)
      out.values[t][s] = data.missing[t][s] ? 0.0 : sim.values[t][s];
  }
  return out;
}

SeriesView view_of(const DailySeries& d) {
  return SeriesView{&d.values, &d.missing, &d.season_day_count};
}

SeriesView view_of(const SimulatedSeries& sim, const DailySeries& shape) {
  return SeriesView{&sim.values, nullptr, &shape.season_day_count};
}

std::vector<std::optional<double>> yearly_stat(const SeriesView& v, YearStat stat,
                                               double threshold) {
  std::vector<std::optional<double>> out(v.n_years());
  for (int t = 0; t < v.n_years(); ++t) {
    int S = v.days(t);
    switch (stat) {
      case YearStat::SeasonalTotal: {
        double acc = 0;
        long n = 0;
        for (int s = 0; s < S; ++s) {
          if (v.is_missing(t, s)) continue;
          acc += v.value(t, s);
          ++n;
        }
        if (n > 0) out[t] = acc;
        break;
      }
      case YearStat::ProbExceed: {
        long n = 0, hit = 0;
        for (int s = 0; s < S; ++s) {
          if (v.is_missing(t, s)) continue;
          ++n;
          if (v.value(t, s) > threshold) ++hit;
        }
        if (n > 0) out[t] = static_cast<double>(hit) / n;
        break;
      }
      case YearStat::Intensity: {
        double acc = 0;
        long n = 0;
        for (int s = 0; s < S; ++s) {
          if (v.is_missing(t, s)) continue;
          if (v.value(t, s) >= threshold) {
            acc += v.value(t, s);
            ++n;
          }
        }
        if (n > 0) out[t] = acc / n;
        break;
      }
      case YearStat::MeanDsl: {
        // spells are uncomputable across gaps: complete years only
        bool complete = true;
        for (int s = 0; s < S && complete; ++s) complete = !v.is_missing(t, s);
        if (!complete) break;
        long n_spells = 0, total = 0, run = 0;
        for (int s = 0; s < S; ++s) {
          if (v.value(t, s) < threshold) {
            ++run;
          } else if (run > 0) {
            total += run;
            ++n_spells;
            run = 0;
          }
        }
        if (run > 0) {
          total += run;
          ++n_spells;
        }
        out[t] = n_spells > 0 ? static_cast<double>(total) / n_spells : 0.0;
        break;
      }
      case YearStat::DryToDry:
      case YearStat::WetToDry: {
        bool from_dry = stat == YearStat::DryToDry;
        long n = 0, hit = 0;
        for (int s = 1; s < S; ++s) {
          if (v.is_missing(t, s) || v.is_missing(t, s - 1)) continue;
          bool prev_dry = v.value(t, s - 1) < threshold;
          if (prev_dry != from_dry) continue;
          ++n;
          if (v.value(t, s) < threshold) ++hit;
        }
        if (n > 0) out[t] = static_cast<double>(hit) / n;
        break;
      }
    }
  }
  return out;
}

std::vector<std::optional<double>> daily_stat(const SeriesView& v, DayStat stat,
                                              double threshold, int max_days) {
  std::vector<std::optional<double>> out(max_days);
  for (int s = 0; s < max_days; ++s) {
    double acc = 0;
    long n = 0, hit = 0;
    for (int t = 0; t < v.n_years(); ++t) {
      if (s >= v.days(t) || v.is_missing(t, s)) continue;
      double x = v.value(t, s);
      if (stat == DayStat::ProbExceed) {
        ++n;
        if (x > threshold) ++hit;
      } else if (x >= threshold) {
        acc += x;
        ++n;
      }
    }
    if (n > 0) out[s] = stat == DayStat::ProbExceed ? static_cast<double>(hit) / n : acc / n;
  }
  return out;
}

const char* const kBinNames[3] = {"dry", "moist", "wet"};

int precip_bin(double v_cm) { return v_cm < 0.3 ? 0 : (v_cm < 1.0 ? 1 : 2); }

std::vector<std::optional<double>> yearly_transition(const SeriesView& v, int from_bin,
                                                     int to_bin) {
  std::vector<std::optional<double>> out(v.n_years());
  for (int t = 0; t < v.n_years(); ++t) {
    long n = 0, hit = 0;
    for (int s = 1; s < v.days(t); ++s) {
      if (v.is_missing(t, s) || v.is_missing(t, s - 1)) continue;
      if (precip_bin(v.value(t, s - 1)) != from_bin) continue;
      ++n;
      if (precip_bin(v.value(t, s)) == to_bin) ++hit;
    }
    if (n > 0) out[t] = static_cast<double>(hit) / n;
  }
  return out;
}

std::vector<std::optional<double>> daily_transition(const SeriesView& v, int from_bin,
                                                    int to_bin, int max_days) {
  std::vector<std::optional<double>> out(max_days);
  for (int s = 1; s < max_days; ++s) {
    long n = 0, hit = 0;
    for (int t = 0; t < v.n_years(); ++t) {
      if (s >= v.days(t) || v.is_missing(t, s) || v.is_missing(t, s - 1)) continue;
      if (precip_bin(v.value(t, s - 1)) != from_bin) continue;
      ++n;
      if (precip_bin(v.value(t, s)) == to_bin) ++hit;
    }
    if (n > 0) out[s] = static_cast<double>(hit) / n;
  }
  return out;
}

std::vector<double> pooled_daily(const SeriesView& v) {
  std::vector<double> out;
  for (int t = 0; t < v.n_years(); ++t)
    for (int s = 0; s < v.days(t); ++s)
      if (!v.is_missing(t, s)) out.push_back(v.value(t, s));
  return out;
}

std::vector<double> pooled_kday_sums(const SeriesView& v, int k) {
  std::vector<double> out;
  for (int t = 0; t < v.n_years(); ++t) {
    int S = v.days(t);
    for (int s = 0; s + k <= S; ++s) {
      double acc = 0;
      bool ok = true;
      for (int i = s; i < s + k && ok; ++i) {
        if (v.is_missing(t, i))
          ok = false;
        else
          acc += v.value(t, i);
      }
      if (ok) out.push_back(acc);
    }
  }
  return out;
}

std::vector<double> pooled_dry_spells(const SeriesView& v, double cutoff) {
  std::vector<double> out;
  for (int t = 0; t < v.n_years(); ++t) {
    int S = v.days(t);
    bool complete = true;
    for (int s = 0; s < S && complete; ++s) complete = !v.is_missing(t, s);
    if (!complete) continue;
    long run = 0;
    for (int s = 0; s < S; ++s) {
      if (v.value(t, s) < cutoff) {
        ++run;
      } else if (run > 0) {
        out.push_back(static_cast<double>(run));
        run = 0;
      }
    }
    if (run > 0) out.push_back(static_cast<double>(run));
  }
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw NumericalError("quantile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  double h = p * (sorted.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(h));
  if (lo >= sorted.size() - 1) return sorted.back();
  double frac = h - lo;
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

GroupSummary summarize_ensemble(const std::string& stat, const std::string& group_kind,
                                const std::vector<double>& group,
                                const std::vector<std::optional<double>>& observed,
                                const std::vector<std::vector<std::optional<double>>>& sims,
                                const std::vector<char>& omitted, double lo_q, double hi_q) {
  size_t G = group.size();
  GroupSummary out;
  out.stat = stat;
  out.group_kind = group_kind;
  out.group = group;
  out.observed.assign(G, kNaN);
  out.observed_defined.assign(G, 0);
  out.sim_median.assign(G, kNaN);
  out.sim_lo.assign(G, kNaN);
  out.sim_hi.assign(G, kNaN);
  out.omitted = omitted.empty() ? std::vector<char>(G, 0) : omitted;
  for (size_t g = 0; g < G; ++g) {
    if (g < observed.size() && observed[g]) {
      out.observed[g] = *observed[g];
      out.observed_defined[g] = 1;
    }
    std::vector<double> vals;
    vals.reserve(sims.size());
    for (const auto& sim : sims)
      if (g < sim.size() && sim[g]) vals.push_back(*sim[g]);
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    out.sim_median[g] = quantile_sorted(vals, 0.5);
    out.sim_lo[g] = quantile_sorted(vals, lo_q);
    out.sim_hi[g] = quantile_sorted(vals, hi_q);
  }
  return out;
}

GroupSummary summarize_qq(const std::string& stat, std::vector<double> observed_sample,
                          const std::vector<std::vector<double>>& sim_samples, double lo_q,
                          double hi_q) {
  std::sort(observed_sample.begin(), observed_sample.end());
  size_t n = observed_sample.size();
  GroupSummary out;
  out.stat = stat;
  out.group_kind = "position";
  out.group.resize(n);
  out.observed = observed_sample;
  out.observed_defined.assign(n, 1);
  out.sim_median.assign(n, kNaN);
  out.sim_lo.assign(n, kNaN);
  out.sim_hi.assign(n, kNaN);
  out.omitted.assign(n, 0);

  std::vector<std::vector<double>> sim_q(sim_samples.size());
  for (size_t m = 0; m < sim_samples.size(); ++m) {
    std::vector<double> s = sim_samples[m];
    std::sort(s.begin(), s.end());
    sim_q[m].resize(n, kNaN);
    if (s.empty()) continue;
    for (size_t i = 0; i < n; ++i)
      sim_q[m][i] = quantile_sorted(s, (i + 0.5) / static_cast<double>(n));
  }
  std::vector<double> vals;
  for (size_t i = 0; i < n; ++i) {
    out.group[i] = (i + 0.5) / static_cast<double>(n);
    vals.clear();
    for (size_t m = 0; m < sim_q.size(); ++m)
      if (!std::isnan(sim_q[m][i])) vals.push_back(sim_q[m][i]);
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    out.sim_median[i] = quantile_sorted(vals, 0.5);
    out.sim_lo[i] = quantile_sorted(vals, lo_q);
    out.sim_hi[i] = quantile_sorted(vals, hi_q);
  }
  return out;
}

std::vector<char> yearly_omission(const DailySeries& d, double threshold) {
  std::vector<char> out(d.n_years(), 0);
  for (int t = 0; t < d.n_years(); ++t)
    out[t] = d.missing_fraction(t) > threshold ? 1 : 0;
  return out;
}

std::vector<char> daily_omission(const DailySeries& d, double threshold, int max_days) {
  std::vector<char> out(max_days, 0);
  for (int s = 0; s < max_days; ++s) {
    long n = 0, miss = 0;
    for (int t = 0; t < d.n_years(); ++t) {
      if (s >= d.season_day_count[t]) continue;
      ++n;
      if (d.missing[t][s]) ++miss;
    }
    out[s] = n > 0 && static_cast<double>(miss) / n > threshold ? 1 : 0;
  }
  return out;
}

void write_group_summary(const GroupSummary& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  f << "stat,group_kind,group,observed,observed_defined,sim_median,sim_lo,sim_hi,omitted\n";
  char buf[512];
  for (size_t i = 0; i < g.group.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%d\n",
                  g.stat.c_str(), g.group_kind.c_str(), g.group[i], g.observed[i],
                  static_cast<int>(g.observed_defined[i]), g.sim_median[i], g.sim_lo[i],
                  g.sim_hi[i], static_cast<int>(g.omitted[i]));
    f << buf;
  }
}

}  // namespace swg
