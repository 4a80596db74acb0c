#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "swg/dist.hpp"
#include "swg/engine.hpp"
#include "swg/mcmc.hpp"
#include "swg/model.hpp"
#include "swg/params.hpp"
#include "swg/simulate.hpp"

namespace swgtest {

using namespace swg;

// Well-separated constant-parameter model for synthetic-data studies.
inline ParamVector test_params_gamma() {
  ModelSpec spec;
  spec.season_dim = 0;
  spec.year_dim = 0;
  auto layout = make_layout(spec);
  ParamVector p(layout);
  p.set("trans.D1.b0", logit(0.85));
  p.set("trans.D2.b0", logit(0.60));
  p.set("trans.D3.b0", logit(0.30));
  p.set("trans.DW1.b0", logit(0.70));
  p.set("trans.W1.b0", logit(0.50));
  p.set("trans.W2.b0", logit(0.40));
  p.set("trans.W12.b0", logit(0.30));
  p.set("trans.W21.b0", logit(0.25));
  p.set("trans.WD1.b0", logit(0.65));
  p.set("trans.WD2.b0", logit(0.60));
  p.set("emis.k1.logit_pi", logit(0.90));
  p.set("emis.k4.logit_pi", logit(0.45));
  p.set("emis.k5.logit_pi", logit(0.10));
  p.set("emis.k1.shape.b0", std::log(0.6));
  p.set("emis.k1.scale.b0", std::log(0.08));
  p.set("emis.k4.shape.b0", std::log(1.2));
  p.set("emis.k4.scale.b0", std::log(0.45));
  p.set("emis.k5.shape.b0", std::log(1.5));
  p.set("emis.k5.scale.b0", std::log(1.4));
  return p;
}

// Blank panel of the requested shape (all days observed as zero).
inline DailySeries blank_series(int n_years, int days_per_year, int first_year = 2000) {
  DailySeries d;
  d.station_id = "SYNTH";
  d.season = Season::MAM;
  for (int t = 0; t < n_years; ++t) {
    d.years.push_back(first_year + t);
    d.season_day_count.push_back(days_per_year);
    d.values.emplace_back(days_per_year, 0.0);
    d.missing.emplace_back(days_per_year, false);
  }
  return d;
}

// Simulate a panel from `p`, then knock out a fraction of days at random.
inline DailySeries synth_series(const ParamVector& p, int n_years, int days_per_year,
                                std::uint64_t seed, double missing_frac = 0.0) {
  DailySeries shape = blank_series(n_years, days_per_year);
  auto md = ModelData::create(shape, p.layout->spec());
  Engine engine(md);
  engine.bind(p);
  auto rng = make_rng(seed, 999);
  SimulatedSeries sim = simulate_series(engine, rng);
  DailySeries out = shape;
  out.values = sim.values;
  if (missing_frac > 0.0) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < n_years; ++t)
      for (int s = 0; s < days_per_year; ++s)
        if (unif(rng) < missing_frac) {
          out.missing[t][s] = true;
          out.values[t][s] = 0.0;
        }
  }
  return out;
}

// random parameter vector with all probabilities strictly inside (0,1)
inline ParamVector random_params(const LayoutPtr& layout, std::mt19937_64& rng,
                                 double logit_range = 4.0) {
  ParamVector p(layout);
  std::uniform_real_distribution<double> u(-logit_range, logit_range);
  std::uniform_real_distribution<double> usd(0.05, 5.0);
  for (int i = 0; i < layout->size(); ++i) {
    ParamKind k = layout->info(i).kind;
    bool is_sd = k == ParamKind::TransSeasonSd || k == ParamKind::TransYearSd ||
                 k == ParamKind::EmisSeasonSd || k == ParamKind::EmisYearSd;
    p[i] = is_sd ? usd(rng) : u(rng);
  }
  return p;
}

// chi-square upper tail via the regularized incomplete gamma
inline double chi2_sf(double x, double df) { return 1.0 - gamma_p(df / 2.0, x / 2.0); }

// one-sample Kolmogorov-Smirnov p-value (asymptotic)
inline double ks_pvalue(double d_stat, long n) {
  double lambda = d_stat * (std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / std::sqrt(n));
  double acc = 0;
  for (int k = 1; k <= 100; ++k)
    acc += (k % 2 == 1 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::max(0.0, std::min(1.0, acc));
}

}  // namespace swgtest
