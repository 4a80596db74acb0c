#pragma once

#include <vector>

#include "swg/mcmc.hpp"
#include "swg/series.hpp"

namespace swg {

struct HoldoutPlan {
  std::vector<int> held_years;

  static HoldoutPlan every_nth(int from = 1910, int to = 2020, int step = 10);
  bool is_held(int year) const;
  void validate(const DailySeries& data) const;
};

// Copy of the data with every held year fully missing (the training panel).
DailySeries mask_held_years(const DailySeries& data, const HoldoutPlan& plan);

struct NllResult {
  double mean = 0.0;
  double sd = 0.0;
  long impossible = 0;  // (sample, day) events excluded from the sums
};

// Predictive NLL over the held years' observed days, one-step-ahead: each
// day's density is conditioned on everything observed earlier in that year,
// held-out values included. `full` carries the unmasked observations;
// `samples` must come from a fit with the held years masked.
NllResult one_day_ahead_nll(const PosteriorSamples& samples, const DailySeries& full,
                            const HoldoutPlan& plan);

// Whole-year predictive NLL: each held observation is scored against its
// marginal predictive density, with the state distribution propagated from
// the initial weights and never conditioned on the held year's data.
NllResult full_year_nll(const PosteriorSamples& samples, const DailySeries& full,
                        const HoldoutPlan& plan);

struct WaicResult {
  double waic = 0.0;
  double p_waic = 0.0;
  double lppd = 0.0;
};

// WAIC with years as the observation units, from an [sample][year]
// log-likelihood matrix.
WaicResult waic_from_matrix(const std::vector<std::vector<double>>& year_ll);

// WAIC over the training years of a fit (held years excluded), using the
// per-year log-likelihood traces persisted with the samples.
WaicResult waic_yearly(const PosteriorSamples& samples, const HoldoutPlan& plan);

}  // namespace swg
