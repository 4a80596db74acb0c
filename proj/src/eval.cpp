#include "swg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swg/errors.hpp"

namespace swg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct MeanSd {
  double mean = 0, sd = 0;
};

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd out;
  if (v.empty()) return out;
  double mu = 0;
  for (double x : v) mu += x;
  mu /= v.size();
  double s2 = 0;
  for (double x : v) s2 += (x - mu) * (x - mu);
  out.mean = mu;
  out.sd = v.size() > 1 ? std::sqrt(s2 / (v.size() - 1)) : 0.0;
  return out;
}

// applies body(engine) for every saved draw across chains
template <typename Body>
void for_each_draw(const PosteriorSamples& samples, const DailySeries& data, Body&& body) {
  auto md = ModelData::create(data, samples.spec);
  if (md->data.years != samples.years)
    throw InputError("samples were fit on a different year range than the evaluation data");
  Engine engine(md);
  for (int c = 0; c < samples.n_chains(); ++c) {
    for (size_t i = 0; i < samples.chains[c].draws.size(); ++i) {
      ParamVector p(samples.layout);
      p.v = samples.chains[c].draws[i];
      engine.bind(p);
      body(engine);
    }
  }
}

}  // namespace

HoldoutPlan HoldoutPlan::every_nth(int from, int to, int step) {
  HoldoutPlan plan;
  for (int y = from; y <= to; y += step) plan.held_years.push_back(y);
  return plan;
}

bool HoldoutPlan::is_held(int year) const {
  return std::find(held_years.begin(), held_years.end(), year) != held_years.end();
}

void HoldoutPlan::validate(const DailySeries& data) const {
  if (held_years.empty()) throw ConfigError("holdout plan has no years");
  for (int y : held_years)
    if (data.year_index(y) < 0)
      throw ConfigError("held-out year " + std::to_string(y) + " is outside the data");
}

DailySeries mask_held_years(const DailySeries& data, const HoldoutPlan& plan) {
  plan.validate(data);
  DailySeries out = data;
  for (int y : plan.held_years) {
    int t = out.year_index(y);
    std::fill(out.missing[t].begin(), out.missing[t].end(), true);
    std::fill(out.values[t].begin(), out.values[t].end(), 0.0);
  }
  return out;
}

NllResult one_day_ahead_nll(const PosteriorSamples& samples, const DailySeries& full,
                            const HoldoutPlan& plan) {
  plan.validate(full);
  NllResult out;
  std::vector<double> per_sample;
  for_each_draw(samples, full, [&](Engine& engine) {
    double nll = 0;
    for (int y : plan.held_years) {
      int t = full.year_index(y);
      auto dens = engine.predictive_logdens_year(t);
      for (double ld : dens) {
        if (std::isnan(ld)) continue;  // missing day
        if (ld == -kInf) {
          ++out.impossible;
          continue;
        }
        nll -= ld;
      }
    }
    per_sample.push_back(nll);
  });
  auto ms = mean_sd(per_sample);
  out.mean = ms.mean;
  out.sd = ms.sd;
  return out;
}

NllResult full_year_nll(const PosteriorSamples& samples, const DailySeries& full,
                        const HoldoutPlan& plan) {
  plan.validate(full);
  NllResult out;
  std::vector<double> per_sample;
  for_each_draw(samples, full, [&](Engine& engine) {
    double nll = 0;
    for (int y : plan.held_years) {
      int t = full.year_index(y);
      auto dens = engine.unconditional_logdens_year(t);
      for (double ld : dens) {
        if (std::isnan(ld)) continue;
        if (ld == -kInf) {
          ++out.impossible;
          continue;
        }
        nll -= ld;
      }
    }
    per_sample.push_back(nll);
  });
  auto ms = mean_sd(per_sample);
  out.mean = ms.mean;
  out.sd = ms.sd;
  return out;
}

WaicResult waic_from_matrix(const std::vector<std::vector<double>>& year_ll) {
  if (year_ll.empty()) throw InputError("waic: no samples");
  size_t S = year_ll.size();
  size_t Y = year_ll[0].size();
  for (const auto& row : year_ll)
    if (row.size() != Y) throw InputError("waic: ragged log-likelihood matrix");
  WaicResult out;
  for (size_t y = 0; y < Y; ++y) {
    double mx = -kInf;
    for (size_t s = 0; s < S; ++s) mx = std::max(mx, year_ll[s][y]);
    double acc = 0;
    for (size_t s = 0; s < S; ++s) acc += std::exp(year_ll[s][y] - mx);
    out.lppd += mx + std::log(acc / S);
    double mu = 0;
    for (size_t s = 0; s < S; ++s) mu += year_ll[s][y];
    mu /= S;
    double v = 0;
    for (size_t s = 0; s < S; ++s) v += (year_ll[s][y] - mu) * (year_ll[s][y] - mu);
    out.p_waic += S > 1 ? v / (S - 1) : 0.0;
  }
  out.waic = -2.0 * (out.lppd - out.p_waic);
  return out;
}

WaicResult waic_yearly(const PosteriorSamples& samples, const HoldoutPlan& plan) {
  std::vector<size_t> keep;
  for (size_t t = 0; t < samples.years.size(); ++t)
    if (!plan.is_held(samples.years[t])) keep.push_back(t);
  std::vector<std::vector<double>> ll;
  for (const auto& chain : samples.chains) {
    for (const auto& row : chain.year_ll) {
      std::vector<double> r;
      r.reserve(keep.size());
      for (size_t t : keep) r.push_back(row.at(t));
      ll.push_back(std::move(r));
    }
  }
  return waic_from_matrix(ll);
}

}  // namespace swg
