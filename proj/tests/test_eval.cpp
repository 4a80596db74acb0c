#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "helpers.hpp"
#include "swg/errors.hpp"
#include "swg/eval.hpp"

using namespace swg;
using namespace swgtest;

namespace {

// enumeration of p(observed days in `emit_days` of year t), marginalizing
// everything else: emission terms only on the listed days
double enum_partial_loglik(const DailySeries& d, int t, const ParamVector& p,
                           const std::vector<bool>& emit_day) {
  int S = d.season_day_count[t];
  auto w = initial_weights(p);
  std::vector<Matrix5> P(S);
  for (int s = 1; s < S; ++s) P[s] = transition_matrix(p, nullptr, nullptr, s, t);
  long n_paths = 1;
  for (int s = 0; s < S; ++s) n_paths *= 5;
  long double total = 0;
  for (long path = 0; path < n_paths; ++path) {
    long code = path;
    int prev = static_cast<int>(code % 5);
    code /= 5;
    long double weight = w[prev];
    if (emit_day[0])
      weight *= std::exp(
          emission_logprob(d.values[t][0], prev, p, nullptr, nullptr, 0, t, 0.0127));
    for (int s = 1; s < S; ++s) {
      int z = static_cast<int>(code % 5);
      code /= 5;
      weight *= P[s][prev][z];
      if (emit_day[s])
        weight *= std::exp(
            emission_logprob(d.values[t][s], z, p, nullptr, nullptr, s, t, 0.0127));
      prev = z;
    }
    total += weight;
  }
  return static_cast<double>(std::log(total));
}

PosteriorSamples samples_from_params(const std::vector<ParamVector>& draws,
                                     const DailySeries& data) {
  auto md = ModelData::create(data, draws[0].layout->spec());
  PosteriorSamples s;
  s.layout = draws[0].layout;
  s.spec = s.layout->spec();
  s.config.n_chains = 1;
  s.data_fingerprint = md->fingerprint();
  s.max_obs_cm = md->max_obs_cm;
  s.years = data.years;
  ChainResult ch;
  Engine eng(md);
  for (const auto& p : draws) {
    eng.bind(p);
    ch.draws.push_back(p.v);
    ch.year_ll.emplace_back(eng.year_loglik(), eng.year_loglik() + md->n_years);
  }
  s.chains.push_back(std::move(ch));
  return s;
}

}  // namespace

TEST_CASE("holdout plan defaults and masking") {
  HoldoutPlan plan = HoldoutPlan::every_nth();
  REQUIRE(plan.held_years.size() == 12);
  CHECK(plan.held_years.front() == 1910);
  CHECK(plan.held_years.back() == 2020);
  CHECK(plan.is_held(1950));
  CHECK_FALSE(plan.is_held(1951));

  ParamVector gen = test_params_gamma();
  DailySeries d = synth_series(gen, 10, 12, 3);
  HoldoutPlan p2;
  p2.held_years = {2002, 2007};
  DailySeries train = mask_held_years(d, p2);
  for (int s = 0; s < 12; ++s) {
    CHECK(train.missing[2][s]);
    CHECK(train.missing[7][s]);
    CHECK(train.missing[3][s] == d.missing[3][s]);
  }
  HoldoutPlan bad;
  bad.held_years = {1900};
  CHECK_THROWS_AS(mask_held_years(d, bad), ConfigError);
}

TEST_CASE("one-day-ahead and full-year NLL match enumeration on a 3-day toy") {
  ParamVector gen = test_params_gamma();
  DailySeries d = blank_series(2, 3);
  d.values[0] = {0.0, 0.4064, 0.0};
  d.values[1] = {0.1016, 0.0, 0.9906};
  HoldoutPlan plan;
  plan.held_years = {2001};

  ParamVector p2 = gen;
  p2.set("trans.W1.b0", logit(0.55));
  std::vector<ParamVector> draws = {gen, p2};
  PosteriorSamples samples = samples_from_params(draws, d);

  // oracles per draw
  std::vector<double> oneday_oracle, full_oracle;
  for (const auto& p : draws) {
    double nll1 = 0;
    // chain rule over observed days of the held year
    std::vector<bool> none(3, false);
    for (int s = 0; s < 3; ++s) {
      std::vector<bool> upto(3, false), below(3, false);
      for (int i = 0; i <= s; ++i) upto[i] = true;
      for (int i = 0; i < s; ++i) below[i] = true;
      nll1 -= enum_partial_loglik(d, 1, p, upto) - enum_partial_loglik(d, 1, p, below);
    }
    oneday_oracle.push_back(nll1);
    double nllf = 0;
    for (int s = 0; s < 3; ++s) {
      std::vector<bool> only(3, false);
      only[s] = true;
      nllf -= enum_partial_loglik(d, 1, p, only);
    }
    full_oracle.push_back(nllf);
  }
  auto mean2 = [](const std::vector<double>& v) { return 0.5 * (v[0] + v[1]); };
  auto sd2 = [&](const std::vector<double>& v) {
    double mu = mean2(v);
    return std::sqrt((v[0] - mu) * (v[0] - mu) + (v[1] - mu) * (v[1] - mu));
  };
  NllResult one = one_day_ahead_nll(samples, d, plan);
  NllResult full = full_year_nll(samples, d, plan);
  CHECK(one.mean == doctest::Approx(mean2(oneday_oracle)).epsilon(1e-10));
  CHECK(one.sd == doctest::Approx(sd2(oneday_oracle)).epsilon(1e-8));
  CHECK(full.mean == doctest::Approx(mean2(full_oracle)).epsilon(1e-10));
  CHECK(full.sd == doctest::Approx(sd2(full_oracle)).epsilon(1e-8));
  CHECK(one.impossible == 0);
  // the two notions of conditioning genuinely differ
  CHECK(one.mean != doctest::Approx(full.mean).epsilon(1e-6));
}

TEST_CASE("held year fully missing contributes zero; single sample has zero sd") {
  ParamVector gen = test_params_gamma();
  DailySeries d = synth_series(gen, 4, 6, 9);
  for (int s = 0; s < 6; ++s) {
    d.missing[1][s] = true;
    d.values[1][s] = 0.0;
  }
  HoldoutPlan plan;
  plan.held_years = {2001};
  PosteriorSamples samples = samples_from_params({gen}, d);
  NllResult one = one_day_ahead_nll(samples, d, plan);
  NllResult full = full_year_nll(samples, d, plan);
  CHECK(one.mean == 0.0);
  CHECK(one.sd == 0.0);
  CHECK(full.mean == 0.0);
}

TEST_CASE("a certain all-dry model predicts held-out zeros with zero NLL") {
  ParamVector p = test_params_gamma();
  p.set("emis.k1.logit_pi", 1e9);
  p.set("trans.D1.b0", 1e9);
  // the initial distribution must also be certain for a certain prediction
  ParamVector q = p;
  q.set("init.logit.1", 1e9);
  DailySeries d = blank_series(2, 4);
  HoldoutPlan plan;
  plan.held_years = {2001};
  PosteriorSamples samples = samples_from_params({q}, d);
  NllResult one = one_day_ahead_nll(samples, d, plan);
  CHECK(one.mean == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("waic hand case and invariances") {
  using big = boost::multiprecision::cpp_bin_float_50;
  std::vector<std::vector<double>> ll = {{0.0}, {-2.0}};
  WaicResult w = waic_from_matrix(ll);
  big lppd = log((big(1) + exp(big(-2))) / 2);
  CHECK(w.lppd == doctest::Approx(static_cast<double>(lppd)).epsilon(1e-12));
  CHECK(w.p_waic == doctest::Approx(2.0).epsilon(1e-12));  // n-1 sample variance of {0,-2}
  double expect_waic = static_cast<double>(big(-2) * (lppd - 2));
  CHECK(w.waic == doctest::Approx(expect_waic).epsilon(1e-12));

  // identical samples: no effective parameters
  std::vector<std::vector<double>> same = {{-1.5, -3.0}, {-1.5, -3.0}};
  WaicResult w2 = waic_from_matrix(same);
  CHECK(w2.p_waic == 0.0);
  CHECK(w2.waic == doctest::Approx(-2.0 * (-4.5)).epsilon(1e-12));

  // adding a constant to one year's column shifts lppd, not p_waic
  std::vector<std::vector<double>> base = {{-1.0, -2.0}, {-0.5, -2.5}, {-1.5, -1.8}};
  WaicResult wb = waic_from_matrix(base);
  std::vector<std::vector<double>> shifted = base;
  for (auto& row : shifted) row[0] += 3.7;
  WaicResult ws = waic_from_matrix(shifted);
  CHECK(ws.lppd == doctest::Approx(wb.lppd + 3.7).epsilon(1e-12));
  CHECK(ws.p_waic == doctest::Approx(wb.p_waic).epsilon(1e-12));
}

TEST_CASE("p_waic is nonnegative on random matrices") {
  auto rng = make_rng(8, 8);
  std::uniform_real_distribution<double> u(-30.0, 0.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::vector<double>> ll(7, std::vector<double>(5));
    for (auto& row : ll)
      for (auto& v : row) v = u(rng);
    CHECK(waic_from_matrix(ll).p_waic >= 0.0);
  }
}

TEST_CASE("waic_yearly drops the held years from the units") {
  ParamVector gen = test_params_gamma();
  DailySeries d = synth_series(gen, 5, 8, 2);
  HoldoutPlan plan;
  plan.held_years = {2002};
  DailySeries train = mask_held_years(d, plan);
  PosteriorSamples s = samples_from_params({gen, gen}, train);
  WaicResult w = waic_yearly(s, plan);
  // held-year columns are all-zero; excluding them changes nothing else
  std::vector<std::vector<double>> manual;
  for (const auto& row : s.chains[0].year_ll) {
    std::vector<double> r;
    for (size_t t = 0; t < row.size(); ++t)
      if (t != 2) r.push_back(row[t]);
    manual.push_back(r);
  }
  WaicResult w2 = waic_from_matrix(manual);
  CHECK(w.waic == doctest::Approx(w2.waic).epsilon(1e-14));
  CHECK(w.p_waic == 0.0);  // identical draws
}
