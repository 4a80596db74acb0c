#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "swg/errors.hpp"
#include "swg/trend.hpp"

using namespace swg;
using namespace swgtest;

namespace {
MetricSeries series_of(std::vector<int> years, std::vector<double> values) {
  MetricSeries ms;
  ms.years = std::move(years);
  ms.values = std::move(values);
  return ms;
}

double oracle_sen(const MetricSeries& ms) {
  std::vector<double> slopes;
  for (size_t i = 0; i < ms.values.size(); ++i)
    for (size_t j = i + 1; j < ms.values.size(); ++j) {
      if (std::isnan(ms.values[i]) || std::isnan(ms.values[j])) continue;
      slopes.push_back((ms.values[j] - ms.values[i]) / (ms.years[j] - ms.years[i]));
    }
  std::sort(slopes.begin(), slopes.end());
  size_t n = slopes.size();
  double med = n % 2 ? slopes[n / 2] : 0.5 * (slopes[n / 2 - 1] + slopes[n / 2]);
  return 10.0 * med;
}
}  // namespace

TEST_CASE("metric hand examples") {
  std::vector<double> days = {0, 0, 0.5, 0, 0, 0, 0.4};
  CHECK(compute_metric(days, Metric::MeanDsl) == doctest::Approx(2.5));
  CHECK(compute_metric(days, Metric::Intensity) == doctest::Approx(0.45));
  CHECK(compute_metric(days, Metric::WetSpellCount) == 2.0);
  CHECK(compute_metric(days, Metric::MeanWetSpellPrecip) == doctest::Approx(0.45));

  std::vector<double> dry(91, 0.0);
  CHECK(compute_metric(dry, Metric::MeanDsl) == 91.0);
  CHECK(compute_metric(dry, Metric::WetSpellCount) == 0.0);
  CHECK(std::isnan(compute_metric(dry, Metric::Intensity)));
  CHECK(std::isnan(compute_metric(dry, Metric::MeanWetSpellPrecip)));

  std::vector<double> four = {1, 2, 3, 4};
  CHECK(compute_metric(four, Metric::MaxKdayPrecip, 0.3, 3) == 9.0);
  CHECK(std::isnan(compute_metric(four, Metric::MaxKdayPrecip, 0.3, 40)));

  // one event mid-season leaves two spells averaging half the season
  std::vector<double> one(91, 0.0);
  one[40] = 2.0;
  CHECK(compute_metric(one, Metric::MeanDsl) == doctest::Approx(45.0));
}

TEST_CASE("sen's slope: exact linear, constant, and the pairwise-median oracle") {
  CHECK(sens_slope(series_of({2000, 2001, 2002}, {1, 2, 3})) == doctest::Approx(10.0));
  CHECK(sens_slope(series_of({2000, 2001, 2002, 2003}, {2, 2, 2, 2})) == 0.0);
  auto rng = make_rng(10, 0);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<int> years;
    std::vector<double> vals;
    for (int i = 0; i < 8; ++i) {
      years.push_back(1990 + i);
      vals.push_back(u(rng));
    }
    MetricSeries ms = series_of(years, vals);
    CHECK(sens_slope(ms) == oracle_sen(ms));
  }
  CHECK_THROWS_AS(sens_slope(series_of({2000}, {1.0})), InputError);
}

TEST_CASE("sen's slope equivariance") {
  auto rng = make_rng(11, 0);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::vector<int> years;
  std::vector<double> vals;
  for (int i = 0; i < 9; ++i) {
    years.push_back(2000 + i);
    vals.push_back(u(rng));
  }
  MetricSeries base = series_of(years, vals);
  double s0 = sens_slope(base);
  double a = 0.7, b = -3.0, c = 2.5;
  MetricSeries shifted = base;
  for (size_t i = 0; i < vals.size(); ++i) shifted.values[i] = vals[i] + a * years[i] + b;
  CHECK(sens_slope(shifted) == doctest::Approx(s0 + 10.0 * a).epsilon(1e-12));
  MetricSeries scaled = base;
  for (auto& v : scaled.values) v *= c;
  CHECK(sens_slope(scaled) == doctest::Approx(c * s0).epsilon(1e-12));
}

TEST_CASE("mann-kendall: counts, no-tie variance, correction, tie edge cases") {
  MetricSeries ms = series_of({1, 2, 3}, {1, 3, 2});
  // S = sign(3-1) + sign(2-1) + sign(2-3) = 1; fewer than 4 years throws
  CHECK_THROWS_AS(mann_kendall(ms), InputError);
  MetricSeries ms4 = series_of({1, 2, 3, 4}, {1, 3, 2, 2.5});
  MkResult r4 = mann_kendall(ms4);
  CHECK(r4.S == 2);

  std::vector<int> years10;
  std::vector<double> vals10;
  auto rng = make_rng(12, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    years10.push_back(1900 + i);
    vals10.push_back(u(rng));
  }
  MkResult r10 = mann_kendall(series_of(years10, vals10));
  CHECK(r10.var_S == doctest::Approx(125.0).epsilon(1e-15));  // 10*9*25/18
  // continuity correction shrinks |S| by one
  CHECK(r10.z == doctest::Approx((r10.S - (r10.S > 0 ? 1 : -1)) / std::sqrt(125.0)));

  MkResult tied = mann_kendall(series_of({1, 2, 3, 4}, {2, 2, 2, 2}));
  CHECK(tied.S == 0);
  CHECK(tied.p == 1.0);
  CHECK(tied.z == 0.0);
}

TEST_CASE("mann-kendall S is invariant under monotone transforms") {
  auto rng = make_rng(13, 0);
  std::uniform_real_distribution<double> u(0.1, 4.0);
  std::vector<int> years;
  std::vector<double> vals;
  for (int i = 0; i < 12; ++i) {
    years.push_back(2000 + i);
    vals.push_back(u(rng));
  }
  MkResult base = mann_kendall(series_of(years, vals));
  std::vector<double> expv = vals, cubed = vals;
  for (auto& v : expv) v = std::exp(v);
  for (auto& v : cubed) v = v * v * v;
  CHECK(mann_kendall(series_of(years, expv)).S == base.S);
  CHECK(mann_kendall(series_of(years, cubed)).S == base.S);
}

TEST_CASE("tie-corrected variance matches the permutation-null oracle within 2%") {
  // values with heavy ties
  std::vector<double> vals = {1, 1, 2, 2, 2, 3, 4, 4, 5, 1, 3, 3};
  std::vector<int> years;
  for (size_t i = 0; i < vals.size(); ++i) years.push_back(1950 + static_cast<int>(i));
  MkResult r = mann_kendall(series_of(years, vals));
  auto rng = make_rng(14, 0);
  std::vector<double> perm = vals;
  const long M = 100000;
  long double sum = 0, sum2 = 0;
  for (long m = 0; m < M; ++m) {
    std::shuffle(perm.begin(), perm.end(), rng);
    long long S = 0;
    for (size_t i = 0; i < perm.size(); ++i)
      for (size_t j = i + 1; j < perm.size(); ++j)
        S += perm[j] > perm[i] ? 1 : (perm[j] < perm[i] ? -1 : 0);
    sum += S;
    sum2 += static_cast<long double>(S) * S;
  }
  double var_perm = static_cast<double>(sum2 / M - (sum / M) * (sum / M));
  CHECK(std::fabs(r.var_S - var_perm) < 0.02 * var_perm);
}

TEST_CASE("rubin combination: degenerate and hand-computed cases") {
  std::vector<int> years = {2000, 2001, 2002, 2003, 2004, 2005};
  auto rng = make_rng(15, 0);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<double> vals;
  for (int i = 0; i < 6; ++i) vals.push_back(u(rng));
  MetricSeries ms = series_of(years, vals);
  MkResult single = mann_kendall(ms);
  double slope = sens_slope(ms);

  // M = 1 reduces exactly to the single-dataset test
  TrendResult t1 = rubin_combine({single}, {slope});
  CHECK(t1.z == doctest::Approx(single.z).epsilon(1e-15));
  CHECK(t1.p == doctest::Approx(single.p).epsilon(1e-15));
  CHECK(t1.sen_slope == slope);

  // identical imputations: between-variance zero, same answer
  TrendResult t3 = rubin_combine({single, single, single}, {slope, slope, slope});
  CHECK(t3.z == doctest::Approx(single.z).epsilon(1e-15));
  CHECK(t3.p == doctest::Approx(single.p).epsilon(1e-15));

  // M = 3 synthetic: spreadsheet-style oracle
  MkResult a{7, 20.0, 0, 0}, b{-3, 22.0, 0, 0}, c{1, 18.0, 0, 0};
  std::vector<double> slopes = {0.5, -0.1, 0.2};
  TrendResult t = rubin_combine({a, b, c}, slopes);
  double ca = 6, cb = -2, cc = 0;
  double sbar = (ca + cb + cc) / 3.0;
  double wbar = (20.0 + 22.0 + 18.0) / 3.0;
  double between =
      ((ca - sbar) * (ca - sbar) + (cb - sbar) * (cb - sbar) + (cc - sbar) * (cc - sbar)) / 2.0;
  double total = wbar + (1.0 + 1.0 / 3.0) * between;
  CHECK(t.S_bar == doctest::Approx(sbar).epsilon(1e-12));
  CHECK(t.var_total == doctest::Approx(total).epsilon(1e-12));
  CHECK(t.z == doctest::Approx(sbar / std::sqrt(total)).epsilon(1e-12));
  CHECK(t.p == doctest::Approx(two_sided_p(sbar / std::sqrt(total))).epsilon(1e-12));
  CHECK(t.sen_slope == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(rubin_combine({}, {}), InputError);
}

TEST_CASE("metric series over panels: undefined years and the imputation identity") {
  ParamVector gen = test_params_gamma();
  DailySeries d = synth_series(gen, 5, 20, 16, 0.0);
  // knock out one day of year 2
  d.missing[2][4] = true;
  MetricSeries ms = metric_series(view_of(d), d.years, Metric::MeanDsl);
  CHECK_FALSE(std::isnan(ms.values[0]));
  CHECK(std::isnan(ms.values[2]));
  // complete years equal the raw metric
  for (int t : {0, 1, 3, 4})
    CHECK(ms.values[t] == compute_metric(d.values[t], Metric::MeanDsl));
}

TEST_CASE("posterior slope summaries preserve zeros and respect periods") {
  std::vector<MetricSeries> sims;
  for (int m = 0; m < 40; ++m)
    sims.push_back(series_of({2000, 2001, 2002, 2003}, {1, 1, 1, 1}));
  SlopeSummary s = posterior_slope_summary(sims, 2000, 2003);
  CHECK(s.median() == 0.0);
  CHECK(s.quantile(0.05) == 0.0);
  CHECK(s.quantile(0.95) == 0.0);

  // period restriction uses only in-window years
  std::vector<MetricSeries> rise;
  rise.push_back(series_of({2000, 2001, 2002, 2003}, {0, 0, 10, 20}));
  SlopeSummary s2 = posterior_slope_summary(rise, 2002, 2003);
  CHECK(s2.median() == doctest::Approx(100.0));  // 10 per year within the window

  // quantiles agree with a sort oracle
  std::vector<MetricSeries> many;
  auto rng = make_rng(17, 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int m = 0; m < 33; ++m) {
    std::vector<double> v;
    for (int i = 0; i < 5; ++i) v.push_back(u(rng));
    many.push_back(series_of({2000, 2001, 2002, 2003, 2004}, v));
  }
  SlopeSummary s3 = posterior_slope_summary(many, 2000, 2004);
  std::vector<double> sorted = s3.slopes;
  CHECK(std::is_sorted(sorted.begin(), sorted.end()));
  CHECK(s3.quantile(0.5) == quantile_sorted(sorted, 0.5));
}
