#include <doctest.h>

#include <random>
#include <sstream>
#include <tuple>

#include "swg/calendar.hpp"
#include "swg/errors.hpp"
#include "swg/ghcn.hpp"
#include "swg/series.hpp"

using namespace swg;

namespace {

// independent calendar oracle: count days by walking every date of the window
int oracle_window_length(Season season, int label) {
  static const int kLens[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  auto leap = [](int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; };
  auto mlen = [&](int y, int m) { return m == 2 && leap(y) ? 29 : kLens[m - 1]; };
  int n = 0;
  switch (season) {
    case Season::DJF: return mlen(label - 1, 12) + mlen(label, 1) + mlen(label, 2);
    case Season::MAM: return mlen(label, 3) + mlen(label, 4) + mlen(label, 5);
    case Season::JJA: return mlen(label, 6) + mlen(label, 7) + mlen(label, 8);
    case Season::SON: return mlen(label, 9) + mlen(label, 10) + mlen(label, 11);
    case Season::WET_NOV_APR:
      n = mlen(label - 1, 11) + mlen(label - 1, 12);
      for (int m = 1; m <= 4; ++m) n += mlen(label, m);
      return n;
  }
  return 0;
}

std::string dly_line(const std::string& id, int year, int month, const std::string& element,
                     const std::vector<std::tuple<int, char, char>>& days) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d%02d", year, month);
  std::string line = id + buf + element;
  for (int d = 0; d < 31; ++d) {
    int value = -9999;
    char mflag = ' ', qflag = ' ';
    if (d < static_cast<int>(days.size())) std::tie(value, mflag, qflag) = days[d];
    std::snprintf(buf, sizeof buf, "%5d", value);
    line += buf;
    line += mflag;
    line += qflag;
    line += ' ';  // sflag unused
  }
  return line;
}

}  // namespace

TEST_CASE("season lengths match the calendar oracle over 1900-2021") {
  for (int y = 1900; y <= 2021; ++y) {
    for (Season s : {Season::DJF, Season::MAM, Season::JJA, Season::SON, Season::WET_NOV_APR}) {
      CHECK(season_length(s, y) == oracle_window_length(s, y));
      CHECK(static_cast<int>(season_days(s, y).size()) == season_length(s, y));
    }
  }
  CHECK_FALSE(is_leap_year(1900));
  CHECK(is_leap_year(2000));
  CHECK(season_length(Season::DJF, 1900) == 90);
  CHECK(season_length(Season::DJF, 2000) == 91);
  CHECK(season_length(Season::MAM, 1955) == 92);
  CHECK(season_length(Season::SON, 1955) == 91);
  CHECK(season_length(Season::WET_NOV_APR, 2000) == 182);
  CHECK(season_length(Season::WET_NOV_APR, 2001) == 181);
}

TEST_CASE("dly parsing reads values, sentinels, and flags") {
  std::string id = "USW00000001";
  std::string text =
      dly_line(id, 1987, 2, "PRCP", {{25, ' ', ' '}, {-9999, ' ', ' '}, {76, ' ', 'G'}}) + "\n" +
      dly_line(id, 1987, 2, "TMAX", {{123, ' ', ' '}}) + "\n";
  std::istringstream in(text);
  auto recs = parse_dly(in);
  REQUIRE(recs.size() == 28);  // every calendar day of the month is present
  CHECK(recs[0].prcp_tenths_mm == 25);
  CHECK_FALSE(recs[1].prcp_tenths_mm.has_value());
  CHECK(recs[2].prcp_tenths_mm == 76);
  CHECK(recs[2].qflag == 'G');
}

TEST_CASE("dly parse errors carry line numbers") {
  std::istringstream bad("USW00000001198702PRCPxxxxx\n");
  CHECK_THROWS_AS(parse_dly(bad), ParseError);
  std::istringstream bad2(dly_line("USW00000001", 1987, 13, "PRCP", {}));
  CHECK_THROWS_AS(parse_dly(bad2), ParseError);
}

TEST_CASE("csv parsing") {
  std::istringstream in(
      "date,prcp_tenths_mm,mflag,qflag\n"
      "1987-02-03,76,,G\n"
      "1987-02-04,,\n"
      "1987-02-05,0,T,\n");
  auto recs = parse_csv(in);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].prcp_tenths_mm == 76);
  CHECK(recs[0].qflag == 'G');
  CHECK_FALSE(recs[1].prcp_tenths_mm.has_value());
  CHECK(recs[2].mflag == 'T');
  std::istringstream bad("1987-02-30,5,,\n");
  CHECK_THROWS_AS(parse_csv(bad), ParseError);
}

TEST_CASE("quality filter removes flagged values and zeroes traces") {
  std::vector<RawRecord> recs(3);
  recs[0].date = {1980, 1, 1};
  recs[0].prcp_tenths_mm = 10;
  recs[0].qflag = 'X';
  recs[1].date = {1980, 1, 2};
  recs[1].prcp_tenths_mm = 0;
  recs[1].mflag = 'T';
  recs[2].date = {1980, 1, 3};
  recs[2].prcp_tenths_mm = 55;
  auto out = apply_quality_filter(recs);
  CHECK_FALSE(out[0].prcp_tenths_mm.has_value());
  CHECK(out[1].prcp_tenths_mm == 0);
  CHECK(out[2].prcp_tenths_mm == 55);
  // a trace that also fails quality stays dropped
  RawRecord both;
  both.date = {1980, 1, 4};
  both.prcp_tenths_mm = 1;
  both.mflag = 'T';
  both.qflag = 'Q';
  auto out2 = apply_quality_filter({both});
  CHECK_FALSE(out2[0].prcp_tenths_mm.has_value());
}

TEST_CASE("seasonize converts units, assigns winter labels, and masks gaps") {
  std::vector<RawRecord> recs;
  RawRecord r;
  r.date = {1899, 12, 15};
  r.prcp_tenths_mm = 254;
  recs.push_back(r);
  r.date = {1900, 1, 2};
  r.prcp_tenths_mm = 0;
  recs.push_back(r);
  DailySeries d = seasonize(recs, Season::DJF, {1900, 1901}, "X");
  CHECK(d.years == std::vector<int>{1900, 1901});
  CHECK(d.season_day_count[0] == 90);
  // Dec 15 is day index 14 of the 1900 winter
  CHECK_FALSE(d.missing[0][14]);
  CHECK(d.values[0][14] == doctest::Approx(2.54));
  CHECK_FALSE(d.missing[0][32]);  // Jan 2
  CHECK(d.values[0][32] == 0.0);
  CHECK(d.missing[0][0]);  // Dec 1: no record
  // 1901 has no records at all
  for (int s = 0; s < d.season_day_count[1]; ++s) CHECK(d.missing[1][s]);

  // empty window intersection is an error
  CHECK_THROWS_AS(seasonize(recs, Season::JJA, {1900, 1901}, "X"), InputError);
  // physical ceiling rejects corrupt magnitudes
  r.date = {1900, 1, 5};
  r.prcp_tenths_mm = 2500000;
  recs.push_back(r);
  CHECK_THROWS_AS(seasonize(recs, Season::DJF, {1900, 1901}, "X"), InputError);
}

TEST_CASE("seasonize round trip reproduces the filtered records") {
  std::vector<RawRecord> recs;
  std::mt19937_64 rng(5);
  for (int y = 1950; y <= 1953; ++y) {
    for (int m : {3, 4, 5}) {
      for (int day = 1; day <= days_in_month(y, m); ++day) {
        if (rng() % 4 == 0) continue;  // absent from file
        RawRecord r;
        r.date = {y, m, day};
        if (rng() % 5 != 0) r.prcp_tenths_mm = static_cast<int>(rng() % 300);
        recs.push_back(r);
      }
    }
  }
  DailySeries d = seasonize(recs, Season::MAM, {1950, 1953}, "X");
  // flatten back and compare against the record list
  size_t found = 0;
  for (const auto& r : recs) {
    if (!r.prcp_tenths_mm) continue;
    int t = d.year_index(r.date.year);
    auto days = season_days(Season::MAM, r.date.year);
    size_t s = 0;
    while (days[s] != r.date) ++s;
    CHECK_FALSE(d.missing[t][s]);
    CHECK(d.values[t][s] == doctest::Approx(*r.prcp_tenths_mm / 100.0).epsilon(1e-15));
    ++found;
  }
  // every unmatched day is masked
  size_t observed = 0;
  for (int t = 0; t < d.n_years(); ++t)
    for (int s = 0; s < d.season_day_count[t]; ++s)
      if (!d.missing[t][s]) ++observed;
  CHECK(observed == found);
  // exactly one of {value defined, missing} per cell is structural: validate()
  d.validate(200.0);
}

TEST_CASE("series json round trip") {
  std::vector<RawRecord> recs;
  RawRecord r;
  r.date = {1960, 7, 4};
  r.prcp_tenths_mm = 132;
  recs.push_back(r);
  DailySeries d = seasonize(recs, Season::JJA, {1960, 1960}, "ST1");
  DailySeries back = series_from_json(series_to_json(d));
  CHECK(back.station_id == d.station_id);
  CHECK(back.years == d.years);
  CHECK(back.values == d.values);
  CHECK(back.missing == d.missing);
  CHECK(back.season == d.season);
}
