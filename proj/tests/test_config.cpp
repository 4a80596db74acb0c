#include <doctest.h>

#include "swg/config.hpp"
#include "swg/errors.hpp"

using namespace swg;

TEST_CASE("toml subset parses sections, scalars, and nested arrays") {
  auto kv = parse_toml(
      "# comment\n"
      "top = 1\n"
      "[a]\n"
      "s = \"hi # there\"  # trailing\n"
      "flag = true\n"
      "nums = [1, 2.5, 3]\n"
      "pairs = [[1920, 2021], [1950, 2021]]\n");
  CHECK(kv.at("top").num == 1.0);
  CHECK(kv.at("a.s").s == "hi # there");
  CHECK(kv.at("a.flag").b);
  REQUIRE(kv.at("a.nums").arr.size() == 3);
  CHECK(kv.at("a.nums").arr[1].num == 2.5);
  REQUIRE(kv.at("a.pairs").arr.size() == 2);
  CHECK(kv.at("a.pairs").arr[1].arr[0].num == 1950);

  CHECK_THROWS_AS(parse_toml("novalue =\n"), ParseError);
  CHECK_THROWS_AS(parse_toml("[unclosed\n"), ParseError);
  CHECK_THROWS_AS(parse_toml("x = \"open\n"), ParseError);
}

TEST_CASE("a minimal run config gets the documented defaults") {
  RunConfig c = parse_run_config(
      "[data]\n"
      "path = \"x.dly\"\n"
      "season = \"JJA\"\n"
      "[output]\n"
      "dir = \"out\"\n");
  CHECK(c.season == Season::JJA);
  CHECK(c.year_start == 1900);
  CHECK(c.year_end == 2021);
  CHECK(c.model.season_dim == 20);
  CHECK(c.model.year_dim == 20);
  CHECK(c.chain.n_iterations == 20000);
  CHECK(c.chain.burn_in == 5000);
  CHECK(c.chain.thin == 10);
  CHECK(c.chain.n_chains == 5);
  CHECK(c.chain.target_acceptance == 0.44);
  CHECK(c.wet_cutoff_cm == 0.3);
  CHECK(c.model.rounding_halfwidth_cm == 0.0127);
  CHECK(c.omission_threshold == 0.25);
  CHECK(c.holdout_plan().held_years.size() == 12);
  REQUIRE(c.periods.size() == 3);
  CHECK(c.periods[0] == std::pair<int, int>{1920, 2021});
  CHECK(c.periods[2] == std::pair<int, int>{1980, 2021});
  REQUIRE(c.variants.size() == 3);
  CHECK(c.variants[2] == "gpd:trend");
}

TEST_CASE("config round trip: parse, serialize, parse") {
  RunConfig c = parse_run_config(
      "[data]\n"
      "path = \"st.csv\"\n"
      "format = \"csv\"\n"
      "season = \"WET_NOV_APR\"\n"
      "year_start = 1950\n"
      "year_end = 2000\n"
      "[model]\n"
      "family = \"gpd\"\n"
      "season_dim = 8\n"
      "year_dim = 0\n"
      "[mcmc]\n"
      "iterations = 777\n"
      "burn_in = 77\n"
      "seed = 99\n"
      "[holdout]\n"
      "years = [1960, 1970]\n"
      "[trend]\n"
      "periods = [[1955, 1999]]\n"
      "metrics = [\"wet_spell_count\", \"max_kday_precip\"]\n"
      "kday = 12\n"
      "[output]\n"
      "dir = \"results\"\n"
      "workers = 3\n");
  std::string text = serialize_run_config(c);
  RunConfig c2 = parse_run_config(text);
  CHECK(serialize_run_config(c2) == text);
  CHECK(c2.model.family == EmissionFamily::gpd);
  CHECK(c2.holdout_years == std::vector<int>{1960, 1970});
  CHECK(c2.trend_kday == 12);
  CHECK(c2.metrics[1] == Metric::MaxKdayPrecip);
  CHECK(c2.chain.seed == 99);
}

TEST_CASE("config validation rejects bad structure") {
  auto base = [](const std::string& extra) {
    return "[data]\npath = \"x.dly\"\n" + extra + "[output]\ndir = \"o\"\n";
  };
  CHECK_THROWS_AS(parse_run_config("[output]\ndir = \"o\"\n"), ConfigError);  // no path
  CHECK_THROWS_AS(parse_run_config(base("[data2]\nzzz = 1\n")), ConfigError);  // unknown key
  CHECK_THROWS_AS(parse_run_config(base("[mcmc]\nburn_in = 99999\n")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(base("[model]\nseason_dim = 2\n")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(base("[crossval]\nvariants = [\"gamma\"]\n")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(base("[trend]\nperiods = [[2000, 1990]]\n")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(base("[data]\nformat = \"nc\"\n")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(base("[mcmc]\nthin = 0\n")), ConfigError);
}
