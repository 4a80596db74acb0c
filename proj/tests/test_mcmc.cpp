#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "swg/errors.hpp"
#include "swg/mcmc.hpp"

using namespace swg;
using namespace swgtest;

namespace {
ChainConfig small_config() {
  ChainConfig cfg;
  cfg.n_iterations = 400;
  cfg.burn_in = 100;
  cfg.thin = 5;
  cfg.n_chains = 2;
  cfg.seed = 31;
  cfg.adaptation_interval = 50;
  return cfg;
}
}  // namespace

TEST_CASE("fixed seed gives bit-identical samples across runs") {
  ParamVector gen = test_params_gamma();
  DailySeries d = synth_series(gen, 4, 15, 21, 0.1);
  auto md = ModelData::create(d, gen.layout->spec());
  ChainConfig cfg = small_config();
  PosteriorSamples a = fit_chains(md, cfg);
  PosteriorSamples b = fit_chains(md, cfg);
  REQUIRE(a.n_total() == cfg.n_saved() * 2);
  for (int c = 0; c < 2; ++c) {
    REQUIRE(a.chains[c].draws.size() == b.chains[c].draws.size());
    for (size_t i = 0; i < a.chains[c].draws.size(); ++i)
      CHECK(a.chains[c].draws[i] == b.chains[c].draws[i]);  // bitwise
    CHECK(a.chains[c].year_ll == b.chains[c].year_ll);
  }
  // chains differ from each other
  CHECK(a.chains[0].draws[0] != a.chains[1].draws[0]);
}

TEST_CASE("checkpoint resume reproduces the uninterrupted trajectory") {
  ParamVector gen = test_params_gamma();
  DailySeries d = synth_series(gen, 3, 12, 33, 0.15);
  auto md = ModelData::create(d, gen.layout->spec());
  ChainConfig full = small_config();
  ChainResult straight = run_chain(md, full, 0);

  ChainConfig half = full;
  half.n_iterations = 200;
  ChainResult part1 = run_chain(md, half, 0);
  ChainResult part2 = run_chain(md, full, 0, nullptr, nullptr, &part1.final_state);

  std::vector<std::vector<double>> joined = part1.draws;
  joined.insert(joined.end(), part2.draws.begin(), part2.draws.end());
  REQUIRE(joined.size() == straight.draws.size());
  for (size_t i = 0; i < joined.size(); ++i) CHECK(joined[i] == straight.draws[i]);
}

TEST_CASE("directory fits persist, reload, and resume") {
  namespace fs = std::filesystem;
  ParamVector gen = test_params_gamma();
  DailySeries d = synth_series(gen, 3, 12, 57, 0.1);
  auto md = ModelData::create(d, gen.layout->spec());
  ChainConfig cfg = small_config();
  cfg.checkpoint_interval = 100;
  std::string dir = "test_fit_dir";
  fs::remove_all(dir);
  PosteriorSamples s = fit_to_dir(md, cfg, dir, 1, false);
  PosteriorSamples loaded = load_samples(dir);
  REQUIRE(loaded.n_total() == s.n_total());
  for (int c = 0; c < 2; ++c)
    for (size_t i = 0; i < s.chains[c].draws.size(); ++i)
      for (size_t j = 0; j < s.chains[c].draws[i].size(); ++j)
        CHECK(loaded.chains[c].draws[i][j] == s.chains[c].draws[i][j]);
  CHECK(loaded.data_fingerprint == md->fingerprint());

  // resume on a complete fit is a no-op
  PosteriorSamples again = fit_to_dir(md, cfg, dir, 1, true);
  CHECK(again.n_total() == s.n_total());

  // rebuild the directory as if the run had stopped mid-way, then resume
  {
    ChainConfig halfcfg = cfg;
    halfcfg.n_iterations = 200;
    halfcfg.checkpoint_interval = 0;
    fs::remove_all(dir);
    fit_to_dir(md, halfcfg, dir, 1, false);
    std::ifstream mf(dir + "/metadata.json");
    std::string meta((std::istreambuf_iterator<char>(mf)), std::istreambuf_iterator<char>());
    mf.close();
    size_t pos = meta.find("\"n_iterations\": 200");
    REQUIRE(pos != std::string::npos);
    meta.replace(pos, std::string("\"n_iterations\": 200").size(), "\"n_iterations\": 400");
    std::ofstream out(dir + "/metadata.json", std::ios::trunc);
    out << meta;
  }
  PosteriorSamples resumed = fit_to_dir(md, cfg, dir, 1, true);
  REQUIRE(resumed.n_total() == s.n_total());
  for (int c = 0; c < 2; ++c)
    for (size_t i = 0; i < s.chains[c].draws.size(); ++i)
      CHECK(resumed.chains[c].draws[i] == s.chains[c].draws[i]);
  fs::remove_all(dir);
}

TEST_CASE("with no data the sampler recovers the uniform prior on a shrinkage sd") {
  // all-missing panel: the posterior is the prior
  ModelSpec spec;
  spec.season_dim = 3;
  spec.year_dim = 0;
  DailySeries d = blank_series(8, 12);
  for (int t = 0; t < 8; ++t)
    for (int s = 0; s < 12; ++s) d.missing[t][s] = true;
  auto md = ModelData::create(d, spec);
  ChainConfig cfg;
  cfg.n_iterations = 35000;
  cfg.burn_in = 5000;
  cfg.thin = 6;  // 5000 saved draws
  cfg.n_chains = 1;
  cfg.seed = 5;
  ChainResult res = run_chain(md, cfg, 0);
  REQUIRE(res.draws.size() == 5000);
  // the W12 group's season sd has no constraint interaction: exactly U(0.001, 10)
  int idx = md->layout->index_of("trans.W12.s_sd");
  REQUIRE(idx >= 0);
  std::vector<double> draws;
  draws.reserve(res.draws.size());
  for (const auto& row : res.draws) draws.push_back(row[idx]);
  std::sort(draws.begin(), draws.end());
  double dstat = 0;
  long n = static_cast<long>(draws.size());
  for (long i = 0; i < n; ++i) {
    double f = (draws[i] - 0.001) / (10.0 - 0.001);
    dstat = std::max(dstat, std::fabs(f - (i + 1.0) / n));
    dstat = std::max(dstat, std::fabs(f - static_cast<double>(i) / n));
  }
  // autocorrelation-adjusted sample size: be conservative by a factor 8
  double p = ks_pvalue(dstat, n / 8);
  CHECK(p > 0.01);
}

TEST_CASE("the scalar kernel reproduces a conjugate gamma-rate posterior") {
  // fixed states, gamma likelihood with known shape, prior on the rate:
  // posterior is Gamma(a0 + n k, b0 + sum x), a closed-form oracle
  std::mt19937_64 rng = make_rng(17, 0);
  const double kshape = 2.0, a0 = 3.0, b0 = 1.5;
  const int n = 40;
  std::gamma_distribution<double> gd(kshape, 0.7);
  double sum_x = 0;
  for (int i = 0; i < n; ++i) sum_x += gd(rng);
  double apost = a0 + n * kshape, bpost = b0 + sum_x;

  auto log_target = [&](const std::vector<double>& x) {
    double beta = x[0];
    if (beta <= 0) return -std::numeric_limits<double>::infinity();
    return (apost - 1.0) * std::log(beta) - bpost * beta;
  };
  ChainConfig cfg;
  cfg.adaptation_interval = 100;
  auto draws = sample_scalar_mh(log_target, {1.0}, 40000, 2000, 2, rng, cfg);
  double mean = 0;
  for (const auto& x : draws) mean += x[0];
  mean /= draws.size();
  double truth = apost / bpost;
  double mc_sd = std::sqrt(apost) / bpost / std::sqrt(draws.size() / 20.0);
  CHECK(std::fabs(mean - truth) < 5.0 * mc_sd);
}

TEST_CASE("auto initialization lands in the feasible set for both families") {
  ParamVector gen = test_params_gamma();
  DailySeries d = synth_series(gen, 8, 20, 77, 0.2);
  for (auto family : {EmissionFamily::gamma, EmissionFamily::gpd}) {
    ModelSpec spec;
    spec.family = family;
    spec.season_dim = 4;
    spec.year_dim = 4;
    auto md = ModelData::create(d, spec);
    std::mt19937_64 rng = make_rng(3, 0);
    ParamVector init = auto_init(*md, rng);
    CHECK(std::isfinite(log_posterior_value(*md, init)));
  }
}

TEST_CASE("an explicitly infeasible start is rejected with a numerical error") {
  ParamVector gen = test_params_gamma();
  DailySeries d = synth_series(gen, 3, 10, 13);
  auto md = ModelData::create(d, gen.layout->spec());
  ParamVector bad = gen;
  bad.set("emis.k1.logit_pi", -5.0);  // violates the zero-probability ordering
  ChainConfig cfg = small_config();
  CHECK_THROWS_AS(run_chain(md, cfg, 0, &bad), NumericalError);
}

TEST_CASE("acceptance rates adapt toward the target on a smooth posterior") {
  ParamVector gen = test_params_gamma();
  DailySeries d = synth_series(gen, 6, 30, 99, 0.05);
  auto md = ModelData::create(d, gen.layout->spec());
  ChainConfig cfg;
  cfg.n_iterations = 3000;
  cfg.burn_in = 500;
  cfg.thin = 10;
  cfg.n_chains = 1;
  cfg.seed = 7;
  ChainResult res = run_chain(md, cfg, 0);
  double acc = res.acceptance[md->layout->index_of("trans.D1.b0")];
  CHECK(acc > 0.2);
  CHECK(acc < 0.7);
}
