#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "swg/engine.hpp"
#include "swg/params.hpp"

namespace swg {

struct ChainConfig {
  long n_iterations = 20000;
  long burn_in = 5000;
  int thin = 10;
  int n_chains = 5;
  std::uint64_t seed = 1;
  int adaptation_interval = 200;
  double target_acceptance = 0.44;
  long checkpoint_interval = 0;  // 0 = checkpoint only at the end
  double initial_step = 0.1;

  void validate() const;
  long n_saved() const { return (n_iterations - burn_in) / thin; }
};

// Diminishing-adaptation update for one proposal scale, shared between the
// model sampler and the generic kernel below.
inline double adapt_log_scale(double log_scale, double rate, double target, long round) {
  log_scale += (rate - target) / std::sqrt(static_cast<double>(round));
  return std::clamp(log_scale, std::log(1e-6), std::log(50.0));
}

struct SamplerSnapshot {
  long iteration = 0;
  std::vector<double> x;
  std::vector<double> log_scale;
  std::vector<long> interval_acc, interval_prop;
  std::vector<long> lifetime_acc, lifetime_prop;
  long adapt_round = 0;
  std::string rng_state;
};

struct ChainResult {
  std::vector<std::vector<double>> draws;    // [saved][param]
  std::vector<std::vector<double>> year_ll;  // [saved][year]
  std::vector<double> acceptance;            // lifetime rate per parameter
  SamplerSnapshot final_state;
};

// Streaming consumer for draws and checkpoints (file-backed during fits).
class ChainSink {
 public:
  virtual ~ChainSink() = default;
  virtual void on_sample(long iter, const std::vector<double>& x,
                         const double* year_ll, int n_years) = 0;
  virtual void on_checkpoint(const SamplerSnapshot& snap) { (void)snap; }
};

// Method-of-moments start satisfying the ordering constraints; jitters up to
// 1000 times before giving up.
ParamVector auto_init(const ModelData& md, std::mt19937_64& rng);

ChainResult run_chain(std::shared_ptr<const ModelData> md, const ChainConfig& cfg,
                      int chain_index, const ParamVector* init = nullptr,
                      ChainSink* sink = nullptr, const SamplerSnapshot* resume = nullptr,
                      bool use_cache = true);

struct PosteriorSamples {
  LayoutPtr layout;
  ModelSpec spec;
  ChainConfig config;
  std::string data_fingerprint;
  double max_obs_cm = 0.0;
  std::vector<int> years;
  std::vector<ChainResult> chains;

  int n_chains() const { return static_cast<int>(chains.size()); }
  long n_total() const;
  ParamVector draw(int chain, long index) const;
};

// In-memory multi-chain fit (tests, small studies).
PosteriorSamples fit_chains(std::shared_ptr<const ModelData> md, const ChainConfig& cfg,
                            int workers = 1, const ParamVector* init = nullptr);

// Directory-backed fit with incremental chain tables and resumable sampler
// state; returns the completed samples loaded back from disk.
PosteriorSamples fit_to_dir(std::shared_ptr<const ModelData> md, const ChainConfig& cfg,
                            const std::string& dir, int workers, bool resume,
                            const ParamVector* init = nullptr);

void save_samples(const PosteriorSamples& s, const std::string& dir);
PosteriorSamples load_samples(const std::string& dir);

// Generic scalar-at-a-time adaptive random-walk Metropolis over an arbitrary
// log target; the model sampler uses the same proposal and adaptation rules.
// Used directly by validation checks against closed-form posteriors.
std::vector<std::vector<double>> sample_scalar_mh(
    const std::function<double(const std::vector<double>&)>& log_target,
    std::vector<double> x0, long n_iterations, long burn_in, int thin,
    std::mt19937_64& rng, const ChainConfig& cfg = {});

}  // namespace swg
