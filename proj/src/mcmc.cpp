#include "swg/mcmc.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "swg/dist.hpp"
#include "swg/errors.hpp"

namespace fs = std::filesystem;

namespace swg {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double runif(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}
double rnorm(std::mt19937_64& rng) { return norm_quantile(runif(rng)); }

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw InputError("cannot write " + tmp);
    f << content;
  }
  fs::rename(tmp, path);
}

}  // namespace

void ChainConfig::validate() const {
  if (n_iterations <= 0) throw ConfigError("n_iterations must be positive");
  if (burn_in < 0 || burn_in >= n_iterations)
    throw ConfigError("burn_in must lie in [0, n_iterations)");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (n_chains < 1) throw ConfigError("n_chains must be >= 1");
  if (adaptation_interval < 1) throw ConfigError("adaptation_interval must be >= 1");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw ConfigError("target_acceptance must lie in (0,1)");
  if (!(initial_step > 0.0)) throw ConfigError("initial_step must be positive");
}

ParamVector auto_init(const ModelData& md, std::mt19937_64& rng) {
  const LayoutPtr& layout = md.layout;
  ParamVector base = make_default_params(layout);
  const DailySeries& d = md.data;

  std::vector<double> obs;
  long zero_ct = 0;
  long dd = 0, dn = 0, ww = 0, wn = 0;
  for (int t = 0; t < d.n_years(); ++t) {
    for (int s = 0; s < d.season_day_count[t]; ++s) {
      if (d.missing[t][s]) continue;
      double v = d.values[t][s];
      obs.push_back(v);
      if (v == 0.0) ++zero_ct;
      if (s > 0 && !d.missing[t][s - 1]) {
        bool prev_dry = d.values[t][s - 1] == 0.0;
        bool cur_dry = v == 0.0;
        if (prev_dry) {
          ++dn;
          if (cur_dry) ++dd;
        } else {
          ++wn;
          if (!cur_dry) ++ww;
        }
      }
    }
  }

  auto clamp01 = [](double p, double lo, double hi) { return std::clamp(p, lo, hi); };
  if (!obs.empty()) {
    double p0 = static_cast<double>(zero_ct) / obs.size();
    double pi1 = clamp01(0.5 + 0.5 * p0, 0.55, 0.985);
    base[layout->pi_logit(kEmisDry)] = logit(pi1);
    base[layout->pi_logit(kEmisWet1)] = logit(clamp01(0.4 * pi1, 0.02, 0.9));
    base[layout->pi_logit(kEmisWet2)] = logit(clamp01(0.1 * pi1, 0.005, 0.8));

    std::vector<double> wet;
    for (double v : obs)
      if (v > 0.0) wet.push_back(v);
    std::sort(wet.begin(), wet.end());
    if (wet.size() >= 4) {
      size_t half = wet.size() / 2;
      std::vector<double> lowv(wet.begin(), wet.begin() + half);
      std::vector<double> highv(wet.begin() + half, wet.end());
      auto mom = [](const std::vector<double>& v) {
        double mean = 0;
        for (double x : v) mean += x;
        mean /= v.size();
        double var = 0;
        for (double x : v) var += (x - mean) * (x - mean);
        var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
        return std::pair<double, double>(mean, var);
      };
      auto [m4, v4] = mom(lowv);
      auto [m5, v5] = mom(highv);
      if (m5 <= m4) m5 = m4 * 2.0 + 1e-3;
      if (md.spec.family == EmissionFamily::gamma) {
        auto set_gamma = [&](EmisBlock k, double mean, double var) {
          double shape = var > 0 ? std::clamp(mean * mean / var, 0.05, 50.0) : 1.0;
          double scale = std::clamp(mean / shape, 1e-4, 100.0);
          base[layout->emis_set(k, kShape).intercept] = std::log(shape);
          base[layout->emis_set(k, kScale).intercept] = std::log(scale);
        };
        set_gamma(kEmisWet1, m4, v4);
        set_gamma(kEmisWet2, m5, v5);
        set_gamma(kEmisDry, std::min(m4 / 4.0, 0.05), 0.0);
      } else {
        auto set_gpd = [&](EmisBlock k, double median) {
          double xi = 0.1;
          double sigma = std::clamp(median / gpd_median(xi, 1.0), 1e-4, 100.0);
          base[layout->emis_set(k, kShape).intercept] = xi;
          base[layout->emis_set(k, kScale).intercept] = std::log(sigma);
        };
        set_gpd(kEmisWet1, lowv[lowv.size() / 2]);
        set_gpd(kEmisWet2, highv[highv.size() / 2]);
        set_gpd(kEmisDry, std::min(lowv[lowv.size() / 2] / 4.0, 0.05));
      }
    }
    if (dn >= 8) {
      double pdd = clamp01(static_cast<double>(dd) / dn, 0.1, 0.95);
      base[layout->trans_intercept(kD1)] = logit(pdd) + 0.6;
      base[layout->trans_intercept(kD2)] = logit(pdd);
      base[layout->trans_intercept(kD3)] = logit(pdd) - 0.6;
    }
    if (wn >= 8) {
      double pww = clamp01(static_cast<double>(ww) / wn, 0.1, 0.95);
      base[layout->trans_intercept(kW1)] = logit(pww);
      base[layout->trans_intercept(kW2)] = logit(pww);
    }
    base[layout->trans_intercept(kDW1)] = logit(0.7);
    base[layout->trans_intercept(kW12)] = logit(0.3);
    base[layout->trans_intercept(kW21)] = logit(0.3);
    base[layout->trans_intercept(kWD1)] = logit(0.6);
    base[layout->trans_intercept(kWD2)] = logit(0.6);
  }

  for (int attempt = 0; attempt < 1000; ++attempt) {
    ParamVector cand = base;
    if (attempt > 0) {
      double jitter = 0.02 * std::min(attempt, 25);
      for (int i = 0; i < layout->size(); ++i) {
        ParamKind k = layout->info(i).kind;
        bool is_sd = k == ParamKind::TransSeasonSd || k == ParamKind::TransYearSd ||
                     k == ParamKind::EmisSeasonSd || k == ParamKind::EmisYearSd;
        if (!is_sd) cand.v[i] += jitter * rnorm(rng);
      }
    }
    if (log_posterior_value(md, cand) > kNegInf) return cand;
  }
  throw NumericalError(
      "could not find a feasible starting state after 1000 attempts; supply an explicit init");
}

ChainResult run_chain(std::shared_ptr<const ModelData> md, const ChainConfig& cfg,
                      int chain_index, const ParamVector* init, ChainSink* sink,
                      const SamplerSnapshot* resume, bool use_cache) {
  cfg.validate();
  std::mt19937_64 rng = make_rng(cfg.seed, static_cast<std::uint64_t>(chain_index));
  Engine engine(md, use_cache);
  const int n = md->layout->size();

  std::vector<double> log_scale(n, std::log(cfg.initial_step));
  std::vector<long> iacc(n, 0), iprop(n, 0), lacc(n, 0), lprop(n, 0);
  long adapt_round = 0;
  long start_iter = 0;

  if (resume) {
    if (static_cast<int>(resume->x.size()) != n)
      throw InputError("resume state does not match the model layout");
    ParamVector x(md->layout);
    x.v = resume->x;
    engine.bind(x);
    log_scale = resume->log_scale;
    iacc = resume->interval_acc;
    iprop = resume->interval_prop;
    lacc = resume->lifetime_acc;
    lprop = resume->lifetime_prop;
    adapt_round = resume->adapt_round;
    start_iter = resume->iteration;
    std::istringstream ss(resume->rng_state);
    ss >> rng;
    if (!ss) throw InputError("corrupt rng state in resume snapshot");
  } else {
    ParamVector x = init ? *init : auto_init(*md, rng);
    engine.bind(x);
    if (engine.log_posterior() == kNegInf)
      throw NumericalError("initial parameter state is infeasible");
  }

  ChainResult out;
  out.draws.reserve(cfg.n_saved());

  auto snapshot = [&](long iter) {
    SamplerSnapshot s;
    s.iteration = iter;
    s.x = engine.params().v;
    s.log_scale = log_scale;
    s.interval_acc = iacc;
    s.interval_prop = iprop;
    s.lifetime_acc = lacc;
    s.lifetime_prop = lprop;
    s.adapt_round = adapt_round;
    std::ostringstream ss;
    ss << rng;
    s.rng_state = ss.str();
    return s;
  };

  for (long iter = start_iter + 1; iter <= cfg.n_iterations; ++iter) {
    for (int i = 0; i < n; ++i) {
      ++iprop[i];
      ++lprop[i];
      double step = std::exp(log_scale[i]) * rnorm(rng);
      double delta = engine.propose(i, engine.params()[i] + step);
      double u = runif(rng);
      if (delta > 0.0 || std::log(u) < delta) {
        engine.accept();
        ++iacc[i];
        ++lacc[i];
      } else {
        engine.reject();
      }
    }
    if (iter % cfg.adaptation_interval == 0) {
      ++adapt_round;
      for (int i = 0; i < n; ++i) {
        double rate = iprop[i] > 0 ? static_cast<double>(iacc[i]) / iprop[i] : 0.0;
        log_scale[i] = adapt_log_scale(log_scale[i], rate, cfg.target_acceptance, adapt_round);
        iacc[i] = 0;
        iprop[i] = 0;
      }
    }
    if (iter > cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0) {
      out.draws.push_back(engine.params().v);
      out.year_ll.emplace_back(engine.year_loglik(), engine.year_loglik() + md->n_years);
      if (sink) sink->on_sample(iter, engine.params().v, engine.year_loglik(), md->n_years);
    }
    if (sink && cfg.checkpoint_interval > 0 && iter % cfg.checkpoint_interval == 0 &&
        iter < cfg.n_iterations)
      sink->on_checkpoint(snapshot(iter));
  }
  out.final_state = snapshot(cfg.n_iterations);
  if (sink) sink->on_checkpoint(out.final_state);
  out.acceptance.resize(n);
  for (int i = 0; i < n; ++i)
    out.acceptance[i] = lprop[i] > 0 ? static_cast<double>(lacc[i]) / lprop[i] : 0.0;
  return out;
}

long PosteriorSamples::n_total() const {
  long n = 0;
  for (const auto& c : chains) n += static_cast<long>(c.draws.size());
  return n;
}

ParamVector PosteriorSamples::draw(int chain, long index) const {
  ParamVector p(layout);
  p.v = chains.at(chain).draws.at(index);
  return p;
}

namespace {

void run_chains_parallel(int n_chains, int workers, const std::function<void(int)>& body) {
  if (workers <= 1) {
    for (int c = 0; c < n_chains; ++c) body(c);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  int n_workers = std::min(workers, n_chains);
  std::vector<std::exception_ptr> errors(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int c = next.fetch_add(1); c < n_chains; c = next.fetch_add(1)) body(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

nlohmann::json snapshot_to_json(const SamplerSnapshot& s) {
  nlohmann::json j;
  j["iteration"] = s.iteration;
  j["x"] = s.x;
  j["log_scale"] = s.log_scale;
  j["interval_acc"] = s.interval_acc;
  j["interval_prop"] = s.interval_prop;
  j["lifetime_acc"] = s.lifetime_acc;
  j["lifetime_prop"] = s.lifetime_prop;
  j["adapt_round"] = s.adapt_round;
  j["rng_state"] = s.rng_state;
  return j;
}

SamplerSnapshot snapshot_from_json(const nlohmann::json& j) {
  SamplerSnapshot s;
  s.iteration = j.at("iteration").get<long>();
  s.x = j.at("x").get<std::vector<double>>();
  s.log_scale = j.at("log_scale").get<std::vector<double>>();
  s.interval_acc = j.at("interval_acc").get<std::vector<long>>();
  s.interval_prop = j.at("interval_prop").get<std::vector<long>>();
  s.lifetime_acc = j.at("lifetime_acc").get<std::vector<long>>();
  s.lifetime_prop = j.at("lifetime_prop").get<std::vector<long>>();
  s.adapt_round = j.at("adapt_round").get<long>();
  s.rng_state = j.at("rng_state").get<std::string>();
  return s;
}

std::string chain_csv(const std::string& dir, int c) {
  return dir + "/chain_" + std::to_string(c) + ".csv";
}
std::string chain_yearll_csv(const std::string& dir, int c) {
  return dir + "/chain_" + std::to_string(c) + "_yearll.csv";
}
std::string chain_state_json(const std::string& dir, int c) {
  return dir + "/chain_" + std::to_string(c) + "_state.json";
}

// Streams saved draws to the chain tables and persists resumable sampler
// state on every checkpoint.
class FileSink : public ChainSink {
 public:
  FileSink(std::string dir, int chain, const ParamLayout& layout, const std::vector<int>& years,
           bool append)
      : dir_(std::move(dir)), chain_(chain) {
    auto mode = append ? std::ios::app : std::ios::trunc;
    draws_.open(chain_csv(dir_, chain_), mode);
    yll_.open(chain_yearll_csv(dir_, chain_), mode);
    if (!draws_ || !yll_) throw InputError("cannot open chain tables in " + dir_);
    if (!append) {
      draws_ << "iter";
      for (const auto& n : layout.names()) draws_ << ',' << n;
      draws_ << '\n';
      yll_ << "iter";
      for (int y : years) yll_ << ",ll_" << y;
      yll_ << '\n';
    }
  }

  void on_sample(long iter, const std::vector<double>& x, const double* year_ll,
                 int n_years) override {
    draws_ << iter;
    for (double v : x) draws_ << ',' << fmt17(v);
    draws_ << '\n';
    yll_ << iter;
    for (int t = 0; t < n_years; ++t) yll_ << ',' << fmt17(year_ll[t]);
    yll_ << '\n';
  }

  void on_checkpoint(const SamplerSnapshot& snap) override {
    draws_.flush();
    yll_.flush();
    write_atomic(chain_state_json(dir_, chain_), snapshot_to_json(snap).dump(1));
  }

 private:
  std::string dir_;
  int chain_;
  std::ofstream draws_, yll_;
};

nlohmann::json config_to_json(const ChainConfig& c) {
  nlohmann::json j;
  j["n_iterations"] = c.n_iterations;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["n_chains"] = c.n_chains;
  j["seed"] = c.seed;
  j["adaptation_interval"] = c.adaptation_interval;
  j["target_acceptance"] = c.target_acceptance;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["initial_step"] = c.initial_step;
  return j;
}

ChainConfig config_from_json(const nlohmann::json& j) {
  ChainConfig c;
  c.n_iterations = j.at("n_iterations").get<long>();
  c.burn_in = j.at("burn_in").get<long>();
  c.thin = j.at("thin").get<int>();
  c.n_chains = j.at("n_chains").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.adaptation_interval = j.at("adaptation_interval").get<int>();
  c.target_acceptance = j.at("target_acceptance").get<double>();
  c.checkpoint_interval = j.at("checkpoint_interval").get<long>();
  c.initial_step = j.at("initial_step").get<double>();
  return c;
}

std::vector<std::vector<double>> read_csv_table(const std::string& path, size_t expect_cols) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line)) throw ParseError("empty table " + path, 1);
  std::vector<std::vector<double>> rows;
  long line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(expect_cols);
    const char* ptr = line.c_str();
    char* end;
    while (true) {
      double v = std::strtod(ptr, &end);
      if (end == ptr) break;
      row.push_back(v);
      ptr = *end == ',' ? end + 1 : end;
      if (*end == '\0') break;
    }
    if (row.size() != expect_cols + 1)  // +1 for the iter column
      throw ParseError("bad row width in " + path, line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

PosteriorSamples fit_chains(std::shared_ptr<const ModelData> md, const ChainConfig& cfg,
                            int workers, const ParamVector* init) {
  cfg.validate();
  PosteriorSamples out;
  out.layout = md->layout;
  out.spec = md->spec;
  out.config = cfg;
  out.data_fingerprint = md->fingerprint();
  out.max_obs_cm = md->max_obs_cm;
  out.years = md->data.years;
  out.chains.resize(cfg.n_chains);
  run_chains_parallel(cfg.n_chains, workers, [&](int c) {
    out.chains[c] = run_chain(md, cfg, c, init);
  });
  return out;
}

PosteriorSamples fit_to_dir(std::shared_ptr<const ModelData> md, const ChainConfig& cfg,
                            const std::string& dir, int workers, bool resume,
                            const ParamVector* init) {
  cfg.validate();
  fs::create_directories(dir);
  std::string meta_path = dir + "/metadata.json";

  nlohmann::json meta;
  meta["spec"] = nlohmann::json::parse(spec_to_json(md->spec));
  meta["config"] = config_to_json(cfg);
  meta["data_fingerprint"] = md->fingerprint();
  meta["max_obs_cm"] = md->max_obs_cm;
  meta["years"] = md->data.years;
  meta["param_names"] = md->layout->names();
  meta["station_id"] = md->data.station_id;
  meta["season"] = season_name(md->data.season);

  if (fs::exists(meta_path) && !resume) {
    // deterministic rerun semantics: a fresh fit replaces the old one
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  if (fs::exists(meta_path)) {
    std::ifstream f(meta_path);
    nlohmann::json old = nlohmann::json::parse(f);
    if (old.at("data_fingerprint") != meta.at("data_fingerprint") ||
        old.at("spec") != meta.at("spec") || old.at("config") != meta.at("config"))
      throw InputError("resume refused: existing fit in " + dir +
                       " was produced with different data, model, or chain settings");
  } else {
    write_atomic(meta_path, meta.dump(1));
  }

  run_chains_parallel(cfg.n_chains, workers, [&](int c) {
    SamplerSnapshot snap;
    bool have_snap = false;
    if (resume && fs::exists(chain_state_json(dir, c))) {
      std::ifstream f(chain_state_json(dir, c));
      snap = snapshot_from_json(nlohmann::json::parse(f));
      have_snap = true;
      if (snap.iteration >= cfg.n_iterations) return;  // chain already complete
    }
    FileSink sink(dir, c, *md->layout, md->data.years, /*append=*/have_snap);
    run_chain(md, cfg, c, init, &sink, have_snap ? &snap : nullptr);
  });
  return load_samples(dir);
}

void save_samples(const PosteriorSamples& s, const std::string& dir) {
  fs::create_directories(dir);
  nlohmann::json meta;
  meta["spec"] = nlohmann::json::parse(spec_to_json(s.spec));
  meta["config"] = config_to_json(s.config);
  meta["data_fingerprint"] = s.data_fingerprint;
  meta["max_obs_cm"] = s.max_obs_cm;
  meta["years"] = s.years;
  meta["param_names"] = s.layout->names();
  write_atomic(dir + "/metadata.json", meta.dump(1));
  for (int c = 0; c < s.n_chains(); ++c) {
    FileSink sink(dir, c, *s.layout, s.years, /*append=*/false);
    const ChainResult& ch = s.chains[c];
    for (size_t i = 0; i < ch.draws.size(); ++i)
      sink.on_sample(static_cast<long>(i), ch.draws[i], ch.year_ll[i].data(),
                     static_cast<int>(ch.year_ll[i].size()));
    sink.on_checkpoint(ch.final_state);
  }
}

PosteriorSamples load_samples(const std::string& dir) {
  std::ifstream f(dir + "/metadata.json");
  if (!f) throw InputError("no samples metadata in " + dir);
  nlohmann::json meta = nlohmann::json::parse(f);
  PosteriorSamples out;
  out.spec = spec_from_json(meta.at("spec").dump());
  out.layout = make_layout(out.spec);
  out.config = config_from_json(meta.at("config"));
  out.data_fingerprint = meta.at("data_fingerprint").get<std::string>();
  out.max_obs_cm = meta.at("max_obs_cm").get<double>();
  out.years = meta.at("years").get<std::vector<int>>();
  auto names = meta.at("param_names").get<std::vector<std::string>>();
  if (names != out.layout->names())
    throw InputError("samples metadata parameter names do not match the model layout");

  for (int c = 0; c < out.config.n_chains; ++c) {
    if (!fs::exists(chain_csv(dir, c)))
      throw InputError("missing chain table " + chain_csv(dir, c));
    ChainResult ch;
    auto draws = read_csv_table(chain_csv(dir, c), names.size());
    auto ylls = read_csv_table(chain_yearll_csv(dir, c), out.years.size());
    if (draws.size() != ylls.size())
      throw InputError("chain tables disagree on saved draw count in " + dir);
    for (auto& row : draws) ch.draws.emplace_back(row.begin() + 1, row.end());
    for (auto& row : ylls) ch.year_ll.emplace_back(row.begin() + 1, row.end());
    if (fs::exists(chain_state_json(dir, c))) {
      std::ifstream sf(chain_state_json(dir, c));
      ch.final_state = snapshot_from_json(nlohmann::json::parse(sf));
    }
    out.chains.push_back(std::move(ch));
  }
  return out;
}

std::vector<std::vector<double>> sample_scalar_mh(
    const std::function<double(const std::vector<double>&)>& log_target,
    std::vector<double> x0, long n_iterations, long burn_in, int thin,
    std::mt19937_64& rng, const ChainConfig& cfg) {
  const int n = static_cast<int>(x0.size());
  std::vector<double> x = std::move(x0);
  double cur = log_target(x);
  if (cur == kNegInf) throw NumericalError("sample_scalar_mh: infeasible start");
  std::vector<double> log_scale(n, std::log(cfg.initial_step));
  std::vector<long> acc(n, 0), prop(n, 0);
  long round = 0;
  std::vector<std::vector<double>> out;
  for (long iter = 1; iter <= n_iterations; ++iter) {
    for (int i = 0; i < n; ++i) {
      ++prop[i];
      double old = x[i];
      x[i] = old + std::exp(log_scale[i]) * rnorm(rng);
      double alt = log_target(x);
      double u = runif(rng);
      if (alt - cur > 0.0 || std::log(u) < alt - cur) {
        cur = alt;
        ++acc[i];
      } else {
        x[i] = old;
      }
    }
    if (iter % cfg.adaptation_interval == 0) {
      ++round;
      for (int i = 0; i < n; ++i) {
        double rate = prop[i] > 0 ? static_cast<double>(acc[i]) / prop[i] : 0.0;
        log_scale[i] = adapt_log_scale(log_scale[i], rate, cfg.target_acceptance, round);
        acc[i] = 0;
        prop[i] = 0;
      }
    }
    if (iter > burn_in && (iter - burn_in) % thin == 0) out.push_back(x);
  }
  return out;
}

}  // namespace swg
