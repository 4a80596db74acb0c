#include "swg/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "swg/diagnostics.hpp"
#include "swg/dist.hpp"
#include "swg/errors.hpp"
#include "swg/eval.hpp"
#include "swg/ghcn.hpp"
#include "swg/mcmc.hpp"
#include "swg/simulate.hpp"
#include "swg/trend.hpp"

namespace fs = std::filesystem;

namespace swg {

namespace {

// fixed rng stream bases so no command shares a stream with another
constexpr std::uint64_t kStreamSim = 1u << 20;
constexpr std::uint64_t kStreamImpute = 2u << 20;
constexpr std::uint64_t kStreamEmit = 3u << 20;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_provenance(const RunConfig& cfg, const DailySeries& data) {
  fs::create_directories(cfg.output_dir);
  std::ofstream f(cfg.output_dir + "/config.toml", std::ios::trunc);
  if (!f) throw InputError("cannot write into output directory " + cfg.output_dir);
  f << serialize_run_config(cfg);
  save_series(data, cfg.output_dir + "/series.json");
}

PosteriorSamples load_fit(const RunConfig& cfg, const ModelData& md) {
  std::string dir = cfg.output_dir + "/samples";
  if (!fs::exists(dir + "/metadata.json"))
    throw InputError("no fitted samples under " + dir + "; run fit first");
  PosteriorSamples s = load_samples(dir);
  if (s.data_fingerprint != md.fingerprint())
    throw InputError("samples in " + dir + " were fit on different data than this config loads");
  if (!(s.spec == md.spec))
    throw InputError("samples in " + dir + " use a different model structure");
  return s;
}

// flat draw list (chain-major) capped at max_draws, balanced across chains
struct DrawRef {
  int chain;
  long index;
};
std::vector<DrawRef> draw_list(const PosteriorSamples& s, int max_draws) {
  long per_chain = s.chains.empty() ? 0 : static_cast<long>(s.chains[0].draws.size());
  if (max_draws > 0) {
    long cap = std::max(1L, static_cast<long>(max_draws) / std::max(1, s.n_chains()));
    per_chain = std::min(per_chain, cap);
  }
  std::vector<DrawRef> out;
  for (int c = 0; c < s.n_chains(); ++c)
    for (long i = 0; i < per_chain; ++i) out.push_back({c, i});
  return out;
}

void parallel_draws(size_t n, int workers, const std::function<void(size_t, size_t)>& chunk) {
  if (workers <= 1 || n <= 1) {
    chunk(0, n);
    return;
  }
  int w = std::min<size_t>(workers, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(w);
  size_t per = (n + w - 1) / w;
  for (int i = 0; i < w; ++i) {
    size_t lo = i * per, hi = std::min(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi, i] {
      try {
        chunk(lo, hi);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

using GroupMatrix = std::vector<std::vector<std::optional<double>>>;  // [draw][group]

ChainsMatrix chains_of_group(const GroupMatrix& m, size_t group, int n_chains, bool* any_undef) {
  ChainsMatrix out;
  long per_chain = static_cast<long>(m.size()) / n_chains;
  out.chains.resize(n_chains);
  for (int c = 0; c < n_chains; ++c) {
    out.chains[c].reserve(per_chain);
    for (long i = 0; i < per_chain; ++i) {
      const auto& v = m[c * per_chain + i];
      if (group < v.size() && v[group]) {
        out.chains[c].push_back(*v[group]);
      } else {
        *any_undef = true;
        out.chains[c].push_back(0.0);
      }
    }
  }
  return out;
}

}  // namespace

DailySeries load_station_series(const RunConfig& cfg) {
  if (cfg.data_format == "series_json") {
    DailySeries s = load_series(cfg.data_path);
    s.validate(cfg.ceiling_cm);
    return s;
  }
  auto records = parse_station_file(cfg.data_path, station_format_from_name(cfg.data_format),
                                    cfg.station_id);
  auto filtered = apply_quality_filter(records);
  std::string id = cfg.station_id.empty() ? fs::path(cfg.data_path).stem().string()
                                          : cfg.station_id;
  return seasonize(filtered, cfg.season, {cfg.year_start, cfg.year_end}, id, cfg.ceiling_cm);
}

ModelSpec variant_spec(const RunConfig& cfg, const std::string& variant) {
  auto pos = variant.find(':');
  if (pos == std::string::npos) throw ConfigError("bad variant " + variant);
  ModelSpec spec = cfg.model;
  spec.family = family_from_name(variant.substr(0, pos));
  if (variant.substr(pos + 1) == "no_trend") spec.year_dim = 0;
  return spec;
}

void cmd_fit(const RunConfig& cfg, bool resume) {
  DailySeries data = load_station_series(cfg);
  auto md = ModelData::create(data, cfg.model, cfg.ceiling_cm);
  write_provenance(cfg, data);
  PosteriorSamples s =
      fit_to_dir(md, cfg.chain, cfg.output_dir + "/samples", cfg.workers, resume);

  std::ofstream log(cfg.output_dir + "/fit_log.csv", std::ios::trunc);
  log << "chain,parameter,acceptance_rate\n";
  for (int c = 0; c < s.n_chains(); ++c)
    for (int i = 0; i < s.layout->size(); ++i)
      log << c << ',' << s.layout->name(i) << ',' << fmt(s.chains[c].acceptance[i]) << '\n';
}

void cmd_assess(const RunConfig& cfg) {
  DailySeries data = load_station_series(cfg);
  auto md = ModelData::create(data, cfg.model, cfg.ceiling_cm);
  write_provenance(cfg, data);
  PosteriorSamples samples = load_fit(cfg, *md);
  auto draws = draw_list(samples, cfg.assess_max_draws);
  if (draws.empty()) throw InputError("fit holds no saved draws");

  const double cut = cfg.wet_cutoff_cm;
  const int max_days = data.max_days();
  const auto& years = data.years;
  std::vector<double> year_labels(years.begin(), years.end());
  std::vector<double> day_labels(max_days);
  for (int s = 0; s < max_days; ++s) day_labels[s] = s + 1;

  // assessment period for the slope diagnostics: first configured period
  // clipped to the data, whole range when disjoint
  int py0 = years.front(), py1 = years.back();
  if (!cfg.periods.empty()) {
    int a = std::max(cfg.periods.front().first, py0);
    int b = std::min(cfg.periods.front().second, py1);
    if (a <= b) {
      py0 = a;
      py1 = b;
    }
  }

  std::map<std::string, GroupMatrix> groups;  // figure stats, masked sims
  std::map<std::string, GroupMatrix> diag;    // diagnostic stats, unmasked sims
  std::map<std::string, std::vector<std::vector<double>>> pools;
  const std::vector<std::string> kThresholdName = {"0.3", "1", "2"};
  const std::vector<double> kThresholds = {0.3, 1.0, 2.0};

  size_t n = draws.size();
  auto resize_all = [&](auto& m, const std::string& key) -> auto& {
    auto& v = m[key];
    v.resize(n);
    return v;
  };
  // pre-create deterministic key set
  for (const auto& th : kThresholdName) {
    resize_all(groups, "prob_gt" + th + "cm_by_year");
    resize_all(groups, "prob_gt" + th + "cm_by_day");
    resize_all(diag, "prob_gt" + th + "cm_by_year");
    resize_all(diag, "prob_gt" + th + "cm_by_day");
  }
  resize_all(groups, "total_by_year");
  resize_all(groups, "intensity_by_year");
  resize_all(groups, "intensity_by_day");
  resize_all(groups, "dsl_by_year");
  for (int from = 0; from < 3; ++from)
    for (int to = 0; to < 3; ++to) {
      std::string key = std::string("trans_from_") + kBinNames[from] + "_to_" + kBinNames[to];
      resize_all(groups, key + "_by_year");
      resize_all(groups, key + "_by_day");
    }
  resize_all(diag, "dry_to_dry_by_year");
  resize_all(diag, "wet_to_dry_by_year");
  resize_all(diag, "mean_dsl_by_year");
  resize_all(diag, "intensity_by_year_u");
  resize_all(diag, "sen_slope");  // [0]=mean_dsl slope, [1]=intensity slope
  pools["qq_daily"].resize(n);
  pools["qq_3day"].resize(n);
  pools["qq_10day"].resize(n);
  pools["qq_dry_spells"].resize(n);

  parallel_draws(n, cfg.workers, [&](size_t lo, size_t hi) {
    Engine engine(md);
    for (size_t g = lo; g < hi; ++g) {
      engine.bind(samples.draw(draws[g].chain, draws[g].index));
      auto rng = make_rng(cfg.chain.seed, kStreamSim + g);
      SimulatedSeries sim = simulate_series(engine, rng);
      DailySeries masked = apply_mask(sim, data);
      SeriesView mv = view_of(masked);
      SeriesView uv = view_of(sim, data);

      for (size_t k = 0; k < kThresholds.size(); ++k) {
        groups["prob_gt" + kThresholdName[k] + "cm_by_year"][g] =
            yearly_stat(mv, YearStat::ProbExceed, kThresholds[k]);
        groups["prob_gt" + kThresholdName[k] + "cm_by_day"][g] =
            daily_stat(mv, DayStat::ProbExceed, kThresholds[k], max_days);
        diag["prob_gt" + kThresholdName[k] + "cm_by_year"][g] =
            yearly_stat(uv, YearStat::ProbExceed, kThresholds[k]);
        diag["prob_gt" + kThresholdName[k] + "cm_by_day"][g] =
            daily_stat(uv, DayStat::ProbExceed, kThresholds[k], max_days);
      }
      groups["total_by_year"][g] = yearly_stat(mv, YearStat::SeasonalTotal, 0.0);
      groups["intensity_by_year"][g] = yearly_stat(mv, YearStat::Intensity, cut);
      groups["intensity_by_day"][g] = daily_stat(mv, DayStat::Intensity, cut, max_days);
      groups["dsl_by_year"][g] = yearly_stat(uv, YearStat::MeanDsl, cut);
      for (int from = 0; from < 3; ++from)
        for (int to = 0; to < 3; ++to) {
          std::string key =
              std::string("trans_from_") + kBinNames[from] + "_to_" + kBinNames[to];
          groups[key + "_by_year"][g] = yearly_transition(mv, from, to);
          groups[key + "_by_day"][g] = daily_transition(mv, from, to, max_days);
        }
      diag["dry_to_dry_by_year"][g] = yearly_stat(uv, YearStat::DryToDry, cut);
      diag["wet_to_dry_by_year"][g] = yearly_stat(uv, YearStat::WetToDry, cut);
      diag["mean_dsl_by_year"][g] = yearly_stat(uv, YearStat::MeanDsl, cut);
      diag["intensity_by_year_u"][g] = yearly_stat(uv, YearStat::Intensity, cut);

      std::vector<std::optional<double>> slopes(2);
      MetricSeries dsl = metric_series(uv, years, Metric::MeanDsl, cut);
      MetricSeries inten = metric_series(uv, years, Metric::Intensity, cut);
      MetricSeries dsl_p = dsl.restrict_period(py0, py1);
      MetricSeries int_p = inten.restrict_period(py0, py1);
      if (dsl_p.n_defined() >= 2) slopes[0] = sens_slope(dsl_p);
      if (int_p.n_defined() >= 2) slopes[1] = sens_slope(int_p);
      diag["sen_slope"][g] = slopes;

      pools["qq_daily"][g] = pooled_daily(mv);
      pools["qq_3day"][g] = pooled_kday_sums(mv, 3);
      pools["qq_10day"][g] = pooled_kday_sums(mv, 10);
      pools["qq_dry_spells"][g] = pooled_dry_spells(uv, cut);
    }
  });

  // observed sides
  SeriesView ov = view_of(data);
  auto omit_y = yearly_omission(data, cfg.omission_threshold);
  auto omit_d = daily_omission(data, cfg.omission_threshold, max_days);
  std::string adir = cfg.output_dir + "/assessment";
  fs::create_directories(adir);

  auto emit_yearly = [&](const std::string& key, const std::vector<std::optional<double>>& obs,
                         double lo_q, double hi_q, bool omission) {
    GroupSummary gs = summarize_ensemble(key, "year", year_labels, obs, groups[key],
                                         omission ? omit_y : std::vector<char>{}, lo_q, hi_q);
    write_group_summary(gs, adir + "/" + key + ".csv");
  };
  auto emit_daily = [&](const std::string& key, const std::vector<std::optional<double>>& obs,
                        double lo_q, double hi_q) {
    GroupSummary gs =
        summarize_ensemble(key, "day", day_labels, obs, groups[key], omit_d, lo_q, hi_q);
    write_group_summary(gs, adir + "/" + key + ".csv");
  };

  for (size_t k = 0; k < kThresholds.size(); ++k) {
    emit_yearly("prob_gt" + kThresholdName[k] + "cm_by_year",
                yearly_stat(ov, YearStat::ProbExceed, kThresholds[k]), 0.05, 0.95, true);
    emit_daily("prob_gt" + kThresholdName[k] + "cm_by_day",
               daily_stat(ov, DayStat::ProbExceed, kThresholds[k], max_days), 0.05, 0.95);
  }
  emit_yearly("total_by_year", yearly_stat(ov, YearStat::SeasonalTotal, 0.0), 0.05, 0.95, true);
  emit_yearly("intensity_by_year", yearly_stat(ov, YearStat::Intensity, cut), 0.05, 0.95, true);
  emit_daily("intensity_by_day", daily_stat(ov, DayStat::Intensity, cut, max_days), 0.05, 0.95);
  // unmasked simulations by design; observed only for complete years
  emit_yearly("dsl_by_year", yearly_stat(ov, YearStat::MeanDsl, cut), 0.05, 0.95, false);
  for (int from = 0; from < 3; ++from)
    for (int to = 0; to < 3; ++to) {
      std::string key = std::string("trans_from_") + kBinNames[from] + "_to_" + kBinNames[to];
      emit_yearly(key + "_by_year", yearly_transition(ov, from, to), 0.05, 0.95, true);
      emit_daily(key + "_by_day", daily_transition(ov, from, to, max_days), 0.05, 0.95);
    }
  write_group_summary(summarize_qq("qq_daily", pooled_daily(ov), pools["qq_daily"], 0.025, 0.975),
                      adir + "/qq_daily.csv");
  write_group_summary(summarize_qq("qq_3day", pooled_kday_sums(ov, 3), pools["qq_3day"], 0.025,
                                   0.975),
                      adir + "/qq_3day.csv");
  write_group_summary(summarize_qq("qq_10day", pooled_kday_sums(ov, 10), pools["qq_10day"], 0.025,
                                   0.975),
                      adir + "/qq_10day.csv");
  write_group_summary(summarize_qq("qq_dry_spells", pooled_dry_spells(ov, cut),
                                   pools["qq_dry_spells"], 0.025, 0.975),
                      adir + "/qq_dry_spells.csv");

  // convergence diagnostics on the predictive quantities
  std::string ddir = cfg.output_dir + "/diagnostics";
  fs::create_directories(ddir);
  {
    std::ofstream f(ddir + "/rhat_percentiles.csv", std::ios::trunc);
    f << "quantity,n_groups,rhat_median,rhat_p99\n";
    for (const auto& [key, matrix] : diag) {
      if (key == "sen_slope") continue;
      std::vector<double> rhats;
      size_t n_groups = 0;
      for (const auto& row : matrix)
        n_groups = std::max(n_groups, row.size());
      for (size_t grp = 0; grp < n_groups; ++grp) {
        bool undef = false;
        ChainsMatrix cm = chains_of_group(matrix, grp, samples.n_chains(), &undef);
        if (undef) continue;
        DiagResult r = rhat(cm);
        if (!r.degenerate) rhats.push_back(r.value);
      }
      if (rhats.empty()) continue;
      auto qs = summarize_percentiles(rhats, {50.0, 99.0});
      f << key << ',' << rhats.size() << ',' << fmt(qs[0]) << ',' << fmt(qs[1]) << '\n';
    }
  }
  {
    std::ofstream f(ddir + "/sen_slope_diagnostics.csv", std::ios::trunc);
    f << "metric,period_start,period_end,rhat,ess_bulk,ess_tail,degenerate\n";
    const char* names[2] = {"mean_dsl", "intensity"};
    for (int q = 0; q < 2; ++q) {
      bool undef = false;
      ChainsMatrix cm = chains_of_group(diag["sen_slope"], q, samples.n_chains(), &undef);
      DiagResult r = rhat(cm);
      DiagResult eb = ess(cm, EssKind::bulk);
      DiagResult et = ess(cm, EssKind::tail);
      bool degen = undef || r.degenerate || eb.degenerate || et.degenerate;
      f << names[q] << ',' << py0 << ',' << py1 << ',' << fmt(r.value) << ',' << fmt(eb.value)
        << ',' << fmt(et.value) << ',' << (degen ? 1 : 0) << '\n';
    }
  }
}

void cmd_crossval(const RunConfig& cfg, bool resume) {
  DailySeries data = load_station_series(cfg);
  HoldoutPlan plan = cfg.holdout_plan();
  plan.validate(data);
  DailySeries train = mask_held_years(data, plan);
  write_provenance(cfg, data);

  struct Row {
    std::string variant;
    NllResult one_day, full_year;
    WaicResult waic;
  };
  std::vector<Row> rows;
  for (const auto& variant : cfg.variants) {
    ModelSpec spec = variant_spec(cfg, variant);
    auto md_train = ModelData::create(train, spec, cfg.ceiling_cm);
    std::string vdir = variant;
    std::replace(vdir.begin(), vdir.end(), ':', '_');
    PosteriorSamples s = fit_to_dir(md_train, cfg.chain,
                                    cfg.output_dir + "/crossval/" + vdir + "/samples",
                                    cfg.workers, resume);
    Row row;
    row.variant = variant;
    // evaluation runs against the unmasked observations under the variant's
    // model structure
    DailySeries eval_data = data;
    PosteriorSamples eval_samples = s;
    row.one_day = one_day_ahead_nll(eval_samples, eval_data, plan);
    row.full_year = full_year_nll(eval_samples, eval_data, plan);
    row.waic = waic_yearly(s, plan);
    rows.push_back(std::move(row));
  }

  fs::create_directories(cfg.output_dir + "/crossval");
  std::ofstream f(cfg.output_dir + "/crossval/eval_report.csv", std::ios::trunc);
  f << "variant,nll_one_day,nll_one_day_sd,nll_full_year,nll_full_year_sd,waic,p_waic,"
       "impossible_one_day,impossible_full_year\n";
  for (const auto& r : rows)
    f << r.variant << ',' << fmt(r.one_day.mean) << ',' << fmt(r.one_day.sd) << ','
      << fmt(r.full_year.mean) << ',' << fmt(r.full_year.sd) << ',' << fmt(r.waic.waic) << ','
      << fmt(r.waic.p_waic) << ',' << r.one_day.impossible << ',' << r.full_year.impossible
      << '\n';
}

void cmd_trend(const RunConfig& cfg) {
  DailySeries data = load_station_series(cfg);
  auto md = ModelData::create(data, cfg.model, cfg.ceiling_cm);
  write_provenance(cfg, data);
  PosteriorSamples samples = load_fit(cfg, *md);
  auto draws = draw_list(samples, cfg.trend_max_draws);
  if (draws.empty()) throw InputError("fit holds no saved draws");
  size_t n = draws.size();

  // metric series per draw: imputation path and simulation path
  std::map<Metric, std::vector<MetricSeries>> mi_series, bayes_series;
  for (Metric m : cfg.metrics) {
    mi_series[m].resize(n);
    bayes_series[m].resize(n);
  }
  parallel_draws(n, cfg.workers, [&](size_t lo, size_t hi) {
    Engine engine(md);
    for (size_t g = lo; g < hi; ++g) {
      engine.bind(samples.draw(draws[g].chain, draws[g].index));
      auto rng_i = make_rng(cfg.chain.seed, kStreamImpute + g);
      DailySeries imputed = data;
      for (int t = 0; t < data.n_years(); ++t) {
        YearImputation imp = engine.ffbs_impute_year(t, rng_i);
        for (auto [s, v] : imp.imputed) {
          imputed.values[t][s] = v;
          imputed.missing[t][s] = false;
        }
      }
      auto rng_s = make_rng(cfg.chain.seed, kStreamSim + g);
      SimulatedSeries sim = simulate_series(engine, rng_s);
      for (Metric m : cfg.metrics) {
        mi_series[m][g] = metric_series(view_of(imputed), data.years, m, cfg.wet_cutoff_cm,
                                        cfg.trend_kday, "imputation " + std::to_string(g));
        bayes_series[m][g] = metric_series(view_of(sim, data), data.years, m, cfg.wet_cutoff_cm,
                                           cfg.trend_kday, "simulation " + std::to_string(g));
      }
    }
  });

  std::string tdir = cfg.output_dir + "/trend";
  fs::create_directories(tdir);
  std::ofstream mi(tdir + "/mi_results.csv", std::ios::trunc);
  mi << "station,season,metric,period_start,period_end,method,slope_per_decade,z,p,S_bar,"
        "var_total,m_imputations,status\n";
  std::ofstream bs(tdir + "/bayes_summary.csv", std::ios::trunc);
  bs << "station,season,metric,period_start,period_end,method,q025,q05,q25,median,q75,q95,q975,"
        "n_simulations,status\n";

  for (Metric m : cfg.metrics) {
    for (auto [y0, y1] : cfg.periods) {
      std::string head = data.station_id + ',' + season_name(data.season) + ',' +
                         metric_name(m) + ',' + std::to_string(y0) + ',' + std::to_string(y1);
      // imputation path
      std::vector<MkResult> mks;
      std::vector<double> slopes;
      bool ok = true;
      for (size_t g = 0; g < n && ok; ++g) {
        MetricSeries r = mi_series[m][g].restrict_period(y0, y1);
        if (r.n_defined() < 4) {
          ok = false;
          break;
        }
        mks.push_back(mann_kendall(r));
        slopes.push_back(sens_slope(r));
      }
      if (ok && !mks.empty()) {
        TrendResult tr = rubin_combine(mks, slopes);
        mi << head << ",imputation_MI," << fmt(tr.sen_slope) << ',' << fmt(tr.z) << ','
           << fmt(tr.p) << ',' << fmt(tr.S_bar) << ',' << fmt(tr.var_total) << ','
           << tr.m_imputations << ",ok\n";
      } else {
        mi << head << ",imputation_MI,nan,nan,nan,nan,nan," << n << ",insufficient_years\n";
      }
      // fully Bayesian path
      std::vector<MetricSeries> sims = bayes_series[m];
      bool usable = false;
      for (const auto& s : sims)
        if (s.restrict_period(y0, y1).n_defined() >= 2) usable = true;
      if (usable) {
        SlopeSummary ss = posterior_slope_summary(sims, y0, y1);
        bs << head << ",bayes_posterior";
        for (double q : {0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975}) bs << ',' << fmt(ss.quantile(q));
        bs << ',' << ss.slopes.size() << ",ok\n";
        std::ofstream sf(tdir + "/bayes_slopes_" + metric_name(m) + "_" + std::to_string(y0) +
                             "_" + std::to_string(y1) + ".csv",
                         std::ios::trunc);
        sf << "slope_per_decade\n";
        for (double s : ss.slopes) sf << fmt(s) << '\n';
      } else {
        bs << head << ",bayes_posterior,nan,nan,nan,nan,nan,nan,nan,0,insufficient_years\n";
      }
    }
  }
}

void cmd_simulate(const RunConfig& cfg) {
  DailySeries data = load_station_series(cfg);
  auto md = ModelData::create(data, cfg.model, cfg.ceiling_cm);
  write_provenance(cfg, data);
  PosteriorSamples samples = load_fit(cfg, *md);
  auto draws = draw_list(samples, cfg.emit_count);
  fs::create_directories(cfg.output_dir + "/simulate");
  std::ofstream f(cfg.output_dir + "/simulate/simulations.csv", std::ios::trunc);
  f << "draw,chain,draw_index,year,day,value_cm\n";
  Engine engine(md);
  for (size_t g = 0; g < draws.size(); ++g) {
    engine.bind(samples.draw(draws[g].chain, draws[g].index));
    auto rng = make_rng(cfg.chain.seed, kStreamEmit + g);
    SimulatedSeries sim = simulate_series(engine, rng);
    for (int t = 0; t < data.n_years(); ++t)
      for (size_t s = 0; s < sim.values[t].size(); ++s)
        f << g << ',' << draws[g].chain << ',' << draws[g].index << ',' << data.years[t] << ','
          << (s + 1) << ',' << fmt(sim.values[t][s]) << '\n';
  }
}

void cmd_impute(const RunConfig& cfg) {
  DailySeries data = load_station_series(cfg);
  auto md = ModelData::create(data, cfg.model, cfg.ceiling_cm);
  write_provenance(cfg, data);
  PosteriorSamples samples = load_fit(cfg, *md);
  auto draws = draw_list(samples, cfg.emit_count);
  fs::create_directories(cfg.output_dir + "/impute");
  std::ofstream f(cfg.output_dir + "/impute/imputations.csv", std::ios::trunc);
  f << "draw,chain,draw_index,year,day,value_cm\n";
  Engine engine(md);
  for (size_t g = 0; g < draws.size(); ++g) {
    engine.bind(samples.draw(draws[g].chain, draws[g].index));
    auto rng = make_rng(cfg.chain.seed, kStreamEmit + g);
    for (int t = 0; t < data.n_years(); ++t) {
      YearImputation imp = engine.ffbs_impute_year(t, rng);
      for (auto [s, v] : imp.imputed)
        f << g << ',' << draws[g].chain << ',' << draws[g].index << ',' << data.years[t] << ','
          << (s + 1) << ',' << fmt(v) << '\n';
    }
  }
}

int run_command(const std::string& command, const RunConfig& cfg, bool resume) {
  try {
    if (command == "fit")
      cmd_fit(cfg, resume);
    else if (command == "assess")
      cmd_assess(cfg);
    else if (command == "crossval")
      cmd_crossval(cfg, resume);
    else if (command == "trend")
      cmd_trend(cfg);
    else if (command == "simulate")
      cmd_simulate(cfg);
    else if (command == "impute")
      cmd_impute(cfg);
    else {
      std::cerr << "unknown command: " << command << "\n";
      return kExitConfig;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace swg
