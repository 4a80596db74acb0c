#include "swg/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>

#include "swg/dist.hpp"
#include "swg/errors.hpp"

namespace swg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const int kBlockOfState[kNumStates] = {0, 0, 0, 1, 2};

const TransChannel kGroupChannels[kNumGroups][3] = {
    {kD1, kD2, kD3},          // dry group rebuilds all three clones
    {kDW1, kDW1, kDW1}, {kW1, kW1, kW1},   {kW2, kW2, kW2},
    {kW12, kW12, kW12}, {kW21, kW21, kW21}, {kWD1, kWD1, kWD1},
    {kWD2, kWD2, kWD2}};
int group_channel_count(TransGroup g) { return g == kGroupDry ? 3 : 1; }

double logsumexp5(const double* x) {
  double mx = x[0];
  for (int i = 1; i < 5; ++i) mx = std::max(mx, x[i]);
  if (mx == kNegInf) return kNegInf;
  double s = 0;
  for (int i = 0; i < 5; ++i) s += std::exp(x[i] - mx);
  return mx + std::log(s);
}

std::uint64_t fnv1a(const void* data, size_t n, std::uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::shared_ptr<const ModelData> ModelData::create(DailySeries data, const ModelSpec& spec,
                                                   double ceiling_cm) {
  data.validate(ceiling_cm);
  auto md = std::make_shared<ModelData>();
  md->data = std::move(data);
  md->spec = spec;
  md->layout = make_layout(spec);
  const DailySeries& d = md->data;

  md->n_years = d.n_years();
  int s_max = d.max_days();
  if (spec.season_dim > 0) {
    std::vector<double> grid(s_max);
    for (int i = 0; i < s_max; ++i) grid[i] = i + 1;
    md->basis_s = std::make_shared<SplineBasis>(build_basis(grid, spec.season_dim));
  }
  if (spec.year_dim > 0) {
    std::vector<double> grid(md->n_years);
    for (int i = 0; i < md->n_years; ++i) grid[i] = i + 1;
    if (md->n_years < spec.year_dim)
      throw ConfigError("year basis dimension exceeds the number of years");
    md->basis_t = std::make_shared<SplineBasis>(build_basis(grid, spec.year_dim));
  }
  md->s_rows = md->basis_s ? md->basis_s->rows() : 1;
  md->t_rows = md->basis_t ? md->basis_t->rows() : 1;
  md->n_cells = md->s_rows * md->t_rows;

  md->max_obs_cm = d.max_observed();
  if (md->max_obs_cm <= 0.0) md->max_obs_cm = ceiling_cm;

  md->day_offset.resize(md->n_years);
  md->days_in_year.resize(md->n_years);
  int off = 0;
  for (int t = 0; t < md->n_years; ++t) {
    md->day_offset[t] = off;
    md->days_in_year[t] = d.season_day_count[t];
    off += d.season_day_count[t];
  }
  md->n_days = off;
  md->value_flat.resize(md->n_days);
  md->missing_flat.resize(md->n_days);
  md->cell_of_day.resize(md->n_days);
  md->sig_of_day.assign(md->n_days, -1);

  std::map<std::pair<int, double>, int> sig_ids;
  std::map<double, int> value_ids;
  for (int t = 0; t < md->n_years; ++t) {
    for (int s = 0; s < md->days_in_year[t]; ++s) {
      int day = md->day_offset[t] + s;
      bool miss = d.missing[t][s];
      double v = miss ? 0.0 : d.values[t][s];
      md->value_flat[day] = v;
      md->missing_flat[day] = miss ? 1 : 0;
      int cell = md->cell_index(s, t);
      md->cell_of_day[day] = cell;
      if (miss) continue;
      auto [it, fresh] = sig_ids.try_emplace({cell, v}, static_cast<int>(sig_ids.size()));
      md->sig_of_day[day] = it->second;
      if (fresh) {
        md->sig_value.push_back(v);
        md->sig_cell.push_back(cell);
        auto [vit, vfresh] = value_ids.try_emplace(v, static_cast<int>(value_ids.size()));
        if (vfresh) md->distinct_values.push_back(v);
        md->sig_value_id.push_back(vit->second);
      }
    }
  }
  md->n_sigs = static_cast<int>(md->sig_value.size());
  return md;
}

std::string ModelData::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  h = fnv1a(data.station_id.data(), data.station_id.size(), h);
  int season = static_cast<int>(data.season);
  h = fnv1a(&season, sizeof season, h);
  h = fnv1a(data.years.data(), data.years.size() * sizeof(int), h);
  h = fnv1a(value_flat.data(), value_flat.size() * sizeof(double), h);
  h = fnv1a(missing_flat.data(), missing_flat.size(), h);
  std::ostringstream ss;
  ss << std::hex << h;
  return ss.str();
}

Engine::Engine(std::shared_ptr<const ModelData> md, bool use_cache)
    : md_(std::move(md)), use_cache_(use_cache) {
  const ModelData& d = *md_;
  init_w_.resize(kNumStates);
  for (auto& c : chan_) c.resize(d.n_cells);
  P_.resize(static_cast<size_t>(d.n_days) * 25);
  for (int k = 0; k < kNumEmisBlocks; ++k) {
    size_t cells = k == kEmisDry ? 1 : d.n_cells;
    shape_[k].resize(cells);
    scale_[k].resize(cells);
    centers_[k].resize(cells);
    F_[k].resize(k == kEmisDry ? d.distinct_values.size() : d.n_sigs);
    le_[k].resize(d.n_sigs);
  }
  lin_.resize(static_cast<size_t>(d.n_sigs) * 3);
  m_.resize(d.n_sigs);
  yll_.resize(d.n_years);
}

void Engine::rebuild_init(double* out5) const {
  double a[kNumStates] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 4; ++i) a[i] = cur_[cur_.layout->init_logit(i)];
  double mx = 0;
  for (double x : a) mx = std::max(mx, x);
  double sum = 0;
  for (int i = 0; i < kNumStates; ++i) {
    out5[i] = std::exp(a[i] - mx);
    sum += out5[i];
  }
  for (int i = 0; i < kNumStates; ++i) out5[i] /= sum;
}

void Engine::rebuild_channel(TransChannel ch, double* cells) const {
  const ModelData& d = *md_;
  const ParamLayout& L = *cur_.layout;
  const SplineSetIdx& set = L.trans_set(channel_group(ch));
  double b0 = cur_[L.trans_intercept(ch)];
  // curve over s and over t, then the grid outer sum
  std::vector<double> cs(d.s_rows, 0.0), ct(d.t_rows, 0.0);
  if (set.s_len > 0 && d.basis_s) {
    for (int s = 0; s < d.s_rows; ++s) {
      double acc = 0;
      for (int j = 0; j < set.s_len; ++j) acc += d.basis_s->X(s, j) * cur_[set.s_start + j];
      cs[s] = acc;
    }
  }
  if (set.t_len > 0 && d.basis_t) {
    for (int t = 0; t < d.t_rows; ++t) {
      double acc = 0;
      for (int j = 0; j < set.t_len; ++j) acc += d.basis_t->X(t, j) * cur_[set.t_start + j];
      ct[t] = acc;
    }
  }
  for (int t = 0; t < d.t_rows; ++t)
    for (int s = 0; s < d.s_rows; ++s)
      cells[t * d.s_rows + s] = inv_logit(b0 + cs[s] + ct[t]);
}

void Engine::rebuild_P(const double* const chan[kNumChannels], double* P) const {
  const ModelData& d = *md_;
  for (int day = 0; day < d.n_days; ++day) {
    int cell = d.cell_of_day[day];
    TransitionProbs probs;
    for (int ch = 0; ch < kNumChannels; ++ch) probs.p[ch] = chan[ch][cell];
    Matrix5 mtx = assemble_transition(probs);
    double* out = P + static_cast<size_t>(day) * 25;
    for (int i = 0; i < kNumStates; ++i)
      for (int j = 0; j < kNumStates; ++j) out[i * 5 + j] = mtx[i][j];
  }
}

bool Engine::rebuild_emis_grid(EmisBlock k, EmisTerm term, double* cells) const {
  const ModelData& d = *md_;
  const SplineSetIdx& set = cur_.layout->emis_set(k, term);
  bool log_scale = term == kScale || md_->spec.family == EmissionFamily::gamma;
  double b0 = cur_[set.intercept];
  int n_s = k == kEmisDry ? 1 : d.s_rows;
  int n_t = k == kEmisDry ? 1 : d.t_rows;
  std::vector<double> cs(n_s, 0.0), ct(n_t, 0.0);
  if (set.s_len > 0 && d.basis_s && k != kEmisDry) {
    for (int s = 0; s < n_s; ++s) {
      double acc = 0;
      for (int j = 0; j < set.s_len; ++j) acc += d.basis_s->X(s, j) * cur_[set.s_start + j];
      cs[s] = acc;
    }
  }
  if (set.t_len > 0 && d.basis_t && k != kEmisDry) {
    for (int t = 0; t < n_t; ++t) {
      double acc = 0;
      for (int j = 0; j < set.t_len; ++j) acc += d.basis_t->X(t, j) * cur_[set.t_start + j];
      ct[t] = acc;
    }
  }
  bool ok = true;
  for (int t = 0; t < n_t; ++t) {
    for (int s = 0; s < n_s; ++s) {
      double raw = b0 + cs[s] + ct[t];
      double v = log_scale ? std::exp(raw) : raw;
      if (!std::isfinite(v)) ok = false;
      if (log_scale && !(v > 1e-12)) ok = false;  // exp underflow floor
      cells[t * n_s + s] = v;
    }
  }
  return ok;
}

void Engine::rebuild_centers(EmisBlock k, const double* shape_cells, const double* scale_cells,
                             double* centers, CenterStats& stats) const {
  size_t n = k == kEmisDry ? 1 : md_->n_cells;
  bool gamma = md_->spec.family == EmissionFamily::gamma;
  double mn = std::numeric_limits<double>::infinity(), mx = -mn;
  for (size_t i = 0; i < n; ++i) {
    double c = gamma ? shape_cells[i] * scale_cells[i] : gpd_median(shape_cells[i], scale_cells[i]);
    centers[i] = c;
    mn = std::min(mn, c);
    mx = std::max(mx, c);
  }
  stats.mn = mn;
  stats.mx = mx;
}

bool Engine::rebuild_F(EmisBlock k, const double* shape_cells, const double* scale_cells,
                       double* F) const {
  const ModelData& d = *md_;
  EmissionFamily fam = d.spec.family;
  double delta = d.spec.rounding_halfwidth_cm;
  if (k == kEmisDry) {
    double shape = shape_cells[0], scale = scale_cells[0];
    if (!std::isfinite(shape) || !std::isfinite(scale)) return false;
    for (size_t i = 0; i < d.distinct_values.size(); ++i) {
      double v = d.distinct_values[i];
      F[i] = v == 0.0 ? family_cdf(fam, delta, shape, scale)
                      : family_cdf(fam, v + delta, shape, scale) -
                            family_cdf(fam, std::max(v - delta, 0.0), shape, scale);
    }
    return true;
  }
  for (int i = 0; i < d.n_sigs; ++i) {
    int cell = d.sig_cell[i];
    double shape = shape_cells[cell], scale = scale_cells[cell];
    double v = d.sig_value[i];
    F[i] = v == 0.0 ? family_cdf(fam, delta, shape, scale)
                    : family_cdf(fam, v + delta, shape, scale) -
                          family_cdf(fam, std::max(v - delta, 0.0), shape, scale);
  }
  return true;
}

void Engine::rebuild_le(EmisBlock k, const double* F, double* le) const {
  const ModelData& d = *md_;
  double pi = inv_logit(cur_[cur_.layout->pi_logit(k)]);
  for (int i = 0; i < d.n_sigs; ++i) {
    double f = k == kEmisDry ? F[d.sig_value_id[i]] : F[i];
    le[i] = d.sig_value[i] == 0.0 ? zero_cell_logprob(pi, f) : positive_cell_logprob(pi, f);
  }
}

void Engine::rebuild_lin(const double* le0, const double* le1, const double* le2, double* lin,
                         double* m) const {
  const ModelData& d = *md_;
  for (int i = 0; i < d.n_sigs; ++i) {
    double l0 = le0[i], l1 = le1[i], l2 = le2[i];
    double mx = std::max(l0, std::max(l1, l2));
    if (mx == kNegInf) {
      m[i] = 0.0;
      lin[i * 3 + 0] = lin[i * 3 + 1] = lin[i * 3 + 2] = 0.0;
      continue;
    }
    m[i] = mx;
    lin[i * 3 + 0] = std::exp(l0 - mx);
    lin[i * 3 + 1] = std::exp(l1 - mx);
    lin[i * 3 + 2] = std::exp(l2 - mx);
  }
}

double Engine::forward_year_view(int t, const double* init, const double* P, const double* lin,
                                 const double* m) const {
  const ModelData& d = *md_;
  int off = d.day_offset[t];
  int S = d.days_in_year[t];
  double a[kNumStates];
  double ll = 0.0;
  {
    int sig = d.sig_of_day[off];
    if (sig >= 0) {
      const double* e = lin + static_cast<size_t>(sig) * 3;
      double c = 0;
      for (int k = 0; k < kNumStates; ++k) {
        a[k] = init[k] * e[kBlockOfState[k]];
        c += a[k];
      }
      if (!(c > 0.0)) return kNegInf;
      ll += std::log(c) + m[sig];
      double inv = 1.0 / c;
      for (auto& x : a) x *= inv;
    } else {
      for (int k = 0; k < kNumStates; ++k) a[k] = init[k];
    }
  }
  for (int s = 1; s < S; ++s) {
    const double* Pr = P + static_cast<size_t>(off + s) * 25;
    double b[kNumStates] = {0, 0, 0, 0, 0};
    for (int k = 0; k < kNumStates; ++k) {
      double ak = a[k];
      const double* row = Pr + k * 5;
      for (int j = 0; j < kNumStates; ++j) b[j] += ak * row[j];
    }
    int sig = d.sig_of_day[off + s];
    if (sig >= 0) {
      const double* e = lin + static_cast<size_t>(sig) * 3;
      double c = 0;
      for (int j = 0; j < kNumStates; ++j) {
        b[j] *= e[kBlockOfState[j]];
        c += b[j];
      }
      if (!(c > 0.0)) return kNegInf;
      ll += std::log(c) + m[sig];
      double inv = 1.0 / c;
      for (int j = 0; j < kNumStates; ++j) a[j] = b[j] * inv;
    } else {
      for (int j = 0; j < kNumStates; ++j) a[j] = b[j];
    }
  }
  return ll;
}

double Engine::forward_all(const double* init, const double* P, const double* lin,
                           const double* m, double* year_ll, long* impossible) const {
  double total = 0.0;
  long bad = 0;
  for (int t = 0; t < md_->n_years; ++t) {
    double ll = forward_year_view(t, init, P, lin, m);
    year_ll[t] = ll;
    if (ll == kNegInf) ++bad;
    total += ll;
  }
  if (impossible) *impossible = bad;
  return total;
}

bool Engine::wd_floor_ok(const double* wd1_cells, const double* wd2_cells) const {
  double floor = md_->spec.min_wd_prob;
  for (int c = 0; c < md_->n_cells; ++c)
    if (!(wd1_cells[c] > floor && wd2_cells[c] > floor)) return false;
  return true;
}

bool Engine::centers_ok(const double* c1, const CenterStats& s1, const double* c4,
                        const CenterStats& s4, const double* c5, const CenterStats& s5) const {
  (void)s1;
  if (!(c1[0] < s4.mn)) return false;                          // dry below every wet1 center
  if (!(s4.mx <= md_->max_obs_cm && s5.mx <= md_->max_obs_cm)) return false;
  for (int c = 0; c < md_->n_cells; ++c)
    if (!(c4[c] < c5[c])) return false;
  return true;
}

bool Engine::sd_supports_ok() const {
  const ParamLayout& L = *cur_.layout;
  const ModelSpec& spec = md_->spec;
  for (int i = 0; i < L.size(); ++i) {
    ParamKind k = L.info(i).kind;
    if (k == ParamKind::TransSeasonSd || k == ParamKind::TransYearSd ||
        k == ParamKind::EmisSeasonSd || k == ParamKind::EmisYearSd) {
      if (!(cur_[i] > spec.sd_lower && cur_[i] < spec.sd_upper)) return false;
    }
  }
  return true;
}

bool Engine::pi_ordered() const {
  auto pis = zero_probs(cur_);
  return pis[0] > pis[1] && pis[1] > pis[2];
}

void Engine::full_rebuild_into_front() {
  feasible_ = true;
  rebuild_init(init_w_.f());
  for (int ch = 0; ch < kNumChannels; ++ch)
    rebuild_channel(static_cast<TransChannel>(ch), chan_[ch].f());
  const double* cf[kNumChannels];
  for (int ch = 0; ch < kNumChannels; ++ch) cf[ch] = chan_[ch].f();
  rebuild_P(cf, P_.f());

  bool grids_ok = true;
  for (int k = 0; k < kNumEmisBlocks; ++k) {
    grids_ok &= rebuild_emis_grid(static_cast<EmisBlock>(k), kShape, shape_[k].f());
    grids_ok &= rebuild_emis_grid(static_cast<EmisBlock>(k), kScale, scale_[k].f());
    rebuild_centers(static_cast<EmisBlock>(k), shape_[k].f(), scale_[k].f(), centers_[k].f(),
                    cstats_[k][centers_[k].front]);
  }
  feasible_ = grids_ok && sd_supports_ok() && pi_ordered() &&
              wd_floor_ok(chan_[kWD1].f(), chan_[kWD2].f()) &&
              centers_ok(centers_[kEmisDry].f(), cstats_[kEmisDry][centers_[kEmisDry].front],
                         centers_[kEmisWet1].f(), cstats_[kEmisWet1][centers_[kEmisWet1].front],
                         centers_[kEmisWet2].f(), cstats_[kEmisWet2][centers_[kEmisWet2].front]);
  if (grids_ok) {
    for (int k = 0; k < kNumEmisBlocks; ++k) {
      EmisBlock kb = static_cast<EmisBlock>(k);
      if (!rebuild_F(kb, shape_[k].f(), scale_[k].f(), F_[k].f())) feasible_ = false;
      rebuild_le(kb, F_[k].f(), le_[k].f());
    }
    rebuild_lin(le_[0].f(), le_[1].f(), le_[2].f(), lin_.f(), m_.f());
    lik_total_ = forward_all(init_w_.f(), P_.f(), lin_.f(), m_.f(), yll_.f(), &impossible_years_);
  } else {
    lik_total_ = kNegInf;
    impossible_years_ = 0;
    std::fill(yll_.f(), yll_.f() + md_->n_years, kNegInf);
  }
}

void Engine::bind(const ParamVector& p) {
  if (p.layout->size() != md_->layout->size())
    throw InputError("parameter vector does not match the model layout");
  cur_ = p;
  pending_ = -1;
  staged_.clear();
  lik_staged_ = false;
  full_rebuild_pending_ = false;
  full_rebuild_into_front();
}

double Engine::loglik_total() const { return lik_total_; }
const double* Engine::year_loglik() const { return yll_.f(); }

double Engine::log_prior() const { return log_prior_value(*md_, cur_); }

double Engine::log_posterior() const {
  if (!feasible_) return kNegInf;
  return log_prior() + lik_total_;
}

double Engine::coef_prior_sd_of(int idx) const {
  const ParamLayout& L = *cur_.layout;
  const ParamInfo& info = L.info(idx);
  switch (info.kind) {
    case ParamKind::TransSeasonCoef:
      return cur_[L.trans_set(static_cast<TransGroup>(info.a)).s_sd];
    case ParamKind::TransYearCoef:
      return cur_[L.trans_set(static_cast<TransGroup>(info.a)).t_sd];
    case ParamKind::EmisSeasonCoef:
      return cur_[L.emis_set(static_cast<EmisBlock>(info.a), static_cast<EmisTerm>(info.b)).s_sd];
    case ParamKind::EmisYearCoef:
      return cur_[L.emis_set(static_cast<EmisBlock>(info.a), static_cast<EmisTerm>(info.b)).t_sd];
    default: return md_->spec.intercept_prior_sd;
  }
}

bool Engine::coef_is_penalized(int idx) const {
  const ParamInfo& info = cur_.layout->info(idx);
  const ModelSpec& spec = md_->spec;
  switch (info.kind) {
    case ParamKind::TransSeasonCoef: return info.b < spec.season_dim - 1;
    case ParamKind::TransYearCoef: return info.b < spec.year_dim - 1;
    case ParamKind::EmisSeasonCoef: return info.c < spec.season_dim - 1;
    case ParamKind::EmisYearCoef: return info.c < spec.year_dim - 1;
    default: return false;
  }
}

double Engine::prior_delta_scalar(int idx, double oldv, double newv) const {
  const ParamInfo& info = cur_.layout->info(idx);
  switch (info.kind) {
    case ParamKind::TransIntercept:
    case ParamKind::PiLogit:
    case ParamKind::EmisIntercept: {
      double sd = md_->spec.intercept_prior_sd;
      return log_normal_pdf0(newv, sd) - log_normal_pdf0(oldv, sd);
    }
    case ParamKind::TransSeasonCoef:
    case ParamKind::TransYearCoef:
    case ParamKind::EmisSeasonCoef:
    case ParamKind::EmisYearCoef: {
      if (!coef_is_penalized(idx)) return 0.0;  // flat prior on the linear direction
      double sd = coef_prior_sd_of(idx);
      return log_normal_pdf0(newv, sd) - log_normal_pdf0(oldv, sd);
    }
    default: return 0.0;
  }
}

double Engine::prior_delta_sd(int idx, double oldv, double newv) const {
  const ParamLayout& L = *cur_.layout;
  const ParamInfo& info = L.info(idx);
  int start = -1, len = 0, dim = 0;
  switch (info.kind) {
    case ParamKind::TransSeasonSd: {
      const auto& set = L.trans_set(static_cast<TransGroup>(info.a));
      start = set.s_start; len = set.s_len; dim = md_->spec.season_dim;
      break;
    }
    case ParamKind::TransYearSd: {
      const auto& set = L.trans_set(static_cast<TransGroup>(info.a));
      start = set.t_start; len = set.t_len; dim = md_->spec.year_dim;
      break;
    }
    case ParamKind::EmisSeasonSd: {
      const auto& set = L.emis_set(static_cast<EmisBlock>(info.a), static_cast<EmisTerm>(info.b));
      start = set.s_start; len = set.s_len; dim = md_->spec.season_dim;
      break;
    }
    case ParamKind::EmisYearSd: {
      const auto& set = L.emis_set(static_cast<EmisBlock>(info.a), static_cast<EmisTerm>(info.b));
      start = set.t_start; len = set.t_len; dim = md_->spec.year_dim;
      break;
    }
    default: return 0.0;
  }
  (void)len;
  double acc = 0.0;
  for (int j = 0; j < dim - 1; ++j) {  // penalized coefficients only
    double c = cur_[start + j];
    acc += log_normal_pdf0(c, newv) - log_normal_pdf0(c, oldv);
  }
  return acc;
}

double Engine::propose_full_rebuild(int idx, double value) {
  double before = log_posterior_value(*md_, cur_);
  cur_.v[idx] = value;
  double after = log_posterior_value(*md_, cur_);
  full_rebuild_pending_ = true;
  if (after == kNegInf) return kNegInf;
  return after - before;
}

double Engine::propose(int idx, double value) {
  if (pending_ >= 0) throw NumericalError("propose() while a proposal is in flight");
  pending_ = idx;
  pending_old_ = cur_[idx];
  staged_.clear();
  lik_staged_ = false;
  if (!std::isfinite(value)) return kNegInf;
  if (!use_cache_) return propose_full_rebuild(idx, value);

  cur_.v[idx] = value;
  const ParamLayout& L = *cur_.layout;
  const ParamInfo& info = L.info(idx);
  const ModelSpec& spec = md_->spec;
  double dprior = 0.0;
  bool need_forward = false;

  const double* init_ptr = init_w_.f();
  const double* P_ptr = P_.f();
  const double* lin_ptr = lin_.f();
  const double* m_ptr = m_.f();

  switch (info.kind) {
    case ParamKind::TransSeasonSd:
    case ParamKind::TransYearSd:
    case ParamKind::EmisSeasonSd:
    case ParamKind::EmisYearSd: {
      if (!(value > spec.sd_lower && value < spec.sd_upper)) return kNegInf;
      dprior = prior_delta_sd(idx, pending_old_, value);
      break;
    }
    case ParamKind::InitLogit: {
      rebuild_init(init_w_.b());
      staged_.push_back(&init_w_);
      init_ptr = init_w_.b();
      double dj = 0.0;
      for (int k = 0; k < kNumStates; ++k)
        dj += std::log(init_w_.b()[k]) - std::log(init_w_.f()[k]);
      dprior = dj;
      need_forward = true;
      break;
    }
    case ParamKind::TransIntercept:
    case ParamKind::TransSeasonCoef:
    case ParamKind::TransYearCoef: {
      TransChannel touched[3];
      int n_touched;
      if (info.kind == ParamKind::TransIntercept) {
        touched[0] = static_cast<TransChannel>(info.a);
        n_touched = 1;
      } else {
        TransGroup g = static_cast<TransGroup>(info.a);
        n_touched = group_channel_count(g);
        for (int i = 0; i < n_touched; ++i) touched[i] = kGroupChannels[g][i];
      }
      const double* cf[kNumChannels];
      for (int ch = 0; ch < kNumChannels; ++ch) cf[ch] = chan_[ch].f();
      for (int i = 0; i < n_touched; ++i) {
        TransChannel ch = touched[i];
        rebuild_channel(ch, chan_[ch].b());
        staged_.push_back(&chan_[ch]);
        cf[ch] = chan_[ch].b();
      }
      if (!wd_floor_ok(cf[kWD1], cf[kWD2])) return kNegInf;
      rebuild_P(cf, P_.b());
      staged_.push_back(&P_);
      P_ptr = P_.b();
      dprior = prior_delta_scalar(idx, pending_old_, value);
      need_forward = true;
      break;
    }
    case ParamKind::PiLogit: {
      if (!pi_ordered()) return kNegInf;
      dprior = prior_delta_scalar(idx, pending_old_, value);
      int k = info.a;
      rebuild_le(static_cast<EmisBlock>(k), F_[k].f(), le_[k].b());
      staged_.push_back(&le_[k]);
      const double* le0 = k == 0 ? le_[0].b() : le_[0].f();
      const double* le1 = k == 1 ? le_[1].b() : le_[1].f();
      const double* le2 = k == 2 ? le_[2].b() : le_[2].f();
      rebuild_lin(le0, le1, le2, lin_.b(), m_.b());
      staged_.push_back(&lin_);
      staged_.push_back(&m_);
      lin_ptr = lin_.b();
      m_ptr = m_.b();
      need_forward = true;
      break;
    }
    case ParamKind::EmisIntercept:
    case ParamKind::EmisSeasonCoef:
    case ParamKind::EmisYearCoef: {
      EmisBlock k = static_cast<EmisBlock>(info.a);
      EmisTerm term = static_cast<EmisTerm>(info.b);
      Buf& grid = term == kShape ? shape_[k] : scale_[k];
      if (!rebuild_emis_grid(k, term, grid.b())) return kNegInf;
      staged_.push_back(&grid);
      const double* shape_ptr = term == kShape ? shape_[k].b() : shape_[k].f();
      const double* scale_ptr = term == kScale ? scale_[k].b() : scale_[k].f();
      CenterStats& bstats = cstats_[k][1 - centers_[k].front];
      rebuild_centers(k, shape_ptr, scale_ptr, centers_[k].b(), bstats);
      staged_.push_back(&centers_[k]);
      const double* c[kNumEmisBlocks];
      const CenterStats* cs[kNumEmisBlocks];
      for (int kk = 0; kk < kNumEmisBlocks; ++kk) {
        bool st = kk == k;
        c[kk] = st ? centers_[kk].b() : centers_[kk].f();
        cs[kk] = st ? &bstats : &cstats_[kk][centers_[kk].front];
      }
      if (!centers_ok(c[0], *cs[0], c[1], *cs[1], c[2], *cs[2])) return kNegInf;
      if (!rebuild_F(k, shape_ptr, scale_ptr, F_[k].b())) return kNegInf;
      staged_.push_back(&F_[k]);
      rebuild_le(k, F_[k].b(), le_[k].b());
      staged_.push_back(&le_[k]);
      const double* le0 = k == 0 ? le_[0].b() : le_[0].f();
      const double* le1 = k == 1 ? le_[1].b() : le_[1].f();
      const double* le2 = k == 2 ? le_[2].b() : le_[2].f();
      rebuild_lin(le0, le1, le2, lin_.b(), m_.b());
      staged_.push_back(&lin_);
      staged_.push_back(&m_);
      lin_ptr = lin_.b();
      m_ptr = m_.b();
      dprior = prior_delta_scalar(idx, pending_old_, value);
      need_forward = true;
      break;
    }
  }

  double dlik = 0.0;
  if (need_forward) {
    staged_lik_ = forward_all(init_ptr, P_ptr, lin_ptr, m_ptr, yll_.b(), &staged_impossible_);
    if (staged_lik_ == kNegInf) return kNegInf;
    staged_.push_back(&yll_);
    lik_staged_ = true;
    dlik = staged_lik_ - lik_total_;
  }
  return dprior + dlik;
}

void Engine::accept() {
  if (pending_ < 0) throw NumericalError("accept() without a proposal");
  if (full_rebuild_pending_) {
    full_rebuild_into_front();
    full_rebuild_pending_ = false;
  } else {
    for (Buf* b : staged_) b->flip();
    if (lik_staged_) {
      lik_total_ = staged_lik_;
      impossible_years_ = staged_impossible_;
    }
  }
  staged_.clear();
  lik_staged_ = false;
  pending_ = -1;
}

void Engine::reject() {
  if (pending_ < 0) throw NumericalError("reject() without a proposal");
  cur_.v[pending_] = pending_old_;
  staged_.clear();
  lik_staged_ = false;
  full_rebuild_pending_ = false;
  pending_ = -1;
}

std::array<double, kNumStates> Engine::init_weights_bound() const {
  std::array<double, kNumStates> w;
  for (int i = 0; i < kNumStates; ++i) w[i] = init_w_.f()[i];
  return w;
}

const double* Engine::transition_into_day(int t, int s) const {
  return P_.f() + (static_cast<size_t>(md_->day_offset[t]) + s) * 25;
}

EmissionAt Engine::emission_at(EmisBlock k, int s, int t) const {
  EmissionAt out;
  out.pi = inv_logit(cur_[cur_.layout->pi_logit(k)]);
  int cell = k == kEmisDry ? 0 : md_->cell_index(s, t);
  out.shape = shape_[k].f()[cell];
  out.scale = scale_[k].f()[cell];
  return out;
}

double Engine::emission_logprob_cached(int state, int t, int s) const {
  int day = md_->day_offset[t] + s;
  int sig = md_->sig_of_day[day];
  if (sig < 0) return 0.0;
  return le_[state_block(state)].f()[sig];
}

double Engine::forward_year_cached(int t) const {
  return forward_year_view(t, init_w_.f(), P_.f(), lin_.f(), m_.f());
}

YearImputation Engine::ffbs_impute_year(int t, std::mt19937_64& rng) const {
  const ModelData& d = *md_;
  int off = d.day_offset[t];
  int S = d.days_in_year[t];
  const double* lin = lin_.f();
  const double* P = P_.f();

  std::vector<double> alpha(static_cast<size_t>(S) * kNumStates);
  double a[kNumStates];
  {
    int sig = d.sig_of_day[off];
    const double* init = init_w_.f();
    if (sig >= 0) {
      const double* e = lin + static_cast<size_t>(sig) * 3;
      double c = 0;
      for (int k = 0; k < kNumStates; ++k) {
        a[k] = init[k] * e[kBlockOfState[k]];
        c += a[k];
      }
      if (!(c > 0.0)) throw NumericalError("FFBS: impossible observation at day 1");
      for (auto& x : a) x /= c;
    } else {
      for (int k = 0; k < kNumStates; ++k) a[k] = init[k];
    }
    std::copy(a, a + kNumStates, &alpha[0]);
  }
  for (int s = 1; s < S; ++s) {
    const double* Pr = P + static_cast<size_t>(off + s) * 25;
    double b[kNumStates] = {0, 0, 0, 0, 0};
    for (int k = 0; k < kNumStates; ++k) {
      double ak = a[k];
      for (int j = 0; j < kNumStates; ++j) b[j] += ak * Pr[k * 5 + j];
    }
    int sig = d.sig_of_day[off + s];
    double c = 0;
    if (sig >= 0) {
      const double* e = lin + static_cast<size_t>(sig) * 3;
      for (int j = 0; j < kNumStates; ++j) {
        b[j] *= e[kBlockOfState[j]];
        c += b[j];
      }
      if (!(c > 0.0)) throw NumericalError("FFBS: impossible observation");
    } else {
      for (int j = 0; j < kNumStates; ++j) c += b[j];
    }
    for (int j = 0; j < kNumStates; ++j) a[j] = b[j] / c;
    std::copy(a, a + kNumStates, &alpha[static_cast<size_t>(s) * kNumStates]);
  }

  YearImputation out;
  out.states.resize(S);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw_categorical = [&](const double* w) {
    double u = unif(rng);
    double acc = 0;
    for (int k = 0; k < kNumStates; ++k) {
      acc += w[k];
      if (u <= acc) return k;
    }
    return kNumStates - 1;
  };
  out.states[S - 1] = draw_categorical(&alpha[static_cast<size_t>(S - 1) * kNumStates]);
  for (int s = S - 2; s >= 0; --s) {
    const double* Pr = P + (static_cast<size_t>(off) + s + 1) * 25;
    int znext = out.states[s + 1];
    double w[kNumStates];
    double c = 0;
    for (int k = 0; k < kNumStates; ++k) {
      w[k] = alpha[static_cast<size_t>(s) * kNumStates + k] * Pr[k * 5 + znext];
      c += w[k];
    }
    if (!(c > 0.0)) throw NumericalError("FFBS: degenerate backward weights");
    for (auto& x : w) x /= c;
    out.states[s] = draw_categorical(w);
  }

  double grid = d.spec.report_grid_cm;
  for (int s = 0; s < S; ++s) {
    if (!d.missing_flat[off + s]) continue;
    EmisBlock k = state_block(out.states[s]);
    EmissionAt e = emission_at(k, s, t);
    double v = 0.0;
    if (unif(rng) >= e.pi) {
      if (d.spec.family == EmissionFamily::gamma) {
        v = std::gamma_distribution<double>(e.shape, e.scale)(rng);
      } else {
        v = gpd_quantile(unif(rng), e.shape, e.scale);
      }
      v = std::round(v / grid) * grid;
    }
    out.imputed.emplace_back(s, v);
  }
  return out;
}

std::vector<double> Engine::predictive_logdens_year(int t) const {
  const ModelData& d = *md_;
  int off = d.day_offset[t];
  int S = d.days_in_year[t];
  const double* lin = lin_.f();
  const double* m = m_.f();
  const double* P = P_.f();
  std::vector<double> out(S, kNaN);

  double a[kNumStates];
  {
    const double* init = init_w_.f();
    int sig = d.sig_of_day[off];
    if (sig >= 0) {
      const double* e = lin + static_cast<size_t>(sig) * 3;
      double c = 0;
      double b[kNumStates];
      for (int k = 0; k < kNumStates; ++k) {
        b[k] = init[k] * e[kBlockOfState[k]];
        c += b[k];
      }
      out[0] = c > 0.0 ? std::log(c) + m[sig] : kNegInf;
      if (c > 0.0) {
        for (int k = 0; k < kNumStates; ++k) a[k] = b[k] / c;
      } else {
        // skip conditioning on a day the model deems impossible
        for (int k = 0; k < kNumStates; ++k) a[k] = init[k];
      }
    } else {
      for (int k = 0; k < kNumStates; ++k) a[k] = init[k];
    }
  }
  for (int s = 1; s < S; ++s) {
    const double* Pr = P + static_cast<size_t>(off + s) * 25;
    double pred[kNumStates] = {0, 0, 0, 0, 0};
    for (int k = 0; k < kNumStates; ++k) {
      double ak = a[k];
      for (int j = 0; j < kNumStates; ++j) pred[j] += ak * Pr[k * 5 + j];
    }
    int sig = d.sig_of_day[off + s];
    if (sig >= 0) {
      const double* e = lin + static_cast<size_t>(sig) * 3;
      double b[kNumStates];
      double c = 0;
      for (int j = 0; j < kNumStates; ++j) {
        b[j] = pred[j] * e[kBlockOfState[j]];
        c += b[j];
      }
      out[s] = c > 0.0 ? std::log(c) + m[sig] : kNegInf;
      if (c > 0.0) {
        for (int j = 0; j < kNumStates; ++j) a[j] = b[j] / c;
      } else {
        for (int j = 0; j < kNumStates; ++j) a[j] = pred[j];
      }
    } else {
      for (int j = 0; j < kNumStates; ++j) a[j] = pred[j];
    }
  }
  return out;
}

std::vector<double> Engine::unconditional_logdens_year(int t) const {
  const ModelData& d = *md_;
  int off = d.day_offset[t];
  int S = d.days_in_year[t];
  const double* lin = lin_.f();
  const double* m = m_.f();
  const double* P = P_.f();
  std::vector<double> out(S, kNaN);
  double a[kNumStates];
  {
    const double* init = init_w_.f();
    for (int k = 0; k < kNumStates; ++k) a[k] = init[k];
  }
  for (int s = 0; s < S; ++s) {
    if (s > 0) {
      const double* Pr = P + static_cast<size_t>(off + s) * 25;
      double pred[kNumStates] = {0, 0, 0, 0, 0};
      for (int k = 0; k < kNumStates; ++k) {
        double ak = a[k];
        for (int j = 0; j < kNumStates; ++j) pred[j] += ak * Pr[k * 5 + j];
      }
      for (int j = 0; j < kNumStates; ++j) a[j] = pred[j];
    }
    int sig = d.sig_of_day[off + s];
    if (sig < 0) continue;
    const double* e = lin + static_cast<size_t>(sig) * 3;
    double c = 0;
    for (int j = 0; j < kNumStates; ++j) c += a[j] * e[kBlockOfState[j]];
    out[s] = c > 0.0 ? std::log(c) + m[sig] : kNegInf;
  }
  return out;
}

double forward_loglik(const DailySeries& data, int year_idx, const ParamVector& p,
                      const SplineBasis* bs, const SplineBasis* bt,
                      double rounding_halfwidth_cm, long* impossible) {
  int S = data.season_day_count.at(year_idx);
  bool any_observed = false;
  for (int s = 0; s < S; ++s) any_observed |= !data.missing[year_idx][s];
  if (!any_observed) return 0.0;  // no observed terms: log 1 exactly
  auto w = initial_weights(p);
  double loga[kNumStates];
  auto emis = [&](int s, int state) -> double {
    std::optional<double> r;
    if (!data.missing[year_idx][s]) r = data.values[year_idx][s];
    return emission_logprob(r, state, p, bs, bt, s, year_idx, rounding_halfwidth_cm);
  };
  for (int k = 0; k < kNumStates; ++k) loga[k] = std::log(w[k]) + emis(0, k);
  for (int s = 1; s < S; ++s) {
    Matrix5 P = transition_matrix(p, bs, bt, s, year_idx);
    double next[kNumStates];
    for (int j = 0; j < kNumStates; ++j) {
      double terms[kNumStates];
      for (int k = 0; k < kNumStates; ++k) terms[k] = loga[k] + std::log(P[k][j]);
      next[j] = logsumexp5(terms) + emis(s, j);
    }
    std::copy(next, next + kNumStates, loga);
  }
  double ll = logsumexp5(loga);
  if (ll == kNegInf && impossible) ++*impossible;
  return ll;
}

double forward_loglik_total(const ModelData& md, const ParamVector& p, long* impossible) {
  double total = 0;
  for (int t = 0; t < md.n_years; ++t)
    total += forward_loglik(md.data, t, p, md.bs(), md.bt(), md.spec.rounding_halfwidth_cm,
                            impossible);
  return total;
}

double log_prior_value(const ModelData& md, const ParamVector& p) {
  const ParamLayout& L = *p.layout;
  const ModelSpec& spec = md.spec;
  double lp = 0.0;
  for (int i = 0; i < L.size(); ++i) {
    const ParamInfo& info = L.info(i);
    switch (info.kind) {
      case ParamKind::TransIntercept:
      case ParamKind::PiLogit:
      case ParamKind::EmisIntercept:
        lp += log_normal_pdf0(p[i], spec.intercept_prior_sd);
        break;
      case ParamKind::TransSeasonCoef:
      case ParamKind::EmisSeasonCoef: {
        int j = info.kind == ParamKind::TransSeasonCoef ? info.b : info.c;
        if (j < spec.season_dim - 1) {
          int sd_idx = info.kind == ParamKind::TransSeasonCoef
                           ? L.trans_set(static_cast<TransGroup>(info.a)).s_sd
                           : L.emis_set(static_cast<EmisBlock>(info.a),
                                        static_cast<EmisTerm>(info.b)).s_sd;
          lp += log_normal_pdf0(p[i], p[sd_idx]);
        }
        break;
      }
      case ParamKind::TransYearCoef:
      case ParamKind::EmisYearCoef: {
        int j = info.kind == ParamKind::TransYearCoef ? info.b : info.c;
        if (j < spec.year_dim - 1) {
          int sd_idx = info.kind == ParamKind::TransYearCoef
                           ? L.trans_set(static_cast<TransGroup>(info.a)).t_sd
                           : L.emis_set(static_cast<EmisBlock>(info.a),
                                        static_cast<EmisTerm>(info.b)).t_sd;
          lp += log_normal_pdf0(p[i], p[sd_idx]);
        }
        break;
      }
      case ParamKind::TransSeasonSd:
      case ParamKind::TransYearSd:
      case ParamKind::EmisSeasonSd:
      case ParamKind::EmisYearSd:
        if (!(p[i] > spec.sd_lower && p[i] < spec.sd_upper)) return kNegInf;
        lp += -std::log(spec.sd_upper - spec.sd_lower);
        break;
      case ParamKind::InitLogit:
        break;  // handled once below
    }
  }
  auto w = initial_weights(p);
  lp += std::lgamma(5.0);  // Dirichlet(1,...,1) normalizer
  for (double wi : w) lp += std::log(wi);  // softmax Jacobian
  return lp;
}

double log_posterior_value(const ModelData& md, const ParamVector& p) {
  if (!check_constraints(p, md.bs(), md.bt(), md.max_obs_cm).empty()) return kNegInf;
  double lp = log_prior_value(md, p);
  if (lp == kNegInf) return kNegInf;
  return lp + forward_loglik_total(md, p);
}

}  // namespace swg
