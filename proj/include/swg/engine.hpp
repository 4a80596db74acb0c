#pragma once

#include <array>
#include <memory>
#include <random>
#include <vector>

#include "swg/model.hpp"
#include "swg/params.hpp"
#include "swg/series.hpp"
#include "swg/spline.hpp"

namespace swg {

// Immutable binding of one station-season panel to a model structure:
// bases on the day/year grids, flattened observations, and the dedup
// tables the likelihood cache runs on. Days sharing a parameter cell and a
// reported value share one emission "signature"; the rounded likelihood is
// computed once per signature, which is what makes constant-parameter fits
// cheap.
struct ModelData {
  DailySeries data;
  ModelSpec spec;
  LayoutPtr layout;
  std::shared_ptr<SplineBasis> basis_s;  // null when season_dim == 0
  std::shared_ptr<SplineBasis> basis_t;  // null when year_dim == 0
  double max_obs_cm = 0.0;               // wet-center cap

  int n_years = 0;
  int n_days = 0;
  std::vector<int> day_offset;           // per year start into flat arrays
  std::vector<int> days_in_year;
  std::vector<double> value_flat;
  std::vector<char> missing_flat;

  int s_rows = 1, t_rows = 1;            // parameter grid dims
  int n_cells = 1;                       // s_rows * t_rows
  std::vector<int> cell_of_day;          // parameter cell per day

  int n_sigs = 0;                        // distinct (cell, value) pairs over observed days
  std::vector<int> sig_of_day;           // -1 on missing days
  std::vector<double> sig_value;
  std::vector<int> sig_cell;
  std::vector<int> sig_value_id;         // distinct-value index (dry-state dedup)
  std::vector<double> distinct_values;

  static std::shared_ptr<const ModelData> create(DailySeries data, const ModelSpec& spec,
                                                 double ceiling_cm = 200.0);

  const SplineBasis* bs() const { return basis_s.get(); }
  const SplineBasis* bt() const { return basis_t.get(); }
  int cell_index(int s, int t) const {
    return (basis_t ? t : 0) * s_rows + (basis_s ? s : 0);
  }
  std::string fingerprint() const;       // content hash for artifact validation
};

// One FFBS draw for a year: the sampled state path plus values for the
// missing days, rounded to the reporting grid.
struct YearImputation {
  std::vector<int> states;
  std::vector<std::pair<int, double>> imputed;  // (day index, value cm)
};

// Cached evaluator for a ModelData: holds the transition matrices, emission
// likelihood tables, and per-year log-likelihoods for a bound parameter
// state, and supports staged single-scalar proposals with O(changed slice)
// recomputation. With use_cache=false every proposal rebuilds everything,
// which is the reference behavior the cache must reproduce.
class Engine {
 public:
  explicit Engine(std::shared_ptr<const ModelData> md, bool use_cache = true);

  void bind(const ParamVector& p);
  const ParamVector& params() const { return cur_; }
  const ModelData& model() const { return *md_; }

  bool feasible() const { return feasible_; }
  double loglik_total() const;
  const double* year_loglik() const;
  long impossible_years() const { return impossible_years_; }
  double log_prior() const;
  double log_posterior() const;

  // Scalar Metropolis support: returns the log target ratio (-inf when the
  // proposal is infeasible). Exactly one proposal may be in flight.
  double propose(int idx, double value);
  void accept();
  void reject();

  // Read-side accessors for the bound state (valid between proposals).
  std::array<double, kNumStates> init_weights_bound() const;
  const double* transition_into_day(int t, int s) const;  // 25 row-major
  EmissionAt emission_at(EmisBlock k, int s, int t) const;
  double emission_logprob_cached(int state, int t, int s) const;

  double forward_year_cached(int t) const;
  YearImputation ffbs_impute_year(int t, std::mt19937_64& rng) const;
  // One-step-ahead predictive log density per day (NaN on missing days,
  // -inf on days the bound model deems impossible).
  std::vector<double> predictive_logdens_year(int t) const;
  // Per-day marginal predictive log density: the state distribution is
  // propagated from the initial weights with no conditioning on the year's
  // observations.
  std::vector<double> unconditional_logdens_year(int t) const;

 private:
  struct Buf {
    std::vector<double> v[2];
    int front = 0;
    double* f() { return v[front].data(); }
    const double* f() const { return v[front].data(); }
    double* b() { return v[1 - front].data(); }
    void flip() { front ^= 1; }
    void resize(size_t n) {
      v[0].assign(n, 0.0);
      v[1].assign(n, 0.0);
    }
    size_t size() const { return v[0].size(); }
  };
  struct CenterStats {
    double mn = 0, mx = 0;
  };

  // rebuild helpers; all read cur_ and write caller-chosen storage
  void rebuild_init(double* out5) const;
  void rebuild_channel(TransChannel ch, double* cells) const;
  void rebuild_P(const double* const chan[kNumChannels], double* P) const;
  bool rebuild_emis_grid(EmisBlock k, EmisTerm term, double* cells) const;
  void rebuild_centers(EmisBlock k, const double* shape_cells, const double* scale_cells,
                       double* centers, CenterStats& stats) const;
  bool rebuild_F(EmisBlock k, const double* shape_cells, const double* scale_cells,
                 double* F) const;
  void rebuild_le(EmisBlock k, const double* F, double* le) const;
  void rebuild_lin(const double* le0, const double* le1, const double* le2, double* lin,
                   double* m) const;
  double forward_all(const double* init, const double* P, const double* lin, const double* m,
                     double* year_ll, long* impossible) const;
  double forward_year_view(int t, const double* init, const double* P, const double* lin,
                           const double* m) const;

  bool wd_floor_ok(const double* wd1_cells, const double* wd2_cells) const;
  bool centers_ok(const double* c1, const CenterStats& s1, const double* c4,
                  const CenterStats& s4, const double* c5, const CenterStats& s5) const;
  bool sd_supports_ok() const;
  bool pi_ordered() const;

  double prior_delta_scalar(int idx, double oldv, double newv) const;
  double prior_delta_sd(int idx, double oldv, double newv) const;
  double coef_prior_sd_of(int idx) const;
  bool coef_is_penalized(int idx) const;

  void full_rebuild_into_front();
  double propose_full_rebuild(int idx, double value);

  std::shared_ptr<const ModelData> md_;
  bool use_cache_;
  ParamVector cur_;

  Buf init_w_;                     // 5
  Buf chan_[kNumChannels];         // n_cells each
  Buf P_;                          // n_days * 25
  Buf shape_[kNumEmisBlocks];      // n_cells (dry: 1)
  Buf scale_[kNumEmisBlocks];
  Buf centers_[kNumEmisBlocks];
  CenterStats cstats_[kNumEmisBlocks][2];
  Buf F_[kNumEmisBlocks];          // wet: n_sigs, dry: n_values
  Buf le_[kNumEmisBlocks];         // n_sigs
  Buf lin_;                        // n_sigs * 3
  Buf m_;                          // n_sigs
  Buf yll_;                        // n_years

  double lik_total_ = 0.0;
  double staged_lik_ = 0.0;
  long impossible_years_ = 0;
  long staged_impossible_ = 0;
  bool feasible_ = false;

  // in-flight proposal bookkeeping
  int pending_ = -1;
  double pending_old_ = 0.0;
  bool lik_staged_ = false;
  std::vector<Buf*> staged_;
  ParamVector staged_params_;      // full-rebuild (no-cache) path
  bool full_rebuild_pending_ = false;
};

// Reference (uncached) paths, used as independent oracles and by callers
// that hold bare parameter vectors.
double forward_loglik(const DailySeries& data, int year_idx, const ParamVector& p,
                      const SplineBasis* bs, const SplineBasis* bt,
                      double rounding_halfwidth_cm, long* impossible = nullptr);
double forward_loglik_total(const ModelData& md, const ParamVector& p,
                            long* impossible = nullptr);
double log_prior_value(const ModelData& md, const ParamVector& p);
double log_posterior_value(const ModelData& md, const ParamVector& p);

}  // namespace swg
