#include "swg/model.hpp"

#include <cmath>
#include <limits>

#include "swg/dist.hpp"
#include "swg/errors.hpp"

namespace swg {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double spline_term(const ParamVector& p, const SplineSetIdx& set, const SplineBasis* bs,
                   const SplineBasis* bt, int s, int t) {
  double x = set.intercept >= 0 ? p[set.intercept] : 0.0;
  if (set.s_len > 0 && bs) {
    for (int j = 0; j < set.s_len; ++j) x += bs->X(s, j) * p[set.s_start + j];
  }
  if (set.t_len > 0 && bt) {
    for (int j = 0; j < set.t_len; ++j) x += bt->X(t, j) * p[set.t_start + j];
  }
  return x;
}
}  // namespace

double trans_logit_at(const ParamVector& p, TransChannel ch, const SplineBasis* bs,
                      const SplineBasis* bt, int s, int t) {
  SplineSetIdx set = p.layout->trans_set(channel_group(ch));
  set.intercept = p.layout->trans_intercept(ch);
  return spline_term(p, set, bs, bt, s, t);
}

TransitionProbs transition_probs_at(const ParamVector& p, const SplineBasis* bs,
                                    const SplineBasis* bt, int s, int t) {
  TransitionProbs out;
  for (int ch = 0; ch < kNumChannels; ++ch)
    out.p[ch] = inv_logit(trans_logit_at(p, static_cast<TransChannel>(ch), bs, bt, s, t));
  return out;
}

Matrix5 assemble_transition(const TransitionProbs& probs) {
  const double* v = probs.p;
  Matrix5 m{};
  const double pD[3] = {v[kD1], v[kD2], v[kD3]};
  for (int i = 0; i < 3; ++i) {
    double q = (1.0 - pD[i]) * v[kDW1];
    m[i][i] = pD[i];
    m[i][3] = q;
    m[i][4] = 1.0 - pD[i] - q;
  }
  {
    double r12 = (1.0 - v[kW1]) * v[kW12];
    double u11 = (1.0 - v[kW1] - r12) * v[kWD1];
    double u12 = (1.0 - v[kW1] - r12 - u11) * v[kWD2];
    m[3][0] = u11;
    m[3][1] = u12;
    m[3][2] = 1.0 - v[kW1] - r12 - u11 - u12;
    m[3][3] = v[kW1];
    m[3][4] = r12;
  }
  {
    double r21 = (1.0 - v[kW2]) * v[kW21];
    double u21 = (1.0 - v[kW2] - r21) * v[kWD1];
    double u22 = (1.0 - v[kW2] - r21 - u21) * v[kWD2];
    m[4][0] = u21;
    m[4][1] = u22;
    m[4][2] = 1.0 - v[kW2] - r21 - u21 - u22;
    m[4][3] = r21;
    m[4][4] = v[kW2];
  }
  return m;
}

Matrix5 transition_matrix(const ParamVector& p, const SplineBasis* bs, const SplineBasis* bt,
                          int s, int t) {
  return assemble_transition(transition_probs_at(p, bs, bt, s, t));
}

EmissionAt emission_params_at(const ParamVector& p, EmisBlock k, const SplineBasis* bs,
                              const SplineBasis* bt, int s, int t) {
  EmissionAt out;
  out.pi = inv_logit(p[p.layout->pi_logit(k)]);
  double shape_raw = spline_term(p, p.layout->emis_set(k, kShape), bs, bt, s, t);
  double scale_raw = spline_term(p, p.layout->emis_set(k, kScale), bs, bt, s, t);
  out.shape = p.layout->spec().family == EmissionFamily::gamma ? std::exp(shape_raw)
                                                               : shape_raw;
  out.scale = std::exp(scale_raw);
  return out;
}

double family_cdf(EmissionFamily family, double x, double shape, double scale) {
  return family == EmissionFamily::gamma ? gamma_cdf(x, shape, scale)
                                         : gpd_cdf(x, shape, scale);
}

double zero_cell_logprob(double pi, double cdf_at_halfwidth) {
  return std::log(pi + (1.0 - pi) * cdf_at_halfwidth);
}

double positive_cell_logprob(double pi, double cdf_diff) {
  if (!(cdf_diff > 0.0)) return kNegInf;  // underflow or out-of-support
  if (pi >= 1.0) return kNegInf;
  return std::log1p(-pi) + std::log(cdf_diff);
}

double emission_logprob(std::optional<double> r_cm, int state, const ParamVector& p,
                        const SplineBasis* bs, const SplineBasis* bt, int s, int t,
                        double rounding_halfwidth_cm) {
  if (!r_cm) return 0.0;
  double r = *r_cm;
  if (r < 0.0) throw NumericalError("emission_logprob: negative precipitation");
  EmissionAt e = emission_params_at(p, state_block(state), bs, bt, s, t);
  if (!std::isfinite(e.pi) || !std::isfinite(e.shape) || !std::isfinite(e.scale) ||
      e.scale <= 0.0)
    throw NumericalError("emission_logprob: non-finite emission parameters");
  EmissionFamily fam = p.layout->spec().family;
  double delta = rounding_halfwidth_cm;
  if (r == 0.0) return zero_cell_logprob(e.pi, family_cdf(fam, delta, e.shape, e.scale));
  double hi = family_cdf(fam, r + delta, e.shape, e.scale);
  double lo = family_cdf(fam, std::max(r - delta, 0.0), e.shape, e.scale);
  return positive_cell_logprob(e.pi, hi - lo);
}

double state_center(const ParamVector& p, int state, const SplineBasis* bs,
                    const SplineBasis* bt, int s, int t) {
  EmissionAt e = emission_params_at(p, state_block(state), bs, bt, s, t);
  if (p.layout->spec().family == EmissionFamily::gamma) return e.shape * e.scale;
  return gpd_median(e.shape, e.scale);
}

const char* violation_name(ConstraintViolation::Which which) {
  switch (which) {
    case ConstraintViolation::PiOrdering: return "pi_ordering";
    case ConstraintViolation::CenterOrdering: return "center_ordering";
    case ConstraintViolation::WdFloor: return "wd_floor";
    case ConstraintViolation::CenterCap: return "center_cap";
    case ConstraintViolation::SdRange: return "sd_range";
  }
  return "?";
}

std::array<double, kNumEmisBlocks> zero_probs(const ParamVector& p) {
  return {inv_logit(p[p.layout->pi_logit(kEmisDry)]),
          inv_logit(p[p.layout->pi_logit(kEmisWet1)]),
          inv_logit(p[p.layout->pi_logit(kEmisWet2)])};
}

std::array<double, kNumStates> initial_weights(const ParamVector& p) {
  double a[kNumStates] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 4; ++i) a[i] = p[p.layout->init_logit(i)];
  double mx = 0.0;
  for (double x : a) mx = std::max(mx, x);
  double sum = 0.0;
  std::array<double, kNumStates> w{};
  for (int i = 0; i < kNumStates; ++i) {
    w[i] = std::exp(a[i] - mx);
    sum += w[i];
  }
  for (auto& x : w) x /= sum;
  return w;
}

std::vector<ConstraintViolation> check_constraints(const ParamVector& p, const SplineBasis* bs,
                                                   const SplineBasis* bt,
                                                   double max_obs_precip_cm) {
  std::vector<ConstraintViolation> out;
  const ParamLayout& layout = *p.layout;
  const ModelSpec& spec = layout.spec();

  auto pis = zero_probs(p);
  if (!(pis[0] > pis[1] && pis[1] > pis[2]))
    out.push_back({ConstraintViolation::PiOrdering, -1, -1,
                   "pi must be strictly decreasing from dry to wet2"});

  for (int i = 0; i < layout.size(); ++i) {
    ParamKind k = layout.info(i).kind;
    if (k == ParamKind::TransSeasonSd || k == ParamKind::TransYearSd ||
        k == ParamKind::EmisSeasonSd || k == ParamKind::EmisYearSd) {
      if (!(p[i] > spec.sd_lower && p[i] < spec.sd_upper)) {
        out.push_back({ConstraintViolation::SdRange, -1, -1,
                       layout.name(i) + " outside (" + std::to_string(spec.sd_lower) + ", " +
                           std::to_string(spec.sd_upper) + ")"});
        break;  // one report per constraint kind
      }
    }
  }

  int S = bs ? bs->rows() : 1;
  int T = bt ? bt->rows() : 1;
  bool bad_center_order = false, bad_wd = false, bad_cap = false;
  for (int t = 0; t < T && !(bad_center_order && bad_wd && bad_cap); ++t) {
    for (int s = 0; s < S; ++s) {
      if (!bad_center_order || !bad_cap) {
        double c1 = state_center(p, 0, bs, bt, s, t);
        double c4 = state_center(p, 3, bs, bt, s, t);
        double c5 = state_center(p, 4, bs, bt, s, t);
        if (!bad_center_order && !(c1 < c4 && c4 < c5)) {
          out.push_back({ConstraintViolation::CenterOrdering, s, t,
                         "state centers not increasing dry -> wet1 -> wet2"});
          bad_center_order = true;
        }
        if (!bad_cap && !(c4 <= max_obs_precip_cm && c5 <= max_obs_precip_cm)) {
          out.push_back({ConstraintViolation::CenterCap, s, t,
                         "wet-state center exceeds the observed maximum"});
          bad_cap = true;
        }
      }
      if (!bad_wd) {
        double wd1 = inv_logit(trans_logit_at(p, kWD1, bs, bt, s, t));
        double wd2 = inv_logit(trans_logit_at(p, kWD2, bs, bt, s, t));
        if (!(wd1 > spec.min_wd_prob && wd2 > spec.min_wd_prob)) {
          out.push_back({ConstraintViolation::WdFloor, s, t,
                         "wet-to-dry routing probability at or below floor"});
          bad_wd = true;
        }
      }
    }
  }
  return out;
}

}  // namespace swg
