#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "swg/params.hpp"
#include "swg/spline.hpp"

namespace swg {

inline constexpr int kNumStates = 5;  // three clone dry states + two wet
using Matrix5 = std::array<std::array<double, kNumStates>, kNumStates>;

// Emission block owning a state: states 0..2 share the dry block.
inline EmisBlock state_block(int state) {
  return state <= 2 ? kEmisDry : (state == 3 ? kEmisWet1 : kEmisWet2);
}

// Reference (uncached) evaluation paths. s and t are 0-based rows into the
// season / year bases; a null basis means the term is absent.

double trans_logit_at(const ParamVector& p, TransChannel ch, const SplineBasis* bs,
                      const SplineBasis* bt, int s, int t);

struct TransitionProbs {
  double p[kNumChannels];
};
TransitionProbs transition_probs_at(const ParamVector& p, const SplineBasis* bs,
                                    const SplineBasis* bt, int s, int t);

// Row-stochastic 5x5 matrix from the channel probabilities. Dry-to-dry cross
// transitions are structurally zero; each row's last free entry absorbs the
// remainder so rows sum to one for channel values in [0,1].
Matrix5 assemble_transition(const TransitionProbs& probs);
Matrix5 transition_matrix(const ParamVector& p, const SplineBasis* bs, const SplineBasis* bt,
                          int s, int t);

// Natural-scale emission parameters of one block at (s,t).
struct EmissionAt {
  double pi = 0;     // probability of a dry (zero) report beyond rounding
  double shape = 0;  // gamma shape, or GPD xi
  double scale = 0;
};
EmissionAt emission_params_at(const ParamVector& p, EmisBlock k, const SplineBasis* bs,
                              const SplineBasis* bt, int s, int t);

// CDF of the continuous part for the active family.
double family_cdf(EmissionFamily family, double x, double shape, double scale);

// Rounding-aware log-likelihood of a reported value. std::nullopt means
// missing and contributes log(1) = 0. A reported zero absorbs the point mass
// plus the continuous mass inside the first rounding cell.
double emission_logprob(std::optional<double> r_cm, int state, const ParamVector& p,
                        const SplineBasis* bs, const SplineBasis* bt, int s, int t,
                        double rounding_halfwidth_cm);

// Combination helpers shared with the cached engine.
double zero_cell_logprob(double pi, double cdf_at_halfwidth);
double positive_cell_logprob(double pi, double cdf_diff);

// Gamma mean or GPD median of a state's continuous part at (s,t).
double state_center(const ParamVector& p, int state, const SplineBasis* bs,
                    const SplineBasis* bt, int s, int t);

struct ConstraintViolation {
  enum Which { PiOrdering, CenterOrdering, WdFloor, CenterCap, SdRange } which;
  int s = -1, t = -1;
  std::string detail;
};
const char* violation_name(ConstraintViolation::Which which);

// Identifiability checks over the full (s,t) grid; empty result = feasible.
// Each violated constraint is reported once, with the first offending (s,t).
std::vector<ConstraintViolation> check_constraints(const ParamVector& p, const SplineBasis* bs,
                                                   const SplineBasis* bt,
                                                   double max_obs_precip_cm);

// pi / softmax-weight readers shared by several modules.
std::array<double, kNumEmisBlocks> zero_probs(const ParamVector& p);
std::array<double, kNumStates> initial_weights(const ParamVector& p);

}  // namespace swg
