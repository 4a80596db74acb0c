#pragma once

#include <memory>
#include <string>
#include <vector>

namespace swg {

enum class EmissionFamily { gamma, gpd };
std::string family_name(EmissionFamily f);
EmissionFamily family_from_name(const std::string& name);

// Structural choices that fix the parameter set. season_dim/year_dim of 0
// drop the corresponding spline terms entirely (constant in s / no yearly
// variation), which is how the no-trend model variant is expressed.
struct ModelSpec {
  EmissionFamily family = EmissionFamily::gamma;
  int season_dim = 20;
  int year_dim = 20;
  double intercept_prior_sd = 1.5;
  double sd_lower = 0.001;
  double sd_upper = 10.0;
  double min_wd_prob = 0.4;
  double rounding_halfwidth_cm = 0.0127;  // half of one reporting increment
  double report_grid_cm = 0.0254;

  bool operator==(const ModelSpec&) const = default;
};

// Transition probability channels, in storage order.
enum TransChannel {
  kD1 = 0, kD2, kD3, kDW1, kW1, kW2, kW12, kW21, kWD1, kWD2,
  kNumChannels
};
extern const char* const kChannelNames[kNumChannels];

// Spline-coefficient groups for the transition channels; the three clone dry
// states share one group.
enum TransGroup {
  kGroupDry = 0, kGroupDW1, kGroupW1, kGroupW2, kGroupW12, kGroupW21,
  kGroupWD1, kGroupWD2, kNumGroups
};
extern const char* const kGroupNames[kNumGroups];
TransGroup channel_group(TransChannel ch);

// Emitting blocks: the merged dry state and the two wet states.
enum EmisBlock { kEmisDry = 0, kEmisWet1, kEmisWet2, kNumEmisBlocks };
enum EmisTerm { kShape = 0, kScale, kNumEmisTerms };

enum class ParamKind {
  InitLogit,        // a = logit index 0..3
  TransIntercept,   // a = channel
  TransSeasonCoef,  // a = group, b = coef index
  TransYearCoef,    // a = group, b = coef index
  TransSeasonSd,    // a = group
  TransYearSd,      // a = group
  PiLogit,          // a = emis block
  EmisIntercept,    // a = emis block, b = term
  EmisSeasonCoef,   // a = block, b = term, c = coef index
  EmisYearCoef,     // a = block, b = term, c = coef index
  EmisSeasonSd,     // a = block, b = term
  EmisYearSd,       // a = block, b = term
};

struct ParamInfo {
  ParamKind kind;
  int a = 0, b = 0, c = 0;
};

// Index bundle for one spline term set (intercept + season/year coefficients
// and their shrinkage sds); -1 marks absent pieces.
struct SplineSetIdx {
  int intercept = -1;
  int s_start = -1, s_len = 0, s_sd = -1;
  int t_start = -1, t_len = 0, t_sd = -1;
};

// Flat scalar layout for one ModelSpec. Names are stable and documented;
// chain tables and parameter maps use them verbatim.
class ParamLayout {
 public:
  explicit ParamLayout(const ModelSpec& spec);

  const ModelSpec& spec() const { return spec_; }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int i) const { return names_[i]; }
  const ParamInfo& info(int i) const { return infos_[i]; }
  int index_of(const std::string& name) const;  // -1 if absent

  int init_logit(int i) const { return init_[i]; }
  int trans_intercept(TransChannel ch) const { return trans_b0_[ch]; }
  const SplineSetIdx& trans_set(TransGroup g) const { return trans_sets_[g]; }
  int pi_logit(EmisBlock k) const { return pi_[k]; }
  const SplineSetIdx& emis_set(EmisBlock k, EmisTerm term) const { return emis_sets_[k][term]; }

 private:
  int add(std::string name, ParamInfo info);
  SplineSetIdx add_spline_set(const std::string& prefix, auto make_info);

  ModelSpec spec_;
  std::vector<std::string> names_;
  std::vector<ParamInfo> infos_;
  int init_[4];
  int trans_b0_[kNumChannels];
  SplineSetIdx trans_sets_[kNumGroups];
  int pi_[kNumEmisBlocks];
  SplineSetIdx emis_sets_[kNumEmisBlocks][kNumEmisTerms];
};

using LayoutPtr = std::shared_ptr<const ParamLayout>;
LayoutPtr make_layout(const ModelSpec& spec);

// One full parameter state: a flat vector bound to its layout.
struct ParamVector {
  LayoutPtr layout;
  std::vector<double> v;

  ParamVector() = default;
  explicit ParamVector(LayoutPtr l) : layout(std::move(l)), v(layout->size(), 0.0) {}

  double operator[](int i) const { return v[i]; }
  double& operator[](int i) { return v[i]; }
  double get(const std::string& name) const;
  void set(const std::string& name, double value);
};

// Feasible starting values satisfying the ordering constraints, independent
// of data (spline coefficients zero, sds 0.5).
ParamVector make_default_params(const LayoutPtr& layout);

// Flat named-map JSON round trip.
std::string params_to_json(const ParamVector& p);
ParamVector params_from_json(const std::string& text);

std::string spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const std::string& text);

}  // namespace swg
