#include "swg/params.hpp"

#include <cmath>
#include <unordered_map>

#include <json.hpp>

#include "swg/errors.hpp"

namespace swg {

const char* const kChannelNames[kNumChannels] = {"D1", "D2", "D3", "DW1", "W1",
                                                 "W2", "W12", "W21", "WD1", "WD2"};
const char* const kGroupNames[kNumGroups] = {"dry", "DW1", "W1", "W2",
                                             "W12", "W21", "WD1", "WD2"};

std::string family_name(EmissionFamily f) {
  return f == EmissionFamily::gamma ? "gamma" : "gpd";
}

EmissionFamily family_from_name(const std::string& name) {
  if (name == "gamma") return EmissionFamily::gamma;
  if (name == "gpd") return EmissionFamily::gpd;
  throw ConfigError("unknown emission family: " + name);
}

TransGroup channel_group(TransChannel ch) {
  switch (ch) {
    case kD1:
    case kD2:
    case kD3: return kGroupDry;
    case kDW1: return kGroupDW1;
    case kW1: return kGroupW1;
    case kW2: return kGroupW2;
    case kW12: return kGroupW12;
    case kW21: return kGroupW21;
    case kWD1: return kGroupWD1;
    case kWD2: return kGroupWD2;
    default: throw NumericalError("bad channel");
  }
}

int ParamLayout::add(std::string name, ParamInfo info) {
  names_.push_back(std::move(name));
  infos_.push_back(info);
  return static_cast<int>(names_.size()) - 1;
}

SplineSetIdx ParamLayout::add_spline_set(const std::string& prefix, auto make_info) {
  SplineSetIdx set;
  if (spec_.season_dim > 0) {
    set.s_len = spec_.season_dim;
    for (int j = 0; j < spec_.season_dim; ++j) {
      int idx = add(prefix + ".s." + std::to_string(j + 1), make_info(true, false, j));
      if (j == 0) set.s_start = idx;
    }
    set.s_sd = add(prefix + ".s_sd", make_info(true, true, 0));
  }
  if (spec_.year_dim > 0) {
    set.t_len = spec_.year_dim;
    for (int j = 0; j < spec_.year_dim; ++j) {
      int idx = add(prefix + ".t." + std::to_string(j + 1), make_info(false, false, j));
      if (j == 0) set.t_start = idx;
    }
    set.t_sd = add(prefix + ".t_sd", make_info(false, true, 0));
  }
  return set;
}

ParamLayout::ParamLayout(const ModelSpec& spec) : spec_(spec) {
  for (int i = 0; i < 4; ++i)
    init_[i] = add("init.logit." + std::to_string(i + 1), {ParamKind::InitLogit, i});

  for (int ch = 0; ch < kNumChannels; ++ch)
    trans_b0_[ch] = add(std::string("trans.") + kChannelNames[ch] + ".b0",
                        {ParamKind::TransIntercept, ch});

  for (int g = 0; g < kNumGroups; ++g) {
    std::string prefix = std::string("trans.") + kGroupNames[g];
    trans_sets_[g] = add_spline_set(prefix, [g](bool season, bool is_sd, int j) {
      ParamKind k = is_sd ? (season ? ParamKind::TransSeasonSd : ParamKind::TransYearSd)
                          : (season ? ParamKind::TransSeasonCoef : ParamKind::TransYearCoef);
      return ParamInfo{k, g, j};
    });
  }

  static const char* const kBlockNames[kNumEmisBlocks] = {"k1", "k4", "k5"};
  static const char* const kTermNames[kNumEmisTerms] = {"shape", "scale"};
  for (int k = 0; k < kNumEmisBlocks; ++k)
    pi_[k] = add(std::string("emis.") + kBlockNames[k] + ".logit_pi", {ParamKind::PiLogit, k});

  for (int k = 0; k < kNumEmisBlocks; ++k) {
    for (int term = 0; term < kNumEmisTerms; ++term) {
      std::string prefix = std::string("emis.") + kBlockNames[k] + "." + kTermNames[term];
      SplineSetIdx set;
      set.intercept = add(prefix + ".b0", {ParamKind::EmisIntercept, k, term});
      if (k != kEmisDry) {
        // dry-state parameters stay constant over season and year
        auto sub = add_spline_set(prefix, [k, term](bool season, bool is_sd, int j) {
          ParamKind kk = is_sd
                             ? (season ? ParamKind::EmisSeasonSd : ParamKind::EmisYearSd)
                             : (season ? ParamKind::EmisSeasonCoef : ParamKind::EmisYearCoef);
          return ParamInfo{kk, k, term, j};
        });
        set.s_start = sub.s_start;
        set.s_len = sub.s_len;
        set.s_sd = sub.s_sd;
        set.t_start = sub.t_start;
        set.t_len = sub.t_len;
        set.t_sd = sub.t_sd;
      }
      emis_sets_[k][term] = set;
    }
  }
}

int ParamLayout::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names_[i] == name) return i;
  return -1;
}

LayoutPtr make_layout(const ModelSpec& spec) { return std::make_shared<ParamLayout>(spec); }

double ParamVector::get(const std::string& name) const {
  int i = layout->index_of(name);
  if (i < 0) throw InputError("unknown parameter name: " + name);
  return v[i];
}

void ParamVector::set(const std::string& name, double value) {
  int i = layout->index_of(name);
  if (i < 0) throw InputError("unknown parameter name: " + name);
  v[i] = value;
}

ParamVector make_default_params(const LayoutPtr& layout) {
  ParamVector p(layout);
  const ModelSpec& spec = layout->spec();
  for (int i = 0; i < layout->size(); ++i) {
    const ParamInfo& info = layout->info(i);
    switch (info.kind) {
      case ParamKind::TransSeasonSd:
      case ParamKind::TransYearSd:
      case ParamKind::EmisSeasonSd:
      case ParamKind::EmisYearSd: p[i] = 0.5; break;
      default: p[i] = 0.0; break;
    }
  }
  // ordered zero-precipitation probabilities: 0.88 > 0.50 > 0.12
  p[layout->pi_logit(kEmisDry)] = 2.0;
  p[layout->pi_logit(kEmisWet1)] = 0.0;
  p[layout->pi_logit(kEmisWet2)] = -2.0;
  // centers increasing dry -> wet1 -> wet2
  if (spec.family == EmissionFamily::gamma) {
    p[layout->emis_set(kEmisDry, kShape).intercept] = std::log(0.5);
    p[layout->emis_set(kEmisDry, kScale).intercept] = std::log(0.1);
    p[layout->emis_set(kEmisWet1, kShape).intercept] = std::log(0.7);
    p[layout->emis_set(kEmisWet1, kScale).intercept] = std::log(0.5);
    p[layout->emis_set(kEmisWet2, kShape).intercept] = std::log(0.8);
    p[layout->emis_set(kEmisWet2, kScale).intercept] = std::log(2.0);
  } else {
    p[layout->emis_set(kEmisDry, kShape).intercept] = 0.1;
    p[layout->emis_set(kEmisDry, kScale).intercept] = std::log(0.1);
    p[layout->emis_set(kEmisWet1, kShape).intercept] = 0.1;
    p[layout->emis_set(kEmisWet1, kScale).intercept] = std::log(0.5);
    p[layout->emis_set(kEmisWet2, kShape).intercept] = 0.1;
    p[layout->emis_set(kEmisWet2, kScale).intercept] = std::log(2.0);
  }
  return p;
}

std::string spec_to_json(const ModelSpec& spec) {
  nlohmann::json j;
  j["family"] = family_name(spec.family);
  j["season_dim"] = spec.season_dim;
  j["year_dim"] = spec.year_dim;
  j["intercept_prior_sd"] = spec.intercept_prior_sd;
  j["sd_lower"] = spec.sd_lower;
  j["sd_upper"] = spec.sd_upper;
  j["min_wd_prob"] = spec.min_wd_prob;
  j["rounding_halfwidth_cm"] = spec.rounding_halfwidth_cm;
  j["report_grid_cm"] = spec.report_grid_cm;
  return j.dump(1);
}

ModelSpec spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model spec json: ") + e.what());
  }
  ModelSpec spec;
  spec.family = family_from_name(j.at("family").get<std::string>());
  spec.season_dim = j.at("season_dim").get<int>();
  spec.year_dim = j.at("year_dim").get<int>();
  spec.intercept_prior_sd = j.value("intercept_prior_sd", spec.intercept_prior_sd);
  spec.sd_lower = j.value("sd_lower", spec.sd_lower);
  spec.sd_upper = j.value("sd_upper", spec.sd_upper);
  spec.min_wd_prob = j.value("min_wd_prob", spec.min_wd_prob);
  spec.rounding_halfwidth_cm = j.value("rounding_halfwidth_cm", spec.rounding_halfwidth_cm);
  spec.report_grid_cm = j.value("report_grid_cm", spec.report_grid_cm);
  return spec;
}

std::string params_to_json(const ParamVector& p) {
  nlohmann::json j;
  j["model"] = nlohmann::json::parse(spec_to_json(p.layout->spec()));
  nlohmann::json m = nlohmann::json::object();
  for (int i = 0; i < p.layout->size(); ++i) m[p.layout->name(i)] = p.v[i];
  j["params"] = m;
  return j.dump(1);
}

ParamVector params_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("params json: ") + e.what());
  }
  ModelSpec spec = spec_from_json(j.at("model").dump());
  ParamVector p(make_layout(spec));
  const auto& m = j.at("params");
  for (int i = 0; i < p.layout->size(); ++i) {
    auto it = m.find(p.layout->name(i));
    if (it == m.end()) throw ParseError("missing parameter " + p.layout->name(i));
    p.v[i] = it->get<double>();
  }
  return p;
}

}  // namespace swg
