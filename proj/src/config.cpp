#include "swg/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <set>
#include <fstream>
#include <sstream>

#include "swg/errors.hpp"

namespace swg {

namespace {

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

TomlValue parse_value(const std::string& raw, long line_no);

TomlValue parse_array(const std::string& raw, long line_no) {
  TomlValue out;
  out.kind = TomlValue::Array;
  std::string body = trim(raw.substr(1, raw.size() - 2));
  if (body.empty()) return out;
  // split on commas outside strings and brackets
  int depth = 0;
  bool in_str = false;
  std::string item;
  auto flush = [&] {
    std::string t = trim(item);
    if (!t.empty()) out.arr.push_back(parse_value(t, line_no));
    item.clear();
  };
  for (char c : body) {
    if (c == '"') in_str = !in_str;
    if (!in_str) {
      if (c == '[') ++depth;
      if (c == ']') --depth;
      if (c == ',' && depth == 0) {
        flush();
        continue;
      }
    }
    item += c;
  }
  flush();
  return out;
}

TomlValue parse_value(const std::string& raw, long line_no) {
  TomlValue v;
  if (raw.empty()) throw ParseError("empty value", line_no);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ParseError("unterminated string", line_no);
    v.kind = TomlValue::String;
    v.s = raw.substr(1, raw.size() - 2);
    return v;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') throw ParseError("unterminated array", line_no);
    return parse_array(raw, line_no);
  }
  if (raw == "true" || raw == "false") {
    v.kind = TomlValue::Boolean;
    v.b = raw == "true";
    return v;
  }
  char* end = nullptr;
  v.num = std::strtod(raw.c_str(), &end);
  if (end != raw.c_str() + raw.size()) throw ParseError("bad value '" + raw + "'", line_no);
  v.kind = TomlValue::Number;
  return v;
}

}  // namespace

std::map<std::string, TomlValue> parse_toml(const std::string& text) {
  std::map<std::string, TomlValue> out;
  std::istringstream ss(text);
  std::string line, section;
  long line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    std::string t = trim(strip_comment(line));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError("bad section header", line_no);
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ParseError("empty section name", line_no);
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    std::string full = section.empty() ? key : section + "." + key;
    out[full] = parse_value(val, line_no);
  }
  return out;
}

namespace {

class Reader {
 public:
  explicit Reader(std::map<std::string, TomlValue> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& k) const { return kv_.count(k) > 0; }
  std::string str(const std::string& k, const std::string& dflt) {
    if (!has(k)) return dflt;
    return expect(k, TomlValue::String).s;
  }
  double num(const std::string& k, double dflt) {
    if (!has(k)) return dflt;
    return expect(k, TomlValue::Number).num;
  }
  long integer(const std::string& k, long dflt) {
    double v = num(k, static_cast<double>(dflt));
    long out = static_cast<long>(v);
    if (static_cast<double>(out) != v) throw ConfigError(k + " must be an integer");
    return out;
  }
  const TomlValue* array(const std::string& k) {
    if (!has(k)) return nullptr;
    return &expect(k, TomlValue::Array);
  }
  void check_consumed() const {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) throw ConfigError("unknown config key: " + k);
  }

 private:
  const TomlValue& expect(const std::string& k, TomlValue::Kind kind) {
    used_.insert(k);
    const TomlValue& v = kv_.at(k);
    if (v.kind != kind) throw ConfigError("wrong type for config key " + k);
    return v;
  }
  std::map<std::string, TomlValue> kv_;
  std::set<std::string> used_;
};

}  // namespace

RunConfig parse_run_config(const std::string& toml_text) {
  Reader r(parse_toml(toml_text));
  RunConfig c;

  c.data_path = r.str("data.path", "");
  c.data_format = r.str("data.format", c.data_format);
  c.station_id = r.str("data.station", "");
  c.season = season_from_name(r.str("data.season", "DJF"));
  c.year_start = static_cast<int>(r.integer("data.year_start", c.year_start));
  c.year_end = static_cast<int>(r.integer("data.year_end", c.year_end));
  c.ceiling_cm = r.num("data.ceiling_cm", c.ceiling_cm);

  c.model.family = family_from_name(r.str("model.family", "gamma"));
  c.model.season_dim = static_cast<int>(r.integer("model.season_dim", c.model.season_dim));
  c.model.year_dim = static_cast<int>(r.integer("model.year_dim", c.model.year_dim));
  c.model.intercept_prior_sd = r.num("model.intercept_prior_sd", c.model.intercept_prior_sd);
  c.model.min_wd_prob = r.num("model.min_wd_prob", c.model.min_wd_prob);
  c.model.rounding_halfwidth_cm =
      r.num("model.rounding_halfwidth_cm", c.model.rounding_halfwidth_cm);
  c.model.report_grid_cm = r.num("model.report_grid_cm", c.model.report_grid_cm);
  c.wet_cutoff_cm = r.num("model.wet_cutoff_cm", c.wet_cutoff_cm);

  c.chain.n_iterations = r.integer("mcmc.iterations", c.chain.n_iterations);
  c.chain.burn_in = r.integer("mcmc.burn_in", c.chain.burn_in);
  c.chain.thin = static_cast<int>(r.integer("mcmc.thin", c.chain.thin));
  c.chain.n_chains = static_cast<int>(r.integer("mcmc.chains", c.chain.n_chains));
  c.chain.seed = static_cast<std::uint64_t>(r.integer("mcmc.seed", 1));
  c.chain.adaptation_interval =
      static_cast<int>(r.integer("mcmc.adaptation_interval", c.chain.adaptation_interval));
  c.chain.target_acceptance = r.num("mcmc.target_acceptance", c.chain.target_acceptance);
  c.chain.checkpoint_interval = r.integer("mcmc.checkpoint_interval", c.chain.checkpoint_interval);
  c.chain.initial_step = r.num("mcmc.initial_step", c.chain.initial_step);

  if (const TomlValue* held = r.array("holdout.years")) {
    for (const auto& v : held->arr) {
      if (v.kind != TomlValue::Number) throw ConfigError("holdout.years must be integers");
      c.holdout_years.push_back(static_cast<int>(v.num));
    }
  }
  c.holdout_from = static_cast<int>(r.integer("holdout.from", c.holdout_from));
  c.holdout_to = static_cast<int>(r.integer("holdout.to", c.holdout_to));
  c.holdout_every = static_cast<int>(r.integer("holdout.every", c.holdout_every));

  if (const TomlValue* vars = r.array("crossval.variants")) {
    c.variants.clear();
    for (const auto& v : vars->arr) {
      if (v.kind != TomlValue::String) throw ConfigError("crossval.variants must be strings");
      c.variants.push_back(v.s);
    }
  }

  c.omission_threshold = r.num("assess.omission_threshold", c.omission_threshold);
  c.assess_max_draws = static_cast<int>(r.integer("assess.max_draws", c.assess_max_draws));

  if (const TomlValue* periods = r.array("trend.periods")) {
    c.periods.clear();
    for (const auto& v : periods->arr) {
      if (v.kind != TomlValue::Array || v.arr.size() != 2 ||
          v.arr[0].kind != TomlValue::Number || v.arr[1].kind != TomlValue::Number)
        throw ConfigError("trend.periods must be pairs like [[1920, 2021], ...]");
      c.periods.emplace_back(static_cast<int>(v.arr[0].num), static_cast<int>(v.arr[1].num));
    }
  }
  if (const TomlValue* mets = r.array("trend.metrics")) {
    c.metrics.clear();
    for (const auto& v : mets->arr) {
      if (v.kind != TomlValue::String) throw ConfigError("trend.metrics must be strings");
      c.metrics.push_back(metric_from_name(v.s));
    }
  }
  c.trend_kday = static_cast<int>(r.integer("trend.kday", c.trend_kday));
  c.trend_max_draws = static_cast<int>(r.integer("trend.max_draws", c.trend_max_draws));

  c.emit_count = static_cast<int>(r.integer("emit.count", c.emit_count));

  c.output_dir = r.str("output.dir", c.output_dir);
  c.workers = static_cast<int>(r.integer("output.workers", c.workers));

  r.check_consumed();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

void RunConfig::validate() const {
  if (data_path.empty()) throw ConfigError("data.path is required");
  if (data_format != "dly" && data_format != "csv" && data_format != "series_json")
    throw ConfigError("data.format must be dly, csv, or series_json");
  if (year_end < year_start) throw ConfigError("data.year_end before data.year_start");
  if (!(ceiling_cm > 0)) throw ConfigError("data.ceiling_cm must be positive");
  if (model.season_dim < 0 || model.year_dim < 0)
    throw ConfigError("basis dimensions must be >= 0");
  if (model.season_dim == 1 || model.season_dim == 2 || model.year_dim == 1 ||
      model.year_dim == 2)
    throw ConfigError("basis dimensions must be 0 or >= 3");
  if (!(wet_cutoff_cm > 0)) throw ConfigError("model.wet_cutoff_cm must be positive");
  chain.validate();
  for (const auto& v : variants) {
    auto pos = v.find(':');
    if (pos == std::string::npos) throw ConfigError("variant must look like family:trend");
    family_from_name(v.substr(0, pos));
    std::string trend = v.substr(pos + 1);
    if (trend != "trend" && trend != "no_trend")
      throw ConfigError("variant trend part must be 'trend' or 'no_trend'");
  }
  if (!(omission_threshold > 0 && omission_threshold < 1))
    throw ConfigError("assess.omission_threshold must lie in (0,1)");
  for (auto [a, b] : periods)
    if (b < a) throw ConfigError("trend period ends before it starts");
  if (metrics.empty()) throw ConfigError("trend.metrics must not be empty");
  if (trend_kday < 1) throw ConfigError("trend.kday must be >= 1");
  if (workers < 1) throw ConfigError("output.workers must be >= 1");
  if (emit_count < 1) throw ConfigError("emit.count must be >= 1");
  if (output_dir.empty()) throw ConfigError("output.dir is required");
}

HoldoutPlan RunConfig::holdout_plan() const {
  if (!holdout_years.empty()) {
    HoldoutPlan plan;
    plan.held_years = holdout_years;
    return plan;
  }
  return HoldoutPlan::every_nth(holdout_from, holdout_to, holdout_every);
}

std::string serialize_run_config(const RunConfig& c) {
  std::ostringstream out;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "[data]\n";
  out << "path = \"" << c.data_path << "\"\n";
  out << "format = \"" << c.data_format << "\"\n";
  if (!c.station_id.empty()) out << "station = \"" << c.station_id << "\"\n";
  out << "season = \"" << season_name(c.season) << "\"\n";
  out << "year_start = " << c.year_start << "\n";
  out << "year_end = " << c.year_end << "\n";
  out << "ceiling_cm = " << num(c.ceiling_cm) << "\n\n";

  out << "[model]\n";
  out << "family = \"" << family_name(c.model.family) << "\"\n";
  out << "season_dim = " << c.model.season_dim << "\n";
  out << "year_dim = " << c.model.year_dim << "\n";
  out << "intercept_prior_sd = " << num(c.model.intercept_prior_sd) << "\n";
  out << "min_wd_prob = " << num(c.model.min_wd_prob) << "\n";
  out << "rounding_halfwidth_cm = " << num(c.model.rounding_halfwidth_cm) << "\n";
  out << "report_grid_cm = " << num(c.model.report_grid_cm) << "\n";
  out << "wet_cutoff_cm = " << num(c.wet_cutoff_cm) << "\n\n";

  out << "[mcmc]\n";
  out << "iterations = " << c.chain.n_iterations << "\n";
  out << "burn_in = " << c.chain.burn_in << "\n";
  out << "thin = " << c.chain.thin << "\n";
  out << "chains = " << c.chain.n_chains << "\n";
  out << "seed = " << c.chain.seed << "\n";
  out << "adaptation_interval = " << c.chain.adaptation_interval << "\n";
  out << "target_acceptance = " << num(c.chain.target_acceptance) << "\n";
  out << "checkpoint_interval = " << c.chain.checkpoint_interval << "\n";
  out << "initial_step = " << num(c.chain.initial_step) << "\n\n";

  out << "[holdout]\n";
  if (!c.holdout_years.empty()) {
    out << "years = [";
    for (size_t i = 0; i < c.holdout_years.size(); ++i)
      out << (i ? ", " : "") << c.holdout_years[i];
    out << "]\n";
  }
  out << "from = " << c.holdout_from << "\n";
  out << "to = " << c.holdout_to << "\n";
  out << "every = " << c.holdout_every << "\n\n";

  out << "[crossval]\n";
  out << "variants = [";
  for (size_t i = 0; i < c.variants.size(); ++i)
    out << (i ? ", " : "") << '"' << c.variants[i] << '"';
  out << "]\n\n";

  out << "[assess]\n";
  out << "omission_threshold = " << num(c.omission_threshold) << "\n";
  out << "max_draws = " << c.assess_max_draws << "\n\n";

  out << "[trend]\n";
  out << "periods = [";
  for (size_t i = 0; i < c.periods.size(); ++i)
    out << (i ? ", " : "") << '[' << c.periods[i].first << ", " << c.periods[i].second << ']';
  out << "]\n";
  out << "metrics = [";
  for (size_t i = 0; i < c.metrics.size(); ++i)
    out << (i ? ", " : "") << '"' << metric_name(c.metrics[i]) << '"';
  out << "]\n";
  out << "kday = " << c.trend_kday << "\n";
  out << "max_draws = " << c.trend_max_draws << "\n\n";

  out << "[emit]\n";
  out << "count = " << c.emit_count << "\n\n";

  out << "[output]\n";
  out << "dir = \"" << c.output_dir << "\"\n";
  out << "workers = " << c.workers << "\n";
  return out.str();
}

}  // namespace swg
