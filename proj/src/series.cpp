#include "swg/series.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "swg/errors.hpp"

namespace swg {

int DailySeries::max_days() const {
  int m = 0;
  for (int c : season_day_count) m = std::max(m, c);
  return m;
}

int DailySeries::year_index(int label) const {
  auto it = std::find(years.begin(), years.end(), label);
  return it == years.end() ? -1 : static_cast<int>(it - years.begin());
}

double DailySeries::missing_fraction() const {
  long miss = 0, total = 0;
  for (const auto& row : missing) {
    total += static_cast<long>(row.size());
    miss += std::count(row.begin(), row.end(), true);
  }
  return total == 0 ? 0.0 : static_cast<double>(miss) / static_cast<double>(total);
}

double DailySeries::missing_fraction(int t) const {
  const auto& row = missing.at(t);
  if (row.empty()) return 0.0;
  long miss = std::count(row.begin(), row.end(), true);
  return static_cast<double>(miss) / static_cast<double>(row.size());
}

bool DailySeries::year_complete(int t) const {
  const auto& row = missing.at(t);
  return std::none_of(row.begin(), row.end(), [](bool m) { return m; });
}

double DailySeries::max_observed() const {
  double m = 0.0;
  for (int t = 0; t < n_years(); ++t)
    for (size_t s = 0; s < values[t].size(); ++s)
      if (!missing[t][s]) m = std::max(m, values[t][s]);
  return m;
}

void DailySeries::validate(double ceiling_cm) const {
  if (years.size() != values.size() || years.size() != missing.size() ||
      years.size() != season_day_count.size())
    throw InputError("DailySeries: ragged year arrays");
  for (int t = 0; t < n_years(); ++t) {
    if (t > 0 && years[t] != years[t - 1] + 1)
      throw InputError("DailySeries: year labels not consecutive");
    if (static_cast<int>(values[t].size()) != season_day_count[t] ||
        values[t].size() != missing[t].size())
      throw InputError("DailySeries: day arrays disagree with season_day_count");
    for (size_t s = 0; s < values[t].size(); ++s) {
      if (missing[t][s]) continue;
      double v = values[t][s];
      if (!(v >= 0.0))
        throw InputError("DailySeries: negative value at year " + std::to_string(years[t]));
      if (v > ceiling_cm)
        throw InputError("DailySeries: value " + std::to_string(v) +
                         " cm exceeds physical ceiling at year " + std::to_string(years[t]));
    }
  }
}

std::string series_to_json(const DailySeries& s) {
  nlohmann::json j;
  j["station_id"] = s.station_id;
  j["season"] = season_name(s.season);
  j["years"] = s.years;
  j["season_day_count"] = s.season_day_count;
  j["values"] = s.values;
  std::vector<std::vector<int>> miss;
  miss.reserve(s.missing.size());
  for (const auto& row : s.missing) miss.emplace_back(row.begin(), row.end());
  j["missing"] = miss;
  return j.dump(1);
}

DailySeries series_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("series json: ") + e.what());
  }
  DailySeries s;
  try {
    s.station_id = j.at("station_id").get<std::string>();
    s.season = season_from_name(j.at("season").get<std::string>());
    s.years = j.at("years").get<std::vector<int>>();
    s.season_day_count = j.at("season_day_count").get<std::vector<int>>();
    s.values = j.at("values").get<std::vector<std::vector<double>>>();
    auto miss = j.at("missing").get<std::vector<std::vector<int>>>();
    s.missing.reserve(miss.size());
    for (const auto& row : miss) {
      std::vector<bool> b(row.size());
      for (size_t i = 0; i < row.size(); ++i) b[i] = row[i] != 0;
      s.missing.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("series json: ") + e.what());
  }
  return s;
}

void save_series(const DailySeries& s, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  f << series_to_json(s);
}

DailySeries load_series(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return series_from_json(ss.str());
}

}  // namespace swg
