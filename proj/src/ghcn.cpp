#include "swg/ghcn.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "swg/errors.hpp"

namespace swg {

StationFormat station_format_from_name(const std::string& name) {
  if (name == "dly" || name == "dly_fixed_width") return StationFormat::dly_fixed_width;
  if (name == "csv") return StationFormat::csv;
  throw ConfigError("unknown station format: " + name);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int parse_int_field(const std::string& text, long line_no, const char* what) {
  std::string t = trim(text);
  if (t.empty()) throw ParseError(std::string("empty ") + what, line_no);
  int v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size())
    throw ParseError(std::string("bad ") + what + " '" + t + "'", line_no);
  return v;
}

}  // namespace

std::vector<RawRecord> parse_dly(std::istream& in, const std::string& station_filter) {
  std::vector<RawRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line.size() < 21 + 8) throw ParseError("dly line too short", line_no);
    std::string id = trim(line.substr(0, 11));
    if (!station_filter.empty() && id != station_filter) continue;
    std::string element = line.substr(17, 4);
    if (element != "PRCP") continue;  // other elements skipped
    int year = parse_int_field(line.substr(11, 4), line_no, "year");
    int month = parse_int_field(line.substr(15, 2), line_no, "month");
    if (month < 1 || month > 12) throw ParseError("bad month", line_no);
    int n_days = days_in_month(year, month);
    for (int d = 1; d <= 31; ++d) {
      size_t off = 21 + static_cast<size_t>(d - 1) * 8;
      if (off + 5 > line.size()) {
        if (d <= n_days) throw ParseError("dly line truncated", line_no);
        break;
      }
      int value = parse_int_field(line.substr(off, 5), line_no, "value");
      char mflag = off + 5 < line.size() ? line[off + 5] : ' ';
      char qflag = off + 6 < line.size() ? line[off + 6] : ' ';
      if (d > n_days) {
        if (value != -9999)
          throw ParseError("value on nonexistent calendar day", line_no);
        continue;
      }
      RawRecord r;
      r.date = {year, month, d};
      r.mflag = mflag;
      r.qflag = qflag;
      if (value == -9999) {
        r.prcp_tenths_mm = std::nullopt;
      } else if (value < 0) {
        throw ParseError("negative precipitation value", line_no);
      } else {
        r.prcp_tenths_mm = value;
      }
      out.push_back(r);
    }
  }
  return out;
}

std::vector<RawRecord> parse_csv(std::istream& in) {
  std::vector<RawRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (line_no == 1 && t.rfind("date", 0) == 0) continue;  // header
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) fields.push_back(trim(item));
    if (t.back() == ',') fields.push_back("");
    while (fields.size() < 4) fields.push_back("");
    if (fields.size() > 4) throw ParseError("too many csv fields", line_no);
    const std::string& ds = fields[0];
    if (ds.size() != 10 || ds[4] != '-' || ds[7] != '-')
      throw ParseError("bad date '" + ds + "'", line_no);
    RawRecord r;
    r.date.year = parse_int_field(ds.substr(0, 4), line_no, "year");
    r.date.month = parse_int_field(ds.substr(5, 2), line_no, "month");
    r.date.day = parse_int_field(ds.substr(8, 2), line_no, "day");
    if (!valid_date(r.date)) throw ParseError("invalid date '" + ds + "'", line_no);
    if (!fields[1].empty()) {
      int v = parse_int_field(fields[1], line_no, "prcp");
      if (v < 0) throw ParseError("negative precipitation value", line_no);
      r.prcp_tenths_mm = v;
    }
    if (!fields[2].empty()) r.mflag = fields[2][0];
    if (!fields[3].empty()) r.qflag = fields[3][0];
    out.push_back(r);
  }
  return out;
}

std::vector<RawRecord> parse_station(std::istream& in, StationFormat format,
                                     const std::string& station_filter) {
  return format == StationFormat::dly_fixed_width ? parse_dly(in, station_filter)
                                                  : parse_csv(in);
}

std::vector<RawRecord> parse_station_file(const std::string& path, StationFormat format,
                                          const std::string& station_filter) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read station file " + path);
  return parse_station(f, format, station_filter);
}

std::vector<RawRecord> apply_quality_filter(std::vector<RawRecord> records) {
  for (auto& r : records) {
    if (r.qflag != ' ' && r.qflag != '\0') {
      r.prcp_tenths_mm = std::nullopt;  // failed QA: value removed, stays missing
    } else if (r.mflag == 'T') {
      r.prcp_tenths_mm = 0;  // trace precipitation counts as an observed zero
    }
  }
  return records;
}

DailySeries seasonize(const std::vector<RawRecord>& records, Season season,
                      std::pair<int, int> year_range, const std::string& station_id,
                      double ceiling_cm) {
  std::map<Date, const RawRecord*> by_date;
  for (const auto& r : records) by_date[r.date] = &r;

  DailySeries out;
  out.station_id = station_id;
  out.season = season;
  long n_in_window = 0;
  for (int label = year_range.first; label <= year_range.second; ++label) {
    auto days = season_days(season, label);
    std::vector<double> vals(days.size(), 0.0);
    std::vector<bool> miss(days.size(), true);
    for (size_t s = 0; s < days.size(); ++s) {
      auto it = by_date.find(days[s]);
      if (it == by_date.end()) continue;
      ++n_in_window;
      const RawRecord* r = it->second;
      if (!r->prcp_tenths_mm) continue;
      double cm = static_cast<double>(*r->prcp_tenths_mm) / 100.0;
      if (cm > ceiling_cm)
        throw InputError("precipitation " + std::to_string(cm) + " cm on " +
                         std::to_string(days[s].year) + "-" + std::to_string(days[s].month) +
                         "-" + std::to_string(days[s].day) + " exceeds physical ceiling");
      vals[s] = cm;
      miss[s] = false;
    }
    out.years.push_back(label);
    out.season_day_count.push_back(static_cast<int>(days.size()));
    out.values.push_back(std::move(vals));
    out.missing.push_back(std::move(miss));
  }
  if (n_in_window == 0)
    throw InputError("no station records fall inside the requested season window");
  out.validate(ceiling_cm);
  return out;
}

}  // namespace swg
