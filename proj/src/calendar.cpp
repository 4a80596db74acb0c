#include "swg/calendar.hpp"

#include "swg/errors.hpp"

namespace swg {

std::string season_name(Season s) {
  switch (s) {
    case Season::DJF: return "DJF";
    case Season::MAM: return "MAM";
    case Season::JJA: return "JJA";
    case Season::SON: return "SON";
    case Season::WET_NOV_APR: return "WET_NOV_APR";
  }
  return "?";
}

Season season_from_name(const std::string& name) {
  if (name == "DJF") return Season::DJF;
  if (name == "MAM") return Season::MAM;
  if (name == "JJA") return Season::JJA;
  if (name == "SON") return Season::SON;
  if (name == "WET_NOV_APR" || name == "NOV_APR" || name == "WET") return Season::WET_NOV_APR;
  throw ConfigError("unknown season: " + name);
}

bool is_leap_year(int year) {
  return (year % 4 == 0 && year % 100 != 0) || (year % 400 == 0);
}

int days_in_month(int year, int month) {
  static const int lens[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) return 0;
  if (month == 2 && is_leap_year(year)) return 29;
  return lens[month - 1];
}

bool valid_date(const Date& d) {
  return d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= days_in_month(d.year, d.month);
}

namespace {

// (year offset relative to label, month) pairs in window order
std::vector<std::pair<int, int>> season_months(Season season) {
  switch (season) {
    case Season::DJF: return {{-1, 12}, {0, 1}, {0, 2}};
    case Season::MAM: return {{0, 3}, {0, 4}, {0, 5}};
    case Season::JJA: return {{0, 6}, {0, 7}, {0, 8}};
    case Season::SON: return {{0, 9}, {0, 10}, {0, 11}};
    case Season::WET_NOV_APR:
      return {{-1, 11}, {-1, 12}, {0, 1}, {0, 2}, {0, 3}, {0, 4}};
  }
  return {};
}

}  // namespace

std::vector<Date> season_days(Season season, int label) {
  std::vector<Date> out;
  for (auto [off, month] : season_months(season)) {
    int y = label + off;
    int n = days_in_month(y, month);
    for (int d = 1; d <= n; ++d) out.push_back({y, month, d});
  }
  return out;
}

int season_length(Season season, int label) {
  int n = 0;
  for (auto [off, month] : season_months(season)) n += days_in_month(label + off, month);
  return n;
}

int season_label_for_date(Season season, const Date& d) {
  for (auto [off, month] : season_months(season)) {
    if (month == d.month) return d.year - off;
  }
  return 0;
}

}  // namespace swg
