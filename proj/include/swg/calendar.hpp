#pragma once

#include <string>
#include <vector>

namespace swg {

enum class Season { DJF, MAM, JJA, SON, WET_NOV_APR };

std::string season_name(Season s);
Season season_from_name(const std::string& name);

struct Date {
  int year = 0;
  int month = 0;  // 1..12
  int day = 0;    // 1..31

  auto operator<=>(const Date&) const = default;
};

bool is_leap_year(int year);
int days_in_month(int year, int month);
bool valid_date(const Date& d);

// Calendar days of season-year `label`, in order. DJF of label year t runs
// Dec 1 of t-1 through the end of Feb of t; WET_NOV_APR runs Nov 1 of t-1
// through Apr 30 of t and is labeled by the April year.
std::vector<Date> season_days(Season season, int label);

// Day count for a season-year label (90/91 DJF, 92 MAM/JJA, 91 SON,
// 181/182 Nov-Apr).
int season_length(Season season, int label);

// Season-year label for a calendar date, or 0 when the date is outside the
// season's months.
int season_label_for_date(Season season, const Date& d);

}  // namespace swg
