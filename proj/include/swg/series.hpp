#pragma once

#include <string>
#include <vector>

#include "swg/calendar.hpp"

namespace swg {

// One station-season panel: per season-year arrays of daily precipitation
// in cm with a parallel missingness mask. Masked entries carry no value
// (they are stored as 0 and must never be read through the mask).
struct DailySeries {
  std::string station_id;
  Season season = Season::DJF;
  std::vector<int> years;                       // consecutive season labels
  std::vector<std::vector<double>> values;      // [year][day], cm
  std::vector<std::vector<bool>> missing;       // parallel mask
  std::vector<int> season_day_count;            // actual calendar day counts

  int n_years() const { return static_cast<int>(years.size()); }
  int max_days() const;
  int year_index(int label) const;              // -1 if absent

  // Fraction of days missing, over the whole panel or one year.
  double missing_fraction() const;
  double missing_fraction(int t) const;
  bool year_complete(int t) const;

  // Largest observed daily value, in cm; 0 when nothing is observed.
  double max_observed() const;

  void validate(double ceiling_cm) const;
};

// Structured-text (JSON) persistence; schema documented in the README.
std::string series_to_json(const DailySeries& s);
DailySeries series_from_json(const std::string& text);
void save_series(const DailySeries& s, const std::string& path);
DailySeries load_series(const std::string& path);

}  // namespace swg
