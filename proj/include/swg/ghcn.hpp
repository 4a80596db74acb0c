#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "swg/calendar.hpp"
#include "swg/series.hpp"

namespace swg {

// One station-day of raw PRCP data, in the native unit (tenths of mm).
struct RawRecord {
  Date date;
  std::optional<int> prcp_tenths_mm;  // absent = candidate missing value
  char mflag = ' ';
  char qflag = ' ';
};

enum class StationFormat { dly_fixed_width, csv };
StationFormat station_format_from_name(const std::string& name);

// GHCN-Daily .dly fixed-width reader (element PRCP only; other elements are
// skipped). Malformed lines raise ParseError with the line number.
std::vector<RawRecord> parse_dly(std::istream& in, const std::string& station_filter = "");

// Simple CSV: date,prcp_tenths_mm,mflag,qflag with an optional header row.
std::vector<RawRecord> parse_csv(std::istream& in);

std::vector<RawRecord> parse_station(std::istream& in, StationFormat format,
                                     const std::string& station_filter = "");
std::vector<RawRecord> parse_station_file(const std::string& path, StationFormat format,
                                          const std::string& station_filter = "");

// Quality-flagged values are removed; trace-flagged values become observed
// zeros. The quality filter wins when both flags are present.
std::vector<RawRecord> apply_quality_filter(std::vector<RawRecord> records);

// Bucket filtered records into a season panel over [year_range.first,
// year_range.second], converting tenths of mm to cm. Days without a valid
// record are missing.
DailySeries seasonize(const std::vector<RawRecord>& records, Season season,
                      std::pair<int, int> year_range, const std::string& station_id = "",
                      double ceiling_cm = 200.0);

}  // namespace swg
