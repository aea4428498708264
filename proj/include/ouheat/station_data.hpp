#pragma once

/// Station records (ECA&D blended TX/TN files or a plain CSV) and the
/// seasonal train/test samples cut from them.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ouheat/ou_process.hpp"

namespace ouheat {

using Date = std::chrono::year_month_day;

/// "YYYY-MM-DD" (also accepts "YYYYMMDD").
Date parse_date(const std::string& text);
std::string format_date(const Date& d);

enum class Quality : std::uint8_t { Valid = 0, Suspect = 1, Missing = 9 };

struct StationDataset {
  std::string station_id;
  std::vector<Date> dates;  ///< strictly increasing
  std::vector<double> tmax;  ///< degC, NaN when missing
  std::vector<double> tmin;  ///< degC, NaN when missing
  std::vector<Quality> quality;

  std::size_t size() const { return dates.size(); }
  bool valid(std::size_t i) const { return quality[i] == Quality::Valid; }
  /// Index of `d`, if recorded.
  std::optional<std::size_t> find(const Date& d) const;
  void validate() const;
  bool operator==(const StationDataset& other) const;
};

enum class StationFormat { EcaBlend, CsvSimple };

StationFormat parse_station_format(const std::string& name);

/// Reads a station file. For EcaBlend `path` is the TX file; the TN file is
/// `tn_path` or, if absent, the same name with the "TX" prefix replaced by
/// "TN". Malformed rows raise DataError with the line number.
StationDataset ingest(const std::filesystem::path& path, StationFormat format,
                      const std::optional<std::filesystem::path>& tn_path = std::nullopt);

/// csv_simple writer: date,tmax,tmin,quality with missing values left empty.
void write_csv_simple(const StationDataset& ds, const std::filesystem::path& path);

/// Station record simulated from the OU model: one stationary path over
/// Jan-1 of `first_year` to Dec-31 of `last_year`, daily max/min rounded to
/// 0.1 degC as in ECA&D files. All days valid.
StationDataset synthetic_station(const OUParams& params, int first_year, int last_year, std::uint64_t seed,
                                 double dt = 1e-3, const std::string& station_id = "SYNTHETIC");

/// Writes `ds` as an ECA&D blended TX/TN file pair (tenths of degC, -9999
/// for missing values, quality flags).
void write_eca_pair(const StationDataset& ds, const std::filesystem::path& tx_path,
                    const std::filesystem::path& tn_path);

struct MonthDay {
  unsigned month = 6;
  unsigned day = 15;
};

struct SeasonWindow {
  MonthDay start{6, 15};
  MonthDay end{8, 14};
  /// Dates of the window in `year`, both ends included.
  std::vector<Date> dates(int year) const;
  void validate() const;
};

struct SeasonDrops {
  int year = 0;
  int expected = 0;
  int dropped = 0;
};

struct SeasonSample {
  DailyExtrema data;  ///< sup = tmax, inf = tmin, one segment per unbroken run
  std::vector<Date> dates;
  std::vector<SeasonDrops> drops;
  std::vector<std::string> warnings;
  int dropped_total() const;
};

/// Pools the season windows of `years` into one sample. Invalid or missing
/// days are dropped and start a new segment, as does each new year. More
/// than 10% dropped in a season gives a warning; no valid day at all is a
/// DataError.
SeasonSample build_season_sample(const StationDataset& ds, const SeasonWindow& window, const std::vector<int>& years);

}  // namespace ouheat
