#include "ouheat/station_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ouheat/errors.hpp"

namespace ouheat {

namespace fs = std::filesystem;
using namespace std::chrono;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& value) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void row_error(const fs::path& path, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << path.string() << ":" << line << ": " << what;
  throw DataError(msg.str());
}

Quality worse(Quality a, Quality b) {
  return static_cast<std::uint8_t>(a) > static_cast<std::uint8_t>(b) ? a : b;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

struct EcaSeries {
  std::string station_id;
  std::string variable;
  std::vector<Date> dates;
  std::vector<double> values;
  std::vector<Quality> quality;
};

EcaSeries read_eca_file(const fs::path& path) {
  auto in = open_input(path);
  EcaSeries series;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    auto cells = split_csv(line);
    if (cells.size() >= 4 && cells[0] == "STAID" && std::find(cells.begin(), cells.end(), "DATE") != cells.end()) {
      header = std::move(cells);
      break;
    }
  }
  if (header.empty()) throw DataError(path.string() + ": no 'STAID, ..., DATE' header line found");

  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t date_col = *column("DATE");
  const auto staid_col = column("STAID");
  std::optional<std::size_t> value_col;
  std::optional<std::size_t> flag_col;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "TX" || header[k] == "TN") {
      series.variable = header[k];
      value_col = k;
      flag_col = column("Q_" + header[k]);
    }
  }
  if (!value_col) throw DataError(path.string() + ": header has neither a TX nor a TN column");

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      row_error(path, line_no, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    Date date;
    try {
      date = parse_date(cells[date_col]);
    } catch (const Error& e) {
      row_error(path, line_no, e.what());
    }
    if (!series.dates.empty() && sys_days{date} <= sys_days{series.dates.back()})
      row_error(path, line_no, "dates are not strictly increasing");
    long raw = 0;
    if (!parse_number(cells[*value_col], raw)) row_error(path, line_no, "bad value '" + cells[*value_col] + "'");
    Quality q = Quality::Valid;
    if (flag_col) {
      int flag = 0;
      if (!parse_number(cells[*flag_col], flag) || (flag != 0 && flag != 1 && flag != 9))
        row_error(path, line_no, "bad quality flag '" + cells[*flag_col] + "'");
      q = static_cast<Quality>(flag);
    }
    double value = static_cast<double>(raw) / 10.0;
    if (raw == -9999) {
      value = kNaN;
      q = Quality::Missing;
    } else if (q == Quality::Missing) {
      value = kNaN;
    }
    if (series.station_id.empty() && staid_col) series.station_id = cells[*staid_col];
    series.dates.push_back(date);
    series.values.push_back(value);
    series.quality.push_back(q);
  }
  if (series.dates.empty()) throw DataError(path.string() + ": no data rows");
  return series;
}

fs::path default_tn_path(const fs::path& tx) {
  std::string name = tx.filename().string();
  const auto pos = name.find("TX");
  if (pos == std::string::npos) throw ConfigError("cannot derive the TN file name from " + tx.string() + "; set it explicitly");
  name.replace(pos, 2, "TN");
  return tx.parent_path() / name;
}

StationDataset ingest_eca(const fs::path& tx_path, const std::optional<fs::path>& tn_path) {
  const EcaSeries tx = read_eca_file(tx_path);
  if (tx.variable != "TX") throw ConfigError(tx_path.string() + " is not a TX (daily maximum) file");
  const fs::path tn_file = tn_path ? *tn_path : default_tn_path(tx_path);
  const EcaSeries tn = read_eca_file(tn_file);
  if (tn.variable != "TN") throw ConfigError(tn_file.string() + " is not a TN (daily minimum) file");

  // Outer join on dates; a day present in only one file is missing.
  StationDataset ds;
  ds.station_id = tx.station_id;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < tx.dates.size() || j < tn.dates.size()) {
    const bool take_tx = j >= tn.dates.size() || (i < tx.dates.size() && sys_days{tx.dates[i]} <= sys_days{tn.dates[j]});
    const bool take_tn = i >= tx.dates.size() || (j < tn.dates.size() && sys_days{tn.dates[j]} <= sys_days{tx.dates[i]});
    const Date d = take_tx ? tx.dates[i] : tn.dates[j];
    double hi = kNaN;
    double lo = kNaN;
    Quality q = Quality::Valid;
    if (take_tx) {
      hi = tx.values[i];
      q = worse(q, tx.quality[i++]);
    } else {
      q = Quality::Missing;
    }
    if (take_tn) {
      lo = tn.values[j];
      q = worse(q, tn.quality[j++]);
    } else {
      q = Quality::Missing;
    }
    if (q == Quality::Valid && lo > hi) q = Quality::Suspect;
    ds.dates.push_back(d);
    ds.tmax.push_back(hi);
    ds.tmin.push_back(lo);
    ds.quality.push_back(q);
  }
  return ds;
}

StationDataset ingest_csv(const fs::path& path) {
  auto in = open_input(path);
  StationDataset ds;
  ds.station_id = path.stem().string();
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  ++line_no;
  const auto header = split_csv(line);
  const bool has_quality = header.size() == 4 && header[3] == "quality";
  if (header.size() < 3 || header[0] != "date" || header[1] != "tmax" || header[2] != "tmin" ||
      (header.size() == 4 && !has_quality) || header.size() > 4)
    row_error(path, line_no, "header must be 'date,tmax,tmin' (optionally ',quality')");

  auto value = [&](const std::string& cell, bool& missing) {
    if (cell.empty() || cell == "NA" || cell == "nan" || cell == "NaN") {
      missing = true;
      return kNaN;
    }
    double v = 0.0;
    if (!parse_number(cell, v)) row_error(path, line_no, "bad temperature '" + cell + "'");
    return v;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      row_error(path, line_no, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    Date date;
    try {
      date = parse_date(cells[0]);
    } catch (const Error& e) {
      row_error(path, line_no, e.what());
    }
    if (!ds.dates.empty() && sys_days{date} <= sys_days{ds.dates.back()})
      row_error(path, line_no, "dates are not strictly increasing");
    bool missing = false;
    const double hi = value(cells[1], missing);
    const double lo = value(cells[2], missing);
    Quality q = missing ? Quality::Missing : Quality::Valid;
    if (has_quality) {
      int flag = 0;
      if (!parse_number(cells[3], flag) || (flag != 0 && flag != 1 && flag != 9))
        row_error(path, line_no, "bad quality flag '" + cells[3] + "'");
      q = worse(q, static_cast<Quality>(flag));
    } else if (q == Quality::Valid && lo > hi) {
      q = Quality::Suspect;
    }
    ds.dates.push_back(date);
    ds.tmax.push_back(hi);
    ds.tmin.push_back(lo);
    ds.quality.push_back(q);
  }
  return ds;
}

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Date parse_date(const std::string& text) {
  const std::string s = trim(text);
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  bool ok = false;
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    ok = parse_number(s.substr(0, 4), y) && parse_number(s.substr(5, 2), m) && parse_number(s.substr(8, 2), d);
  } else if (s.size() == 8) {
    ok = parse_number(s.substr(0, 4), y) && parse_number(s.substr(4, 2), m) && parse_number(s.substr(6, 2), d);
  }
  const Date date{year{y}, month{m}, day{d}};
  if (!ok || !date.ok()) throw DataError("bad date '" + s + "'");
  return date;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

std::optional<std::size_t> StationDataset::find(const Date& d) const {
  const auto it = std::lower_bound(dates.begin(), dates.end(), d,
                                   [](const Date& a, const Date& b) { return sys_days{a} < sys_days{b}; });
  if (it == dates.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - dates.begin());
}

void StationDataset::validate() const {
  if (dates.empty()) throw DataError("station dataset is empty");
  if (tmax.size() != dates.size() || tmin.size() != dates.size() || quality.size() != dates.size())
    throw DataError("station dataset arrays are not aligned");
  for (std::size_t i = 1; i < dates.size(); ++i)
    if (sys_days{dates[i]} <= sys_days{dates[i - 1]}) throw DataError("station dates are not strictly increasing");
}

bool StationDataset::operator==(const StationDataset& other) const {
  auto same = [](const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); });
  };
  return station_id == other.station_id && dates == other.dates && quality == other.quality && same(tmax, other.tmax) &&
         same(tmin, other.tmin);
}

StationFormat parse_station_format(const std::string& name) {
  if (name == "eca_blend") return StationFormat::EcaBlend;
  if (name == "csv_simple") return StationFormat::CsvSimple;
  throw ConfigError("unknown station format '" + name + "' (expected eca_blend or csv_simple)");
}

StationDataset ingest(const fs::path& path, StationFormat format, const std::optional<fs::path>& tn_path) {
  StationDataset ds = format == StationFormat::EcaBlend ? ingest_eca(path, tn_path) : ingest_csv(path);
  if (ds.dates.empty()) throw DataError(path.string() + ": no data rows");
  ds.validate();
  return ds;
}

void write_csv_simple(const StationDataset& ds, const fs::path& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "date,tmax,tmin,quality\n";
  for (std::size_t i = 0; i < ds.size(); ++i)
    out << format_date(ds.dates[i]) << ',' << format_number(ds.tmax[i]) << ',' << format_number(ds.tmin[i]) << ','
        << static_cast<int>(ds.quality[i]) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

StationDataset synthetic_station(const OUParams& params, int first_year, int last_year, std::uint64_t seed, double dt,
                                 const std::string& station_id) {
  if (last_year < first_year) throw ConfigError("synthetic station: last year precedes first year");
  const sys_days first{year{first_year} / January / 1};
  const sys_days last{year{last_year} / December / 31};
  SimConfig cfg;
  cfg.dt = dt;
  cfg.horizon_days = static_cast<int>((last - first).count()) + 1;
  cfg.seed = seed;
  const DailyExtrema d = simulate_daily_extrema(params, cfg);
  StationDataset ds;
  ds.station_id = station_id;
  for (int i = 0; i < cfg.horizon_days; ++i) {
    ds.dates.emplace_back(first + days{i});
    ds.tmax.push_back(std::round(d.sup[i] * 10.0) / 10.0);
    ds.tmin.push_back(std::round((*d.inf)[i] * 10.0) / 10.0);
    ds.quality.push_back(Quality::Valid);
  }
  return ds;
}

void write_eca_pair(const StationDataset& ds, const fs::path& tx_path, const fs::path& tn_path) {
  ds.validate();
  auto write = [&](const fs::path& path, const char* var, const std::vector<double>& values) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "EUROPEAN CLIMATE ASSESSMENT & DATASET (ECA&D) style blended series\n"
        << "FILE FORMAT (MISSING VALUE CODE IS -9999):\n\n"
        << "01-06 STAID: Station identifier\n"
        << "08-13 SOUID: Source identifier\n"
        << "15-22 DATE : Date YYYYMMDD\n"
        << "24-28 " << var << "   : temperature in 0.1 &#176;C\n"
        << "30-34 Q_" << var << " : quality code for " << var << " (0='valid'; 1='suspect'; 9='missing')\n\n"
        << "STAID, SOUID,    DATE,   " << var << ", Q_" << var << "\n";
    char line[64];
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const bool missing = std::isnan(values[i]) || ds.quality[i] == Quality::Missing;
      const long tenths = missing ? -9999 : std::lround(values[i] * 10.0);
      const int flag = missing ? 9 : static_cast<int>(ds.quality[i]);
      std::snprintf(line, sizeof line, "%6s,%6d,%04d%02u%02u,%5ld,%5d\n", ds.station_id.substr(0, 6).c_str(), 1,
                    static_cast<int>(ds.dates[i].year()), static_cast<unsigned>(ds.dates[i].month()),
                    static_cast<unsigned>(ds.dates[i].day()), tenths, flag);
      out << line;
    }
    if (!out) throw DataError("failed writing " + path.string());
  };
  write(tx_path, "TX", ds.tmax);
  write(tn_path, "TN", ds.tmin);
}

std::vector<Date> SeasonWindow::dates(int y) const {
  const sys_days first{year{y} / month{start.month} / day{start.day}};
  const sys_days last{year{y} / month{end.month} / day{end.day}};
  std::vector<Date> out;
  for (sys_days d = first; d <= last; d += days{1}) out.emplace_back(d);
  return out;
}

void SeasonWindow::validate() const {
  // Checked against a leap year so Feb-29 is accepted.
  const Date a{year{2000}, month{start.month}, day{start.day}};
  const Date b{year{2000}, month{end.month}, day{end.day}};
  if (!a.ok() || !b.ok()) throw ConfigError("season window has an invalid month-day");
  if (sys_days{b} < sys_days{a}) throw ConfigError("season window is empty (end before start)");
}

int SeasonSample::dropped_total() const {
  int total = 0;
  for (const auto& d : drops) total += d.dropped;
  return total;
}

SeasonSample build_season_sample(const StationDataset& ds, const SeasonWindow& window, const std::vector<int>& years) {
  window.validate();
  if (years.empty()) throw ConfigError("no years selected for the sample");
  SeasonSample sample;
  sample.data.segment_starts.clear();
  std::vector<double> inf;
  for (int y : years) {
    SeasonDrops drops{y, 0, 0};
    bool any_record = false;
    bool run_open = false;
    for (const Date& d : window.dates(y)) {
      ++drops.expected;
      const auto idx = ds.find(d);
      any_record = any_record || idx.has_value();
      if (!idx || !ds.valid(*idx)) {
        ++drops.dropped;
        run_open = false;
        continue;
      }
      if (!run_open) sample.data.segment_starts.push_back(sample.data.sup.size());
      run_open = true;
      sample.data.sup.push_back(ds.tmax[*idx]);
      inf.push_back(ds.tmin[*idx]);
      sample.dates.push_back(d);
    }
    if (!any_record) throw DataError("year " + std::to_string(y) + " has no records in station " + ds.station_id);
    if (10 * drops.dropped > drops.expected) {
      std::ostringstream msg;
      msg << "season " << y << ": " << drops.dropped << " of " << drops.expected << " days invalid or missing";
      sample.warnings.push_back(msg.str());
    }
    sample.drops.push_back(drops);
  }
  if (sample.data.sup.empty()) throw DataError("no valid days in the selected seasons");
  sample.data.inf = std::move(inf);
  sample.data.validate();
  return sample;
}

}  // namespace ouheat
