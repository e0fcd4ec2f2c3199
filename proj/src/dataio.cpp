#include "softsensor/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "softsensor/csv.hpp"
#include "softsensor/error.hpp"
#include "softsensor/log.hpp"
#include "softsensor/numeric.hpp"

namespace softsensor::dataio {

ColumnMapping::ColumnMapping(std::vector<ColumnBinding> bindings) {
  for (auto& b : bindings) add(std::move(b));
}

ColumnMapping ColumnMapping::canonical(const std::vector<Variable>& vars) {
  ColumnMapping m;
  m.add({Variable::Timestamp, std::string(to_string(Variable::Timestamp)), ""});
  for (Variable v : vars) {
    if (v != Variable::Timestamp) m.add({v, std::string(to_string(v)), ""});
  }
  return m;
}

void ColumnMapping::add(ColumnBinding binding) {
  if (contains(binding.canonical)) {
    throw ConfigError("column mapping binds " +
                      std::string(to_string(binding.canonical)) + " twice");
  }
  bindings_.push_back(std::move(binding));
}

bool ColumnMapping::contains(Variable v) const {
  return std::any_of(bindings_.begin(), bindings_.end(),
                     [v](const ColumnBinding& b) { return b.canonical == v; });
}

const ColumnBinding& ColumnMapping::at(Variable v) const {
  for (const auto& b : bindings_) {
    if (b.canonical == v) return b;
  }
  throw ConfigError("column mapping has no entry for " + std::string(to_string(v)));
}

std::vector<Variable> ColumnMapping::variables() const {
  std::vector<Variable> out;
  for (const auto& b : bindings_) {
    if (b.canonical != Variable::Timestamp) out.push_back(b.canonical);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void ColumnMapping::validate(bool require_roles) const {
  if (bindings_.empty()) throw ConfigError("column mapping is empty");
  if (!contains(Variable::Timestamp)) {
    throw ConfigError("column mapping must bind Timestamp");
  }
  if (!require_roles) return;
  const auto vars = variables();
  if (std::none_of(vars.begin(), vars.end(), is_target)) {
    throw ConfigError("column mapping binds no target variable");
  }
  if (std::none_of(vars.begin(), vars.end(), is_surrogate)) {
    throw ConfigError("column mapping binds no surrogate variable");
  }
}

std::span<const double> Dataset::column(Variable v) const {
  auto it = columns.find(v);
  if (it == columns.end()) {
    throw DataError("dataset has no column " + std::string(to_string(v)));
  }
  return it->second;
}

std::vector<Variable> Dataset::variables() const {
  std::vector<Variable> out;
  for (const auto& [v, _] : columns) out.push_back(v);
  return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.timestamps.reserve(rows.size());
  for (auto r : rows) out.timestamps.push_back(timestamps[r]);
  for (const auto& [v, col] : columns) out.columns[v] = select(col, rows);
  return out;
}

Matrix Dataset::matrix(const std::vector<Variable>& vars) const {
  Matrix m(n_rows(), vars.size());
  for (std::size_t c = 0; c < vars.size(); ++c) {
    const auto src = column(vars[c]);
    std::copy(src.begin(), src.end(), m.column(c).begin());
  }
  return m;
}

bool is_missing_token(std::string_view cell) {
  return cell.empty() || cell == "NaN" || cell == "nan" || cell == "NA";
}

namespace {

double parse_cell(std::string_view cell) {
  if (is_missing_token(cell)) return std::nan("");
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nan("");
  return value;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text, const std::string& format) {
  std::tm tm{};
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  in >> std::get_time(&tm, format.c_str());
  if (in.fail()) {
    throw DataError("cannot parse timestamp '" + text + "' with format '" + format + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{tm.tm_year + 1900}, month{static_cast<unsigned>(tm.tm_mon + 1)},
                           day{static_cast<unsigned>(tm.tm_mday)}};
  if (!ymd.ok()) throw DataError("invalid calendar date in timestamp '" + text + "'");
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + tm.tm_hour * 3600 + tm.tm_min * 60 +
         tm.tm_sec;
}

std::string format_timestamp(std::int64_t epoch_seconds, const std::string& format) {
  using namespace std::chrono;
  const auto day_count = static_cast<int>(
      epoch_seconds >= 0 ? epoch_seconds / 86400 : (epoch_seconds - 86399) / 86400);
  const std::int64_t secs = epoch_seconds - static_cast<std::int64_t>(day_count) * 86400;
  const year_month_day ymd{sys_days{days{day_count}}};
  std::tm tm{};
  tm.tm_year = static_cast<int>(ymd.year()) - 1900;
  tm.tm_mon = static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
  tm.tm_mday = static_cast<int>(static_cast<unsigned>(ymd.day()));
  tm.tm_hour = static_cast<int>(secs / 3600);
  tm.tm_min = static_cast<int>((secs % 3600) / 60);
  tm.tm_sec = static_cast<int>(secs % 60);
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::put_time(&tm, format.c_str());
  return out.str();
}

Dataset load_timeseries(const std::filesystem::path& path, const ColumnMapping& mapping,
                        const LoadOptions& options) {
  mapping.validate(false);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + path.string() + "'");

  csv::Reader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) {
    throw DataError("data file '" + path.string() + "' is empty");
  }
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  struct Bound {
    Variable var;
    std::size_t index;
  };
  std::vector<Bound> bound;
  for (const auto& b : mapping.bindings()) {
    auto it = std::find(header.begin(), header.end(), b.source_header);
    if (it == header.end()) {
      throw DataError("mapped header '" + b.source_header + "' (" +
                      std::string(to_string(b.canonical)) + ") not found in '" +
                      path.string() + "'");
    }
    bound.push_back({b.canonical, static_cast<std::size_t>(it - header.begin())});
  }

  std::vector<std::int64_t> stamps;
  std::map<Variable, std::vector<double>> raw;
  std::vector<std::string> record;
  std::size_t line = 1;
  std::size_t bad_stamps = 0;
  while (reader.next(record)) {
    ++line;
    if (record.size() == 1 && record[0].empty()) continue;
    std::int64_t stamp = 0;
    bool ok = true;
    for (const auto& b : bound) {
      const std::string cell = b.index < record.size() ? record[b.index] : std::string();
      if (b.var == Variable::Timestamp) {
        try {
          stamp = parse_timestamp(cell, options.timestamp_format);
        } catch (const DataError&) {
          ok = false;
        }
      }
    }
    if (!ok) {
      ++bad_stamps;
      continue;
    }
    stamps.push_back(stamp);
    for (const auto& b : bound) {
      if (b.var == Variable::Timestamp) continue;
      const std::string cell = b.index < record.size() ? record[b.index] : std::string();
      raw[b.var].push_back(parse_cell(cell));
    }
  }
  if (bad_stamps) {
    log_warning(std::to_string(bad_stamps) + " record(s) with unparseable timestamps skipped in '" +
                path.string() + "'");
  }
  if (stamps.empty()) {
    throw DataError("zero parseable rows in '" + path.string() + "'");
  }

  std::vector<std::size_t> order(stamps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return stamps[a] < stamps[b]; });
  std::vector<std::size_t> keep;
  keep.reserve(order.size());
  for (auto r : order) {
    if (!keep.empty() && stamps[keep.back()] == stamps[r]) continue;
    keep.push_back(r);
  }
  if (keep.size() != order.size()) {
    log_warning(std::to_string(order.size() - keep.size()) +
                " duplicate timestamp(s) dropped (first occurrence kept) in '" +
                path.string() + "'");
  }

  Dataset d;
  d.timestamps = std::vector<std::int64_t>();
  d.timestamps.reserve(keep.size());
  for (auto r : keep) d.timestamps.push_back(stamps[r]);
  for (auto& [v, col] : raw) d.columns[v] = select(col, keep);
  for (Variable v : mapping.variables()) d.columns.try_emplace(v, keep.size(), std::nan(""));
  return d;
}

void write_csv(const Dataset& d, const std::filesystem::path& path,
               const std::string& timestamp_format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << to_string(Variable::Timestamp);
  for (const auto& [v, _] : d.columns) out << ',' << to_string(v);
  out << '\n';
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    out << format_timestamp(d.timestamps[r], timestamp_format);
    for (const auto& [v, col] : d.columns) {
      out << ',' << format_double(col[r]);
    }
    out << '\n';
  }
}

std::vector<std::size_t> complete_rows(const Dataset& d,
                                       const std::vector<Variable>& required) {
  std::vector<std::span<const double>> cols;
  for (Variable v : required) {
    if (v != Variable::Timestamp) cols.push_back(d.column(v));
  }
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    if (std::all_of(cols.begin(), cols.end(),
                    [r](std::span<const double> c) { return !std::isnan(c[r]); })) {
      rows.push_back(r);
    }
  }
  return rows;
}

Dataset drop_missing(const Dataset& d, const std::vector<Variable>& required) {
  const auto rows = complete_rows(d, required);
  return d.select_rows(rows);
}

SummaryStats summarize(const Dataset& d) {
  if (d.n_rows() < 2) {
    throw DataError("summary statistics need at least 2 rows (sd undefined)");
  }
  SummaryStats stats;
  for (const auto& [v, col] : d.columns) {
    std::vector<double> present;
    present.reserve(col.size());
    for (double x : col) {
      if (!std::isnan(x)) present.push_back(x);
    }
    if (present.size() < 2) {
      throw DataError("column " + std::string(to_string(v)) +
                      " has fewer than 2 values (sd undefined)");
    }
    ColumnStats s;
    s.n = present.size();
    s.mean = mean(present);
    s.sd = standard_deviation(present, 1);
    const auto [lo, hi] = std::minmax_element(present.begin(), present.end());
    s.min = *lo;
    s.max = *hi;
    // Rounding in the mean can nudge it just outside the hull.
    s.mean = std::clamp(s.mean, s.min, s.max);
    stats[v] = s;
  }
  return stats;
}

}  // namespace softsensor::dataio
