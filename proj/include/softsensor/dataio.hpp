#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "softsensor/matrix.hpp"
#include "softsensor/variables.hpp"

namespace softsensor::dataio {

struct ColumnBinding {
  Variable canonical;
  std::string source_header;
  std::string unit;
};

// Maps canonical variables onto the headers of a source CSV.
class ColumnMapping {
 public:
  ColumnMapping() = default;
  explicit ColumnMapping(std::vector<ColumnBinding> bindings);

  // Identity mapping: every header is the canonical name.
  static ColumnMapping canonical(const std::vector<Variable>& vars);

  void add(ColumnBinding binding);
  const std::vector<ColumnBinding>& bindings() const noexcept { return bindings_; }
  bool contains(Variable v) const;
  const ColumnBinding& at(Variable v) const;
  std::vector<Variable> variables() const;  // excludes Timestamp, canonical order

  // Timestamp present and no variable bound twice. With require_roles,
  // also at least one target and one surrogate.
  void validate(bool require_roles = true) const;

 private:
  std::vector<ColumnBinding> bindings_;
};

struct LoadOptions {
  std::string timestamp_format = "%Y-%m-%dT%H:%M:%S";
};

// Time-indexed table. Missing values are NaN.
struct Dataset {
  std::vector<std::int64_t> timestamps;  // seconds since the Unix epoch, UTC
  std::map<Variable, std::vector<double>> columns;

  std::size_t n_rows() const noexcept { return timestamps.size(); }
  bool has(Variable v) const { return columns.count(v) != 0; }
  std::span<const double> column(Variable v) const;
  std::vector<Variable> variables() const;

  Dataset select_rows(std::span<const std::size_t> rows) const;
  // Columns in the given order; throws DataError if one is absent.
  Matrix matrix(const std::vector<Variable>& vars) const;
};

struct ColumnStats {
  double mean = 0.0;
  double sd = 0.0;  // sample sd (n - 1)
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

using SummaryStats = std::map<Variable, ColumnStats>;

// Missing markers: empty cell, NaN, nan, NA.
bool is_missing_token(std::string_view cell);

std::int64_t parse_timestamp(const std::string& text, const std::string& format);
std::string format_timestamp(std::int64_t epoch_seconds, const std::string& format);

// Sorted by timestamp; duplicate timestamps keep the first record in file
// order (logged). Unparseable numeric cells become NaN.
Dataset load_timeseries(const std::filesystem::path& path,
                        const ColumnMapping& mapping,
                        const LoadOptions& options = {});

// Canonical names as headers; values at full round-trip precision.
void write_csv(const Dataset& d, const std::filesystem::path& path,
               const std::string& timestamp_format = LoadOptions{}.timestamp_format);

// Keeps rows in which every required column holds a value.
Dataset drop_missing(const Dataset& d, const std::vector<Variable>& required);
std::vector<std::size_t> complete_rows(const Dataset& d,
                                       const std::vector<Variable>& required);

SummaryStats summarize(const Dataset& d);

}  // namespace softsensor::dataio
