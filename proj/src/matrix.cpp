#include "softsensor/matrix.hpp"

#include <algorithm>
#include <stdexcept>

namespace softsensor {

Matrix Matrix::from_columns(const std::vector<std::vector<double>>& columns) {
  if (columns.empty()) return {};
  Matrix m(columns.front().size(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != m.rows_) {
      throw std::invalid_argument("Matrix::from_columns: ragged columns");
    }
    std::copy(columns[c].begin(), columns[c].end(), m.column(c).begin());
  }
  return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t c = 0; c < cols_; ++c) {
    const auto src = column(c);
    auto dst = out.column(c);
    for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
  }
  return out;
}

Matrix Matrix::select_cols(std::span<const std::size_t> cols) const {
  Matrix out(rows_, cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto src = column(cols[c]);
    std::copy(src.begin(), src.end(), out.column(c).begin());
  }
  return out;
}

std::vector<double> select(std::span<const double> values,
                           std::span<const std::size_t> indices) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(values[i]);
  return out;
}

}  // namespace softsensor
