#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace synkb {

// Dense row-major matrix of doubles. Rows are the unit of access everywhere
// in this codebase (one row per term / tree node / label).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) { resize(r, c); }

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, 0.0);
  }

  bool empty() const { return data.empty(); }

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  std::span<double> row_span(std::size_t r) { return {row(r), cols}; }
  std::span<const double> row_span(std::size_t r) const {
    return {row(r), cols};
  }
};

}  // namespace synkb
