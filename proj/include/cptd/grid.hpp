#pragma once

#include <cstddef>
#include <vector>

namespace cptd {

/// Dense row-major matrix of doubles. Series are rows, steps are columns.
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool same_shape(const Grid& other) const { return rows == other.rows && cols == other.cols; }
};

}  // namespace cptd
