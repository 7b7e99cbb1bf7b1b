#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "alearn/errors.hpp"

namespace alearn {

// Dense row-major matrix of doubles. Rows are examples throughout the
// library, so `row(i)` is the natural unit of access.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) {
    if (i >= rows) throw ShapeError("Matrix::row: index out of range");
    return {data.data() + i * cols, cols};
  }
  std::span<const double> row(std::size_t i) const {
    if (i >= rows) throw ShapeError("Matrix::row: index out of range");
    return {data.data() + i * cols, cols};
  }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

}  // namespace alearn
