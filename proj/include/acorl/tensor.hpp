// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace acorl {

// Row-major array of 64-bit floats, rank 1 or 2. A tensor with node >= 0
// is tracked on exactly one Tape; node == -1 means constant data.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  int node = -1;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);
  static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> v);

  std::size_t size() const { return data.size(); }
  bool tracked() const { return node >= 0; }

  // Rank-2 accessors; rank-1 tensors count as a single row.
  std::size_t rows() const;
  std::size_t cols() const;
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }

  // Value of a one-element tensor; contract violation otherwise.
  double item() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);
bool same_shape(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

}  // namespace acorl
