// SPDX-License-Identifier: Apache-2.0
#include "acorl/tensor.hpp"

#include <sstream>

#include "acorl/errors.hpp"

namespace acorl {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

bool same_shape(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return a == b;
}

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
  if (shape.empty() || shape.size() > 2) {
    throw ContractError("Tensor: rank must be 1 or 2, got shape " + shape_str(shape));
  }
  for (std::size_t d : shape) {
    if (d == 0) throw ContractError("Tensor: zero dimension in shape " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw ContractError("Tensor: shape " + shape_str(shape) + " does not match data length " +
                        std::to_string(data.size()));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::row(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t r, std::size_t c, std::vector<double> v) {
  return Tensor({r, c}, std::move(v));
}

std::size_t Tensor::rows() const { return shape.size() == 2 ? shape[0] : 1; }

std::size_t Tensor::cols() const { return shape.size() == 2 ? shape[1] : shape[0]; }

double Tensor::item() const {
  if (data.size() != 1) {
    throw ContractError("Tensor::item: expected one element, got shape " + shape_str(shape));
  }
  return data[0];
}

}  // namespace acorl
