// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "acorl/tensor.hpp"

namespace acorl {

enum class Op {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kLog,
  kRelu,
  kScale,
  kBroadcastAddRow,
  kMatMul,
  kTranspose,
  kSoftmaxRows,
  kLogSoftmaxRows,
  kL2NormalizeRows,
  kKlDivRows,
  kGradReverse,
  kSumAll,
  kSqrt,
  kClamp,
};

// One recorded primitive application. Parents precede children by
// construction, so node ids are already a topological order. Inputs are
// saved by value so backward never depends on caller-owned buffers.
struct TapeNode {
  Op op;
  int a = -1;
  int b = -1;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> saved_a;
  std::vector<double> saved_b;
  std::vector<std::size_t> shape_a;
  std::vector<std::size_t> shape_b;
  double attr0 = 0.0;  // scale factor / GRL lambda / clamp lo
  double attr1 = 0.0;  // clamp hi
};

// Result of a backward pass. Owns its buffers; running backward twice on
// the same tape yields two independent, identical results.
struct Gradients {
  // Parameter node id -> dLoss/dtheta, zero tensors for untouched params.
  std::map<int, Tensor> params;

  // Gradient w.r.t. any tracked tensor from the same tape.
  Tensor wrt(const Tensor& t) const;

  std::vector<std::vector<double>> by_node;
  std::vector<std::vector<std::size_t>> node_shapes;
};

// Append-only record of primitive operations for one forward pass.
// Build, run backward, discard. Single-threaded by design: a tape and its
// tracked tensors belong to one thread of execution.
class Tape {
 public:
  // Track a constant as a differentiable leaf / trainable parameter.
  Tensor leaf(const Tensor& t);
  Tensor param(const Tensor& t);

  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor div(const Tensor& a, const Tensor& b);
  Tensor neg(const Tensor& a);
  Tensor exp(const Tensor& a);
  Tensor log(const Tensor& a);
  Tensor relu(const Tensor& a);
  Tensor scale(const Tensor& a, double c);
  Tensor broadcast_add_row(const Tensor& a, const Tensor& b);

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& a);
  Tensor softmax_rows(const Tensor& a);
  Tensor log_softmax_rows(const Tensor& a);
  Tensor l2_normalize_rows(const Tensor& a);
  // Mean over rows of sum_i p_i * log(p_i / max(q_i, 1e-12)), 0*log 0 = 0.
  Tensor kl_div_rows(const Tensor& p, const Tensor& q);
  // Identity forward; backward multiplies the upstream gradient by -lambda.
  Tensor grad_reverse(const Tensor& a, double lambda);
  Tensor sum(const Tensor& a);
  Tensor sqrt(const Tensor& a);
  // Gradient passes only strictly inside (lo, hi).
  Tensor clamp(const Tensor& a, double lo, double hi);

  Gradients backward(const Tensor& loss) const;

  std::size_t size() const { return nodes_.size(); }
  const std::vector<int>& param_nodes() const { return params_; }

 private:
  Tensor unary(Op op, const Tensor& a, std::vector<double> value, double attr0 = 0.0,
               double attr1 = 0.0);
  Tensor binary(Op op, const Tensor& a, const Tensor& b, std::vector<std::size_t> shape,
                std::vector<double> value);

  std::vector<TapeNode> nodes_;
  std::vector<int> params_;
};

// Elementwise / shape-manipulating primitive dispatch by name. `attr` is
// the factor for kScale; `b` is required for the binary kinds.
enum class PrimKind { kAdd, kSub, kMul, kDiv, kNeg, kExp, kLog, kRelu, kScale, kBroadcastAddRow };
Tensor apply_primitive(Tape& tape, PrimKind kind, const Tensor& a, const Tensor* b = nullptr,
                       double attr = 0.0);

// Central-difference gradient check: builds f on a fresh tape with x as a
// tracked leaf, compares backward() against (f(x+eps e_i) - f(x-eps e_i)) /
// (2 eps) per coordinate, and returns the max relative error with
// denominator max(|analytic|, |numeric|, 1e-12).
double finite_difference_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                               const Tensor& x, double eps);

}  // namespace acorl
