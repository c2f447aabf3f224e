// SPDX-License-Identifier: Apache-2.0
#include "acorl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acorl/errors.hpp"

namespace acorl {

namespace {

constexpr double kKlClamp = 1e-12;
constexpr double kRowSumTol = 1e-9;

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!same_shape(a.shape, b.shape)) {
    throw ContractError(std::string(what) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                        shape_str(b.shape));
  }
}

}  // namespace

Tensor Gradients::wrt(const Tensor& t) const {
  if (!t.tracked() || static_cast<std::size_t>(t.node) >= by_node.size()) {
    throw ContractError("Gradients::wrt: tensor is not tracked on this tape");
  }
  return Tensor(node_shapes[t.node], by_node[t.node]);
}

Tensor Tape::leaf(const Tensor& t) {
  TapeNode n;
  n.op = Op::kLeaf;
  n.shape = t.shape;
  n.value = t.data;
  nodes_.push_back(std::move(n));
  Tensor out = t;
  out.node = static_cast<int>(nodes_.size()) - 1;
  return out;
}

Tensor Tape::param(const Tensor& t) {
  Tensor out = leaf(t);
  params_.push_back(out.node);
  return out;
}

Tensor Tape::unary(Op op, const Tensor& a, std::vector<double> value, double attr0, double attr1) {
  Tensor out(a.shape, std::move(value));
  if (a.tracked()) {
    TapeNode n;
    n.op = op;
    n.a = a.node;
    n.shape = out.shape;
    n.value = out.data;
    n.saved_a = a.data;
    n.shape_a = a.shape;
    n.attr0 = attr0;
    n.attr1 = attr1;
    nodes_.push_back(std::move(n));
    out.node = static_cast<int>(nodes_.size()) - 1;
  }
  return out;
}

Tensor Tape::binary(Op op, const Tensor& a, const Tensor& b, std::vector<std::size_t> shape,
                    std::vector<double> value) {
  Tensor out(std::move(shape), std::move(value));
  if (a.tracked() || b.tracked()) {
    TapeNode n;
    n.op = op;
    n.a = a.node;
    n.b = b.node;
    n.shape = out.shape;
    n.value = out.data;
    n.saved_a = a.data;
    n.saved_b = b.data;
    n.shape_a = a.shape;
    n.shape_b = b.shape;
    nodes_.push_back(std::move(n));
    out.node = static_cast<int>(nodes_.size()) - 1;
  }
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data[i] + b.data[i];
  return binary(Op::kAdd, a, b, a.shape, std::move(v));
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data[i] - b.data[i];
  return binary(Op::kSub, a, b, a.shape, std::move(v));
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data[i] * b.data[i];
  return binary(Op::kMul, a, b, a.shape, std::move(v));
}

Tensor Tape::div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (b.data[i] == 0.0) {
      throw DomainError("div: division by zero at index " + std::to_string(i));
    }
    v[i] = a.data[i] / b.data[i];
  }
  return binary(Op::kDiv, a, b, a.shape, std::move(v));
}

Tensor Tape::neg(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = -a.data[i];
  return unary(Op::kNeg, a, std::move(v));
}

Tensor Tape::exp(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(a.data[i]);
  return unary(Op::kExp, a, std::move(v));
}

Tensor Tape::log(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(a.data[i] > 0.0)) {
      throw DomainError("log: non-positive input at index " + std::to_string(i));
    }
    v[i] = std::log(a.data[i]);
  }
  return unary(Op::kLog, a, std::move(v));
}

Tensor Tape::relu(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data[i] > 0.0 ? a.data[i] : 0.0;
  return unary(Op::kRelu, a, std::move(v));
}

Tensor Tape::scale(const Tensor& a, double c) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * a.data[i];
  return unary(Op::kScale, a, std::move(v), c);
}

Tensor Tape::broadcast_add_row(const Tensor& a, const Tensor& b) {
  std::size_t m = a.rows(), n = a.cols();
  if (b.rows() != 1 || b.cols() != n) {
    throw ContractError("broadcast_add_row: b must be a row vector of width " + std::to_string(n) +
                        ", got " + shape_str(b.shape));
  }
  std::vector<double> v(a.size());
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) v[r * n + c] = a.data[r * n + c] + b.data[c];
  }
  return binary(Op::kBroadcastAddRow, a, b, a.shape, std::move(v));
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2) {
    throw ContractError("matmul: both operands must be rank 2, got " + shape_str(a.shape) +
                        " and " + shape_str(b.shape));
  }
  std::size_t m = a.shape[0], k = a.shape[1], k2 = b.shape[0], n = b.shape[1];
  if (k != k2) {
    throw ContractError("matmul: inner dimensions differ, " + shape_str(a.shape) + " vs " +
                        shape_str(b.shape));
  }
  std::vector<double> v(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double av = a.data[i * k + p];
      if (av == 0.0) continue;
      const double* brow = &b.data[p * n];
      double* vrow = &v[i * n];
      for (std::size_t j = 0; j < n; ++j) vrow[j] += av * brow[j];
    }
  }
  return binary(Op::kMatMul, a, b, {m, n}, std::move(v));
}

Tensor Tape::transpose(const Tensor& a) {
  if (a.shape.size() != 2) {
    throw ContractError("transpose: operand must be rank 2, got " + shape_str(a.shape));
  }
  std::size_t m = a.shape[0], n = a.shape[1];
  std::vector<double> v(a.size());
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) v[c * m + r] = a.data[r * n + c];
  }
  Tensor out({n, m}, std::move(v));
  if (a.tracked()) {
    TapeNode node;
    node.op = Op::kTranspose;
    node.a = a.node;
    node.shape = out.shape;
    node.value = out.data;
    node.shape_a = a.shape;
    nodes_.push_back(std::move(node));
    out.node = static_cast<int>(nodes_.size()) - 1;
  }
  return out;
}

Tensor Tape::softmax_rows(const Tensor& a) {
  std::size_t m = a.rows(), n = a.cols();
  std::vector<double> v(a.size());
  for (std::size_t r = 0; r < m; ++r) {
    const double* in = &a.data[r * n];
    double mx = in[0];
    for (std::size_t c = 0; c < n; ++c) {
      if (std::isnan(in[c])) {
        throw DomainError("softmax_rows: NaN input at row " + std::to_string(r));
      }
      mx = std::max(mx, in[c]);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      v[r * n + c] = std::exp(in[c] - mx);
      sum += v[r * n + c];
    }
    for (std::size_t c = 0; c < n; ++c) v[r * n + c] /= sum;
  }
  return unary(Op::kSoftmaxRows, a, std::move(v));
}

Tensor Tape::log_softmax_rows(const Tensor& a) {
  std::size_t m = a.rows(), n = a.cols();
  std::vector<double> v(a.size());
  for (std::size_t r = 0; r < m; ++r) {
    const double* in = &a.data[r * n];
    double mx = in[0];
    for (std::size_t c = 0; c < n; ++c) {
      if (std::isnan(in[c])) {
        throw DomainError("log_softmax_rows: NaN input at row " + std::to_string(r));
      }
      mx = std::max(mx, in[c]);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) sum += std::exp(in[c] - mx);
    double lse = mx + std::log(sum);
    for (std::size_t c = 0; c < n; ++c) v[r * n + c] = in[c] - lse;
  }
  return unary(Op::kLogSoftmaxRows, a, std::move(v));
}

Tensor Tape::l2_normalize_rows(const Tensor& a) {
  std::size_t m = a.rows(), n = a.cols();
  std::vector<double> v(a.size());
  for (std::size_t r = 0; r < m; ++r) {
    const double* in = &a.data[r * n];
    double sq = 0.0;
    for (std::size_t c = 0; c < n; ++c) sq += in[c] * in[c];
    double norm = std::sqrt(sq);
    if (norm == 0.0) {
      throw DomainError("l2_normalize_rows: zero row at row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < n; ++c) v[r * n + c] = in[c] / norm;
  }
  return unary(Op::kL2NormalizeRows, a, std::move(v));
}

Tensor Tape::kl_div_rows(const Tensor& p, const Tensor& q) {
  check_same_shape(p, q, "kl_div_rows");
  std::size_t m = p.rows(), n = p.cols();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.data[i] < 0.0 || q.data[i] < 0.0) {
      throw DomainError("kl_div_rows: negative entry at index " + std::to_string(i));
    }
  }
  for (std::size_t r = 0; r < m; ++r) {
    double ps = 0.0, qs = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      ps += p.data[r * n + c];
      qs += q.data[r * n + c];
    }
    if (std::abs(ps - 1.0) > kRowSumTol || std::abs(qs - 1.0) > kRowSumTol) {
      throw ContractError("kl_div_rows: row " + std::to_string(r) +
                          " is not on the simplex (sums " + std::to_string(ps) + ", " +
                          std::to_string(qs) + ")");
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.data[i] == 0.0) continue;
    total += p.data[i] * std::log(p.data[i] / std::max(q.data[i], kKlClamp));
  }
  total /= static_cast<double>(m);
  return binary(Op::kKlDivRows, p, q, {1}, {total});
}

Tensor Tape::grad_reverse(const Tensor& a, double lambda) {
  if (!a.tracked()) {
    throw ContractError("grad_reverse: input must be tracked on the tape");
  }
  if (lambda < 0.0) {
    throw ContractError("grad_reverse: lambda must be nonnegative, got " + std::to_string(lambda));
  }
  return unary(Op::kGradReverse, a, a.data, lambda);
}

Tensor Tape::sum(const Tensor& a) {
  double total = 0.0;
  for (double x : a.data) total += x;
  Tensor out({1}, {total});
  if (a.tracked()) {
    TapeNode n;
    n.op = Op::kSumAll;
    n.a = a.node;
    n.shape = out.shape;
    n.value = out.data;
    n.shape_a = a.shape;
    nodes_.push_back(std::move(n));
    out.node = static_cast<int>(nodes_.size()) - 1;
  }
  return out;
}

Tensor Tape::sqrt(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (a.data[i] < 0.0) {
      throw DomainError("sqrt: negative input at index " + std::to_string(i));
    }
    v[i] = std::sqrt(a.data[i]);
  }
  return unary(Op::kSqrt, a, std::move(v));
}

Tensor Tape::clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) {
    throw ContractError("clamp: lo must not exceed hi");
  }
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::min(std::max(a.data[i], lo), hi);
  return unary(Op::kClamp, a, std::move(v), lo, hi);
}

Gradients Tape::backward(const Tensor& loss) const {
  if (!loss.tracked() || static_cast<std::size_t>(loss.node) >= nodes_.size()) {
    throw ContractError("backward: loss must be tracked on this tape");
  }
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss.shape));
  }

  Gradients g;
  g.by_node.resize(nodes_.size());
  g.node_shapes.resize(nodes_.size());
  std::vector<bool> touched(nodes_.size(), false);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    g.by_node[i].assign(shape_numel(nodes_[i].shape), 0.0);
    g.node_shapes[i] = nodes_[i].shape;
  }
  g.by_node[loss.node][0] = 1.0;
  touched[loss.node] = true;

  auto acc = [&](int parent, std::size_t idx, double v) {
    if (parent < 0) return;
    g.by_node[parent][idx] += v;
    touched[parent] = true;
  };

  for (int i = loss.node; i >= 0; --i) {
    if (!touched[i]) continue;
    const TapeNode& n = nodes_[static_cast<std::size_t>(i)];
    const std::vector<double>& up = g.by_node[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        for (std::size_t j = 0; j < up.size(); ++j) {
          acc(n.a, j, up[j]);
          acc(n.b, j, up[j]);
        }
        break;
      case Op::kSub:
        for (std::size_t j = 0; j < up.size(); ++j) {
          acc(n.a, j, up[j]);
          acc(n.b, j, -up[j]);
        }
        break;
      case Op::kMul:
        for (std::size_t j = 0; j < up.size(); ++j) {
          acc(n.a, j, up[j] * n.saved_b[j]);
          acc(n.b, j, up[j] * n.saved_a[j]);
        }
        break;
      case Op::kDiv:
        for (std::size_t j = 0; j < up.size(); ++j) {
          acc(n.a, j, up[j] / n.saved_b[j]);
          acc(n.b, j, -up[j] * n.saved_a[j] / (n.saved_b[j] * n.saved_b[j]));
        }
        break;
      case Op::kNeg:
        for (std::size_t j = 0; j < up.size(); ++j) acc(n.a, j, -up[j]);
        break;
      case Op::kExp:
        for (std::size_t j = 0; j < up.size(); ++j) acc(n.a, j, up[j] * n.value[j]);
        break;
      case Op::kLog:
        for (std::size_t j = 0; j < up.size(); ++j) acc(n.a, j, up[j] / n.saved_a[j]);
        break;
      case Op::kRelu:
        for (std::size_t j = 0; j < up.size(); ++j) {
          if (n.saved_a[j] > 0.0) acc(n.a, j, up[j]);
        }
        break;
      case Op::kScale:
        for (std::size_t j = 0; j < up.size(); ++j) acc(n.a, j, up[j] * n.attr0);
        break;
      case Op::kBroadcastAddRow: {
        std::size_t m = n.shape[0], w = n.shape[1];
        for (std::size_t j = 0; j < up.size(); ++j) acc(n.a, j, up[j]);
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < w; ++c) acc(n.b, c, up[r * w + c]);
        }
        break;
      }
      case Op::kMatMul: {
        std::size_t m = n.shape_a[0], k = n.shape_a[1], w = n.shape_b[1];
        // dL/da = up . b^T
        if (n.a >= 0) {
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t p = 0; p < k; ++p) {
              double s = 0.0;
              for (std::size_t c = 0; c < w; ++c) s += up[r * w + c] * n.saved_b[p * w + c];
              acc(n.a, r * k + p, s);
            }
          }
        }
        // dL/db = a^T . up, accumulated row-major for contiguous access
        if (n.b >= 0) {
          std::vector<double> buf(k * w, 0.0);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t p = 0; p < k; ++p) {
              double av = n.saved_a[r * k + p];
              if (av == 0.0) continue;
              const double* urow = &up[r * w];
              double* brow = &buf[p * w];
              for (std::size_t c = 0; c < w; ++c) brow[c] += av * urow[c];
            }
          }
          for (std::size_t j = 0; j < buf.size(); ++j) acc(n.b, j, buf[j]);
        }
        break;
      }
      case Op::kTranspose: {
        std::size_t m = n.shape_a[0], w = n.shape_a[1];
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < w; ++c) acc(n.a, r * w + c, up[c * m + r]);
        }
        break;
      }
      case Op::kSoftmaxRows: {
        std::size_t m = n.shape.size() == 2 ? n.shape[0] : 1;
        std::size_t w = n.shape.size() == 2 ? n.shape[1] : n.shape[0];
        for (std::size_t r = 0; r < m; ++r) {
          const double* p = &n.value[r * w];
          const double* u = &up[r * w];
          double dot = 0.0;
          for (std::size_t c = 0; c < w; ++c) dot += u[c] * p[c];
          for (std::size_t c = 0; c < w; ++c) acc(n.a, r * w + c, p[c] * (u[c] - dot));
        }
        break;
      }
      case Op::kLogSoftmaxRows: {
        std::size_t m = n.shape.size() == 2 ? n.shape[0] : 1;
        std::size_t w = n.shape.size() == 2 ? n.shape[1] : n.shape[0];
        for (std::size_t r = 0; r < m; ++r) {
          const double* y = &n.value[r * w];
          const double* u = &up[r * w];
          double usum = 0.0;
          for (std::size_t c = 0; c < w; ++c) usum += u[c];
          for (std::size_t c = 0; c < w; ++c) acc(n.a, r * w + c, u[c] - std::exp(y[c]) * usum);
        }
        break;
      }
      case Op::kL2NormalizeRows: {
        std::size_t m = n.shape.size() == 2 ? n.shape[0] : 1;
        std::size_t w = n.shape.size() == 2 ? n.shape[1] : n.shape[0];
        for (std::size_t r = 0; r < m; ++r) {
          const double* x = &n.saved_a[r * w];
          const double* y = &n.value[r * w];
          const double* u = &up[r * w];
          double sq = 0.0;
          for (std::size_t c = 0; c < w; ++c) sq += x[c] * x[c];
          double norm = std::sqrt(sq);
          double dot = 0.0;
          for (std::size_t c = 0; c < w; ++c) dot += u[c] * y[c];
          for (std::size_t c = 0; c < w; ++c) acc(n.a, r * w + c, (u[c] - y[c] * dot) / norm);
        }
        break;
      }
      case Op::kKlDivRows: {
        std::size_t m = n.shape_a.size() == 2 ? n.shape_a[0] : 1;
        double u = up[0] / static_cast<double>(m);
        for (std::size_t j = 0; j < n.saved_a.size(); ++j) {
          double pj = n.saved_a[j];
          double qc = std::max(n.saved_b[j], kKlClamp);
          if (n.a >= 0 && pj > 0.0) acc(n.a, j, u * (std::log(pj / qc) + 1.0));
          if (n.b >= 0 && n.saved_b[j] > kKlClamp) acc(n.b, j, -u * pj / qc);
        }
        break;
      }
      case Op::kGradReverse:
        for (std::size_t j = 0; j < up.size(); ++j) acc(n.a, j, -n.attr0 * up[j]);
        break;
      case Op::kSumAll:
        for (std::size_t j = 0; j < shape_numel(n.shape_a); ++j) acc(n.a, j, up[0]);
        break;
      case Op::kSqrt:
        for (std::size_t j = 0; j < up.size(); ++j) {
          // subgradient 0 at the origin, like relu
          if (n.value[j] > 0.0) acc(n.a, j, up[j] * 0.5 / n.value[j]);
        }
        break;
      case Op::kClamp:
        for (std::size_t j = 0; j < up.size(); ++j) {
          if (n.saved_a[j] > n.attr0 && n.saved_a[j] < n.attr1) acc(n.a, j, up[j]);
        }
        break;
    }
  }

  for (int p : params_) {
    g.params.emplace(p, Tensor(nodes_[static_cast<std::size_t>(p)].shape,
                               g.by_node[static_cast<std::size_t>(p)]));
  }
  return g;
}

Tensor apply_primitive(Tape& tape, PrimKind kind, const Tensor& a, const Tensor* b, double attr) {
  auto need_b = [&]() -> const Tensor& {
    if (b == nullptr) throw ContractError("apply_primitive: binary kind requires second operand");
    return *b;
  };
  switch (kind) {
    case PrimKind::kAdd:
      return tape.add(a, need_b());
    case PrimKind::kSub:
      return tape.sub(a, need_b());
    case PrimKind::kMul:
      return tape.mul(a, need_b());
    case PrimKind::kDiv:
      return tape.div(a, need_b());
    case PrimKind::kNeg:
      return tape.neg(a);
    case PrimKind::kExp:
      return tape.exp(a);
    case PrimKind::kLog:
      return tape.log(a);
    case PrimKind::kRelu:
      return tape.relu(a);
    case PrimKind::kScale:
      return tape.scale(a, attr);
    case PrimKind::kBroadcastAddRow:
      return tape.broadcast_add_row(a, need_b());
  }
  throw ContractError("apply_primitive: unknown kind");
}

double finite_difference_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                               const Tensor& x, double eps) {
  Tape tape;
  Tensor xt = tape.leaf(x);
  Tensor loss = f(tape, xt);
  Gradients grads = tape.backward(loss);
  Tensor analytic = grads.wrt(xt);

  double max_rel = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp.node = -1;
    xm.node = -1;
    xp.data[i] += eps;
    xm.data[i] -= eps;
    Tape tp, tm;
    double fp = f(tp, tp.leaf(xp)).item();
    double fm = f(tm, tm.leaf(xm)).item();
    double numeric = (fp - fm) / (2.0 * eps);
    double denom = std::max({std::abs(analytic.data[i]), std::abs(numeric), 1e-12});
    max_rel = std::max(max_rel, std::abs(analytic.data[i] - numeric) / denom);
  }
  return max_rel;
}

}  // namespace acorl
