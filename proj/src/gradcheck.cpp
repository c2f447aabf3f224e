// SPDX-License-Identifier: Apache-2.0
#include "acorl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "acorl/errors.hpp"
#include "acorl/rng.hpp"

namespace acorl {

namespace {

// Structural op codes for replayable random compositions. Safety is baked
// into the op (squared-plus-constant arguments for log/div/sqrt), so the
// same program stays valid under small input perturbations.
enum class GOp {
  kAdd,
  kSub,
  kMul,
  kSafeDiv,
  kNeg,
  kExpDamped,
  kSafeLog,
  kReluShift,
  kScale,
  kMatConst,
  kSoftmax,
  kLogSoftmax,
  kL2Norm,
  kSafeSqrt,
  kClampWide,
};

struct GraphOp {
  GOp op;
  int a = 0;
  int b = 0;
  double c0 = 0.0;
};

struct Program {
  std::vector<GraphOp> ops;
  Tensor const_square;  // n x n constant for kMatConst
  bool final_kl = false;
  int kl_a = 0, kl_b = 0;
};

constexpr std::size_t kRows = 2;
constexpr std::size_t kCols = 3;

Program random_program(Rng& rng, int depth) {
  Program prog;
  std::vector<double> sq(kCols * kCols);
  for (double& v : sq) v = rng.uniform(-1.0, 1.0);
  prog.const_square = Tensor({kCols, kCols}, std::move(sq));

  // kGrl is excluded: the reversal layer's gradient contract is -lambda
  // times the forward derivative, so it gets its own adjusted check.
  const GOp choices[] = {GOp::kAdd,    GOp::kSub,       GOp::kMul,     GOp::kSafeDiv,
                         GOp::kNeg,    GOp::kExpDamped, GOp::kSafeLog, GOp::kReluShift,
                         GOp::kScale,  GOp::kMatConst,  GOp::kSoftmax, GOp::kLogSoftmax,
                         GOp::kL2Norm, GOp::kSafeSqrt,  GOp::kClampWide};
  for (int i = 0; i < depth; ++i) {
    GraphOp op;
    op.op = choices[rng.below(sizeof(choices) / sizeof(choices[0]))];
    // pool slot 0 is x; slot j >= 1 is the result of ops[j-1]
    op.a = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    op.b = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    switch (op.op) {
      case GOp::kReluShift:
        op.c0 = rng.uniform(-0.5, 0.5);
        break;
      case GOp::kScale:
        op.c0 = rng.uniform(-2.0, 2.0);
        break;
      case GOp::kClampWide:
        op.c0 = rng.uniform(1.5, 3.0);  // clamp to [-c0, c0]
        break;
      default:
        break;
    }
    prog.ops.push_back(op);
  }
  prog.final_kl = rng.below(4) == 0;
  if (prog.final_kl) {
    prog.kl_a = static_cast<int>(rng.below(static_cast<std::uint64_t>(depth + 1)));
    prog.kl_b = static_cast<int>(rng.below(static_cast<std::uint64_t>(depth + 1)));
  }
  return prog;
}

// Replays the program; when `validate` is set, checks kink margins and
// magnitude bounds and reports through `ok`.
Tensor replay(Tape& tape, const Tensor& x, const Program& prog, bool validate, bool* ok) {
  if (ok != nullptr) *ok = true;
  auto flag = [&](bool good) {
    if (!good && ok != nullptr) *ok = false;
  };

  std::vector<Tensor> pool;
  pool.push_back(x);
  for (const auto& op : prog.ops) {
    const Tensor& a = pool[static_cast<std::size_t>(op.a)];
    const Tensor& b = pool[static_cast<std::size_t>(op.b)];
    Tensor r;
    switch (op.op) {
      case GOp::kAdd:
        r = tape.add(a, b);
        break;
      case GOp::kSub:
        r = tape.sub(a, b);
        break;
      case GOp::kMul:
        r = tape.mul(a, b);
        break;
      case GOp::kSafeDiv:
        r = tape.div(a, tape.add(tape.mul(b, b), Tensor::full(b.shape, 0.5)));
        break;
      case GOp::kNeg:
        r = tape.neg(a);
        break;
      case GOp::kExpDamped:
        r = tape.exp(tape.scale(a, 0.3));
        break;
      case GOp::kSafeLog:
        r = tape.log(tape.add(tape.mul(a, a), Tensor::full(a.shape, 0.2)));
        break;
      case GOp::kReluShift: {
        Tensor shifted = tape.add(a, Tensor::full(a.shape, op.c0));
        if (validate) {
          for (double v : shifted.data) flag(std::abs(v) > 1e-2);
        }
        r = tape.relu(shifted);
        break;
      }
      case GOp::kScale:
        r = tape.scale(a, op.c0);
        break;
      case GOp::kMatConst:
        r = tape.matmul(a, prog.const_square);
        break;
      case GOp::kSoftmax:
        r = tape.softmax_rows(a);
        break;
      case GOp::kLogSoftmax:
        r = tape.log_softmax_rows(a);
        break;
      case GOp::kL2Norm: {
        Tensor shifted = tape.add(a, Tensor::full(a.shape, 0.1));
        if (validate) {
          for (std::size_t row = 0; row < shifted.rows(); ++row) {
            double sq = 0.0;
            for (std::size_t c = 0; c < shifted.cols(); ++c) {
              double v = shifted.data[row * shifted.cols() + c];
              sq += v * v;
            }
            flag(sq > 1e-2);
          }
        }
        r = tape.l2_normalize_rows(shifted);
        break;
      }
      case GOp::kSafeSqrt:
        r = tape.sqrt(tape.add(tape.mul(a, a), Tensor::full(a.shape, 0.3)));
        break;
      case GOp::kClampWide:
        if (validate) {
          for (double v : a.data) flag(std::abs(std::abs(v) - op.c0) > 1e-2);
        }
        r = tape.clamp(a, -op.c0, op.c0);
        break;
    }
    if (validate) {
      for (double v : r.data) flag(std::isfinite(v) && std::abs(v) < 1e8);
    }
    pool.push_back(r);
  }

  if (prog.final_kl) {
    Tensor p = tape.softmax_rows(pool[static_cast<std::size_t>(prog.kl_a)]);
    Tensor q = tape.softmax_rows(pool[static_cast<std::size_t>(prog.kl_b)]);
    return tape.kl_div_rows(p, q);
  }
  return tape.sum(pool.back());
}

Tensor random_input(Rng& rng) {
  std::vector<double> v(kRows * kCols);
  for (double& x : v) x = rng.uniform(-1.5, 1.5);
  return Tensor({kRows, kCols}, std::move(v));
}

// Draws (program, input) pairs until validation passes.
std::pair<Program, Tensor> valid_case(Rng& rng, int depth) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Program prog = random_program(rng, depth);
    Tensor x = random_input(rng);
    Tape probe;
    bool ok = false;
    replay(probe, probe.leaf(x), prog, true, &ok);
    if (ok) return {prog, x};
  }
  throw ContractError("gradcheck: could not draw a valid random composition");
}

double check_primitives(double eps) {
  double worst = 0.0;
  auto fd = [&](const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x) {
    worst = std::max(worst, finite_difference_check(f, x, eps));
  };

  Tensor m = Tensor::matrix(2, 3, {0.4, -0.7, 1.2, 0.9, -1.1, 0.3});
  Tensor row3 = Tensor::row({0.5, -0.2, 0.8});

  Tensor other = Tensor::matrix(2, 3, {1.3, 0.6, -0.4, 0.2, 1.7, -0.9});
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.add(x, other)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.add(x, x)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.sub(x, other)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.sub(other, x)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.mul(x, other)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.mul(x, x)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.div(x, other)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.div(other, x)); },
     Tensor::matrix(2, 3, {0.7, -0.9, 1.4, 1.1, -1.3, 0.8}));
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.neg(x)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.exp(x)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.log(x)); },
     Tensor::matrix(2, 3, {0.4, 0.7, 1.2, 0.9, 1.1, 0.3}));
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.relu(x)); }, m);  // all |v| >= 0.3
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.scale(x, -1.7)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.broadcast_add_row(x, row3)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.broadcast_add_row(other, x)); }, row3);

  Tensor sq = Tensor::matrix(3, 3, {0.2, -0.5, 0.9, 1.1, 0.4, -0.3, -0.8, 0.6, 0.7});
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.matmul(x, sq)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.matmul(other, x)); }, sq);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.mul(t.transpose(x), t.transpose(x))); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.mul(t.softmax_rows(x), other)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.mul(t.log_softmax_rows(x), other)); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.mul(t.l2_normalize_rows(x), other)); }, m);
  fd([&](Tape& t, const Tensor& x) {
    return t.kl_div_rows(t.softmax_rows(x), t.softmax_rows(other));
  }, m);
  fd([&](Tape& t, const Tensor& x) {
    Tensor teacher = t.softmax_rows(other);
    return t.kl_div_rows(teacher, t.softmax_rows(x));
  }, m);
  // grad_reverse: analytic must equal -lambda times the numeric forward
  // derivative, checked with the same denominator convention.
  for (double lambda : {0.5, 2.0}) {
    Tape t;
    Tensor xt = t.leaf(m);
    Tensor loss = t.sum(t.exp(t.grad_reverse(xt, lambda)));
    Tensor analytic = t.backward(loss).wrt(xt);
    for (std::size_t i = 0; i < m.size(); ++i) {
      Tensor xp = m, xm = m;
      xp.data[i] += eps;
      xm.data[i] -= eps;
      auto value = [](const Tensor& v) {
        double s = 0.0;
        for (double e : v.data) s += std::exp(e);
        return s;
      };
      double numeric = (value(xp) - value(xm)) / (2.0 * eps);
      double expected = -lambda * numeric;
      double denom = std::max({std::abs(analytic.data[i]), std::abs(expected), 1e-12});
      worst = std::max(worst, std::abs(analytic.data[i] - expected) / denom);
    }
  }
  fd([&](Tape& t, const Tensor& x) { return t.sum(x); }, m);
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.sqrt(x)); },
     Tensor::matrix(2, 3, {0.4, 0.7, 1.2, 0.9, 1.1, 0.3}));
  fd([&](Tape& t, const Tensor& x) { return t.sum(t.clamp(x, -5.0, 5.0)); }, m);
  return worst;
}

}  // namespace

GradcheckReport run_gradcheck(std::uint64_t seed, int n_compositions, double eps) {
  GradcheckReport report;
  report.max_rel_err = check_primitives(eps);
  report.primitive_cases = 28;

  Rng rng(subseed(seed, "gradcheck"));
  for (int i = 0; i < n_compositions; ++i) {
    int depth = 1 + static_cast<int>(rng.below(6));
    auto [prog, x] = valid_case(rng, depth);
    double err = finite_difference_check(
        [&prog](Tape& t, const Tensor& in) { return replay(t, in, prog, false, nullptr); }, x,
        eps);
    report.max_rel_err = std::max(report.max_rel_err, err);
    ++report.compositions;
  }
  return report;
}

double grl_equivalence_max_dev(std::uint64_t seed, int n_graphs, double lambda) {
  Rng rng(subseed(seed, "grl-equivalence"));
  double worst = 0.0;
  for (int i = 0; i < n_graphs; ++i) {
    int depth = 1 + static_cast<int>(rng.below(6));
    auto [prog, x] = valid_case(rng, depth);

    Tape with_grl;
    Tensor leaf_a = with_grl.leaf(x);
    Tensor loss_a = replay(with_grl, with_grl.grad_reverse(leaf_a, lambda), prog, false, nullptr);
    Tensor grad_a = with_grl.backward(loss_a).wrt(leaf_a);

    Tape without;
    Tensor leaf_b = without.leaf(x);
    Tensor loss_b = replay(without, leaf_b, prog, false, nullptr);
    Tensor grad_b = without.backward(loss_b).wrt(leaf_b);

    for (std::size_t j = 0; j < grad_a.size(); ++j) {
      worst = std::max(worst, std::abs(grad_a.data[j] - (-lambda) * grad_b.data[j]));
    }
  }
  return worst;
}

}  // namespace acorl
