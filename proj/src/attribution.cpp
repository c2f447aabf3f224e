// SPDX-License-Identifier: Apache-2.0
#include "acorl/attribution.hpp"

#include <cmath>
#include <fstream>

#include "acorl/errors.hpp"
#include "acorl/tape.hpp"

namespace acorl {

IgTarget IgTarget::class_logit(int index) {
  IgTarget t;
  t.kind = Kind::kClassLogit;
  t.class_index = index;
  return t;
}

IgTarget IgTarget::cosine_ref(Tensor reference) {
  IgTarget t;
  t.kind = Kind::kCosineRef;
  t.reference = std::move(reference);
  return t;
}

namespace {

// Sum over rows of the selected scalar output; rows are independent, so
// the gradient w.r.t. the input batch holds each row's df/dx.
Tensor selected_sum(Tape& tape, const Model& model, const IgTarget& target, const Tensor& batch) {
  ForwardResult fwd = model_forward(tape, model.spec, model.params, batch);
  if (target.kind == IgTarget::Kind::kClassLogit) {
    if (model.spec.head != HeadKind::kClassifier) {
      throw ContractError("integrated_gradients: class-logit target needs a classifier head");
    }
    std::size_t c = model.spec.num_classes;
    if (target.class_index < 0 || static_cast<std::size_t>(target.class_index) >= c) {
      throw ContractError("integrated_gradients: class index out of range");
    }
    Tensor pick = Tensor::zeros({c, 1});
    pick.data[static_cast<std::size_t>(target.class_index)] = 1.0;
    return tape.sum(tape.matmul(fwd.task_out, pick));
  }
  // Cosine against a fixed reference embedding.
  std::size_t d = model.spec.repr_dim;
  if (target.reference.size() != d) {
    throw ContractError("integrated_gradients: reference dim " +
                        std::to_string(target.reference.size()) + " does not match repr_dim " +
                        std::to_string(d));
  }
  double norm = 0.0;
  for (double v : target.reference.data) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw ContractError("integrated_gradients: zero reference embedding");
  Tensor ref_col = Tensor::zeros({d, 1});
  for (std::size_t i = 0; i < d; ++i) ref_col.data[i] = target.reference.data[i] / norm;
  Tensor emb = tape.l2_normalize_rows(fwd.representation);
  return tape.sum(tape.matmul(emb, ref_col));
}

double eval_point(const Model& model, const IgTarget& target, const Tensor& x) {
  Tape tape;
  return selected_sum(tape, model, target, x).item();
}

}  // namespace

AttributionMap integrated_gradients(const Model& model, const IgTarget& target, const Tensor& x,
                                    const Tensor& baseline, int steps) {
  if (steps < 1) throw ContractError("integrated_gradients: steps must be >= 1");
  if (x.size() != model.spec.input_dim || baseline.size() != x.size()) {
    throw ContractError("integrated_gradients: sample/baseline shape mismatch with input_dim " +
                        std::to_string(model.spec.input_dim));
  }
  const std::size_t d = x.size();
  const std::size_t s_count = static_cast<std::size_t>(steps);

  // Interpolation points x0 + (s/S)(x - x0), s = 1..S, one batch.
  Tensor points = Tensor::zeros({s_count, d});
  for (std::size_t s = 1; s <= s_count; ++s) {
    double alpha = static_cast<double>(s) / static_cast<double>(s_count);
    for (std::size_t k = 0; k < d; ++k) {
      points.data[(s - 1) * d + k] =
          baseline.data[k] + alpha * (x.data[k] - baseline.data[k]);
    }
  }

  Tape tape;
  Tensor tracked = tape.leaf(points);
  Tensor total = selected_sum(tape, model, target, tracked);
  Gradients grads = tape.backward(total);
  Tensor g = grads.wrt(tracked);

  AttributionMap map;
  map.steps = steps;
  map.values.assign(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    double mean_grad = 0.0;
    for (std::size_t s = 0; s < s_count; ++s) mean_grad += g.data[s * d + k];
    mean_grad /= static_cast<double>(s_count);
    map.values[k] = (x.data[k] - baseline.data[k]) * mean_grad;
  }

  Tensor x_row = Tensor({1, d}, x.data);
  Tensor b_row = Tensor({1, d}, baseline.data);
  double fx = eval_point(model, target, x_row);
  double f0 = eval_point(model, target, b_row);
  double total_attr = 0.0;
  for (double v : map.values) total_attr += v;
  map.completeness_gap = std::abs(total_attr - (fx - f0));
  return map;
}

double complementarity_score(const std::vector<AttributionMap>& a,
                             const std::vector<AttributionMap>& b, std::size_t* skipped) {
  if (a.size() != b.size() || a.empty()) {
    throw ContractError("complementarity_score: map sets must be nonempty and aligned");
  }
  double total = 0.0;
  std::size_t used = 0, skip = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].values.size() != b[i].values.size()) {
      throw ContractError("complementarity_score: feature dim mismatch at sample " +
                          std::to_string(i));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a[i].values.size(); ++k) {
      double va = std::abs(a[i].values[k]);
      double vb = std::abs(b[i].values[k]);
      dot += va * vb;
      na += va * va;
      nb += vb * vb;
    }
    if (na == 0.0 || nb == 0.0) {
      ++skip;
      continue;
    }
    total += dot / (std::sqrt(na) * std::sqrt(nb));
    ++used;
  }
  if (skipped != nullptr) *skipped = skip;
  if (used == 0) {
    throw ContractError("complementarity_score: all samples had zero attributions");
  }
  return total / static_cast<double>(used);
}

void write_attribution_csv(const std::filesystem::path& path,
                           const std::vector<AttributionMap>& maps) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("attribution: cannot open '" + path.string() + "' for writing");
  if (maps.empty()) throw ContractError("attribution: nothing to write");
  const std::size_t d = maps.front().values.size();
  out << "sample_id,model_id";
  for (std::size_t k = 0; k < d; ++k) out << ",feature_" << k;
  out << ",completeness_gap\n";
  char buf[40];
  for (const auto& m : maps) {
    out << m.sample_id << "," << m.model_id;
    for (double v : m.values) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << "," << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", m.completeness_gap);
    out << "," << buf << "\n";
  }
  if (!out) throw DataError("attribution: write failed for '" + path.string() + "'");
}

}  // namespace acorl
