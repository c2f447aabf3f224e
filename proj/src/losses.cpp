// SPDX-License-Identifier: Apache-2.0
#include "acorl/losses.hpp"

#include <cmath>
#include <string>

#include "acorl/errors.hpp"

namespace acorl {

void AamParams::validate() const {
  if (margin < 0.0) throw ContractError("AamParams: margin must be nonnegative");
  if (scale <= 0.0) throw ContractError("AamParams: scale must be positive");
}

namespace {

// One-hot selector for the label entry of every row.
Tensor one_hot_mask(std::size_t rows, std::size_t cols, const std::vector<int>& labels) {
  Tensor m = Tensor::zeros({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) m.data[r * cols + static_cast<std::size_t>(labels[r])] = 1.0;
  return m;
}

void check_labels(std::size_t rows, std::size_t cols, const std::vector<int>& labels,
                  const char* what) {
  if (labels.size() != rows) {
    throw ContractError(std::string(what) + ": got " + std::to_string(labels.size()) +
                        " labels for " + std::to_string(rows) + " rows");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= cols) {
      throw ContractError(std::string(what) + ": label " + std::to_string(labels[r]) +
                          " out of range [0, " + std::to_string(cols) + ") at row " +
                          std::to_string(r));
    }
  }
}

}  // namespace

Tensor cross_entropy(Tape& tape, const Tensor& logits, const std::vector<int>& labels) {
  if (logits.shape.size() != 2) {
    throw ContractError("cross_entropy: logits must be B x C, got " + shape_str(logits.shape));
  }
  std::size_t b = logits.shape[0], c = logits.shape[1];
  check_labels(b, c, labels, "cross_entropy");
  Tensor log_probs = tape.log_softmax_rows(logits);
  Tensor picked = tape.mul(log_probs, one_hot_mask(b, c, labels));
  return tape.scale(tape.sum(picked), -1.0 / static_cast<double>(b));
}

Tensor aam_softmax(Tape& tape, const Tensor& embeddings, const Tensor& class_weights,
                   const std::vector<int>& labels, const AamParams& p) {
  p.validate();
  if (embeddings.shape.size() != 2 || class_weights.shape.size() != 2 ||
      embeddings.shape[1] != class_weights.shape[1]) {
    throw ContractError("aam_softmax: embedding dim " + shape_str(embeddings.shape) +
                        " does not match class weights " + shape_str(class_weights.shape));
  }
  std::size_t b = embeddings.shape[0], c = class_weights.shape[0];
  check_labels(b, c, labels, "aam_softmax");

  Tensor emb_n = tape.l2_normalize_rows(embeddings);
  Tensor w_n = tape.l2_normalize_rows(class_weights);

  // cos(theta) between every embedding and class weight: B x C.
  Tensor cos = tape.matmul(emb_n, tape.transpose(w_n));

  double cos_m = std::cos(p.margin);
  double sin_m = std::sin(p.margin);

  // psi(c) = c*cos m - sqrt(1 - c^2)*sin m. The radicand is clamped at
  // zero so cos == +-1 stays finite.
  Tensor one = Tensor::full(cos.shape, 1.0);
  Tensor radicand = tape.clamp(tape.sub(one, tape.mul(cos, cos)), 0.0, 2.0);
  Tensor psi = tape.sub(tape.scale(cos, cos_m), tape.scale(tape.sqrt(radicand), sin_m));

  Tensor mask = one_hot_mask(b, c, labels);
  Tensor inv_mask = Tensor::full(cos.shape, 1.0);
  for (std::size_t i = 0; i < inv_mask.size(); ++i) inv_mask.data[i] -= mask.data[i];

  Tensor adjusted = tape.add(tape.mul(cos, inv_mask), tape.mul(psi, mask));
  Tensor logits = tape.scale(adjusted, p.scale);
  return cross_entropy(tape, logits, labels);
}

Tensor kl_divergence(Tape& tape, const Tensor& p, const Tensor& q) {
  return tape.kl_div_rows(p, q);
}

Tensor adv_loss(Tape& tape, const Tensor& z_k, const Tensor& v_k, double temperature) {
  if (temperature <= 0.0) {
    throw ContractError("adv_loss: temperature must be positive, got " +
                        std::to_string(temperature));
  }
  if (!same_shape(z_k.shape, v_k.shape)) {
    throw ContractError("adv_loss: shape mismatch " + shape_str(z_k.shape) + " vs " +
                        shape_str(v_k.shape));
  }
  // Detach the frozen branch: softmax of a constant stays constant.
  Tensor v_const = v_k;
  v_const.node = -1;
  Tensor teacher = tape.softmax_rows(tape.scale(v_const, 1.0 / temperature));
  Tensor student = tape.softmax_rows(tape.scale(z_k, 1.0 / temperature));
  return tape.kl_div_rows(teacher, student);
}

}  // namespace acorl
