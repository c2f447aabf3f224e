// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "acorl/tape.hpp"
#include "acorl/tensor.hpp"

namespace acorl {

// Additive-angular-margin softmax hyperparameters.
struct AamParams {
  double margin = 0.2;
  double scale = 32.0;

  void validate() const;
};

// Mean over the batch of -log softmax(logits)[label].
Tensor cross_entropy(Tape& tape, const Tensor& logits, const std::vector<int>& labels);

// AAM-softmax: rows of embeddings and class_weights are L2-normalized,
// the label logit becomes s*cos(theta_y + m) while the others stay
// s*cos(theta_j), then cross-entropy. Differentiable through both inputs.
Tensor aam_softmax(Tape& tape, const Tensor& embeddings, const Tensor& class_weights,
                   const std::vector<int>& labels, const AamParams& p);

// Mean over rows of KL(p || q) with q clamped below at 1e-12 and
// 0*log 0 = 0. Rows must lie on the simplex within 1e-9.
Tensor kl_divergence(Tape& tape, const Tensor& p, const Tensor& q);

// Adversarial objective: KL(softmax(v_k/T) || softmax(z_k/T)). The frozen
// representation v_k is treated as a constant; gradient flows only
// through z_k.
Tensor adv_loss(Tape& tape, const Tensor& z_k, const Tensor& v_k, double temperature);

}  // namespace acorl
