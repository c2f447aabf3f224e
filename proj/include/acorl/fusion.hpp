// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "acorl/data.hpp"
#include "acorl/nn.hpp"
#include "acorl/training.hpp"

namespace acorl {

enum class FusionMode { kLate, kOutputWeighted, kOutputLogreg };

FusionMode fusion_mode_from_string(const std::string& s);
std::string fusion_mode_to_string(FusionMode m);

struct FusionBundle {
  FusionMode mode = FusionMode::kLate;
  std::vector<std::string> member_paths;
  Model late_head;              // kLate: MLP over concatenated representations
  std::vector<double> weights;  // kOutputWeighted: simplex weights over members
  std::vector<double> beta;     // kOutputLogreg: per-member coefficients
  double beta0 = 0.0;           // kOutputLogreg: intercept
};

void save_fusion_bundle(const FusionBundle& bundle, const std::filesystem::path& path);
FusionBundle load_fusion_bundle(const std::filesystem::path& path);

// Concatenated member representations for a batch, members frozen.
Tensor fused_representation(const std::vector<const Model*>& members, const Tensor& batch);

struct LateFusionOptions {
  std::size_t hidden = 512;
  int hidden_layers = 2;  // "3-layer MLP": input -> 512 -> 512 -> output
  std::size_t max_input = 4096;
  TrainOptions train;
};

// Trains the late-fusion MLP on the concatenated representations with the
// dataset's task loss (cross-entropy for classifier members, AAM-softmax
// embedding training otherwise). Member parameters are never touched.
FusionBundle train_late_fusion(const std::vector<const Model*>& members,
                               const std::vector<std::string>& member_paths, const Dataset& train,
                               const LateFusionOptions& opts);

// Task output of a late-fusion bundle (logits or normalized embedding).
ForwardResult late_fusion_forward(const FusionBundle& bundle,
                                  const std::vector<const Model*>& members, const Tensor& batch);

// fused = sum_m w_m * softmax(logits_m); w on the simplex.
Tensor output_fuse_weighted(const std::vector<Tensor>& member_logits,
                            const std::vector<double>& w);

// Grid search over the simplex at the given resolution, maximizing top-1
// accuracy on the held-out logits; ties break toward the uniform weight
// vector, then lexicographically.
std::vector<double> fit_output_weights(const std::vector<Tensor>& member_logits,
                                       const std::vector<int>& labels, double resolution = 0.05);

struct LogregFit {
  std::vector<double> beta;
  double beta0 = 0.0;
};

// Logistic regression on per-member trial scores by full-batch gradient
// descent, run to gradient-norm tolerance 1e-8 (deterministic).
LogregFit fit_score_logreg(const std::vector<std::vector<double>>& member_scores,
                           const std::vector<bool>& genuine);

// sigma(beta . scores + beta0) per trial.
std::vector<double> logreg_fused_scores(const LogregFit& fit,
                                        const std::vector<std::vector<double>>& member_scores);

}  // namespace acorl
