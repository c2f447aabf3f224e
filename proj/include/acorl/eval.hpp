// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "acorl/data.hpp"
#include "acorl/nn.hpp"
#include "acorl/tensor.hpp"

namespace acorl {

// Fraction of rows whose argmax equals the label; ties go to the smallest
// class index.
double top1_accuracy(const Tensor& logits, const std::vector<int>& labels);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Equal error rate over genuine/impostor scores. Candidate thresholds are
// the sorted unique scores, midpoints between neighbours, and one value
// past the maximum; FAR(t) = fraction of impostors with score >= t,
// FRR(t) = fraction of genuine with score < t. Returns (FAR+FRR)/2 at the
// threshold minimizing |FAR-FRR|, ties broken toward the lower threshold.
EerResult eer(const std::vector<double>& scores, const std::vector<bool>& genuine);

// Cosine scores for a trial list: embeddings from the model's task output
// (already L2-normalized for embedding heads).
std::vector<double> cosine_trial_scores(const Model& model, const Dataset& ds,
                                        const TrialList& trials);

std::vector<bool> trial_labels(const TrialList& trials);

}  // namespace acorl
