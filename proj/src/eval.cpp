// SPDX-License-Identifier: Apache-2.0
#include "acorl/eval.hpp"

#include <algorithm>
#include <cmath>

#include "acorl/errors.hpp"

namespace acorl {

double top1_accuracy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.shape.size() != 2) {
    throw ContractError("top1_accuracy: logits must be B x C");
  }
  std::size_t b = logits.shape[0], c = logits.shape[1];
  if (labels.size() != b || b == 0) {
    throw ContractError("top1_accuracy: need one label per row");
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < b; ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (logits.data[r * c + j] > logits.data[r * c + best]) best = j;
    }
    if (static_cast<int>(best) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(b);
}

EerResult eer(const std::vector<double>& scores, const std::vector<bool>& genuine) {
  if (scores.size() != genuine.size() || scores.empty()) {
    throw ContractError("eer: scores and labels must be nonempty and equal length");
  }
  std::size_t n_gen = 0, n_imp = 0;
  for (bool g : genuine) (g ? n_gen : n_imp) += 1;
  if (n_gen == 0 || n_imp == 0) {
    throw ContractError("eer: both genuine and impostor trials are required");
  }

  std::vector<double> uniq = scores;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  std::vector<double> candidates;
  candidates.reserve(2 * uniq.size());
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    candidates.push_back(uniq[i]);
    if (i + 1 < uniq.size()) candidates.push_back(0.5 * (uniq[i] + uniq[i + 1]));
  }
  candidates.push_back(uniq.back() + 1.0);

  EerResult best;
  double best_gap = 0.0;
  bool first = true;
  for (double t : candidates) {
    std::size_t fa = 0, fr = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (genuine[i]) {
        if (scores[i] < t) ++fr;
      } else {
        if (scores[i] >= t) ++fa;
      }
    }
    double far = static_cast<double>(fa) / static_cast<double>(n_imp);
    double frr = static_cast<double>(fr) / static_cast<double>(n_gen);
    double gap = std::abs(far - frr);
    if (first || gap < best_gap) {
      first = false;
      best_gap = gap;
      best.eer = 0.5 * (far + frr);
      best.threshold = t;
    }
  }
  return best;
}

std::vector<double> cosine_trial_scores(const Model& model, const Dataset& ds,
                                        const TrialList& trials) {
  // Embed every referenced sample once.
  std::vector<int> ids;
  for (const auto& t : trials) {
    ids.push_back(t.enroll_id);
    ids.push_back(t.test_id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  Dataset sub = subset(ds, ids);
  ForwardResult fwd = model_forward(model, sub.features);
  const Tensor& emb = model.spec.head == HeadKind::kEmbedding ? fwd.task_out : fwd.representation;
  const std::size_t dim = emb.shape[1];

  // L2-normalize so the trial score is a plain dot product.
  std::vector<double> normed(emb.data);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    double sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) sq += normed[r * dim + k] * normed[r * dim + k];
    double norm = std::sqrt(sq);
    if (norm > 0.0) {
      for (std::size_t k = 0; k < dim; ++k) normed[r * dim + k] /= norm;
    }
  }

  auto row_of = [&](int id) {
    return static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  std::vector<double> scores;
  scores.reserve(trials.size());
  for (const auto& t : trials) {
    std::size_t a = row_of(t.enroll_id), b = row_of(t.test_id);
    double dot = 0.0;
    for (std::size_t k = 0; k < dim; ++k) dot += normed[a * dim + k] * normed[b * dim + k];
    scores.push_back(dot);
  }
  return scores;
}

std::vector<bool> trial_labels(const TrialList& trials) {
  std::vector<bool> labels;
  labels.reserve(trials.size());
  for (const auto& t : trials) labels.push_back(t.genuine);
  return labels;
}

}  // namespace acorl
