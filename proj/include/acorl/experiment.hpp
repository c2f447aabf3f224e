// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acorl/attribution.hpp"
#include "acorl/config.hpp"
#include "acorl/data.hpp"
#include "acorl/eval.hpp"
#include "acorl/fusion.hpp"
#include "acorl/training.hpp"

namespace acorl {

struct PreparedData {
  Dataset full;
  Splits splits;
  GenerationReport gen_report;
  bool generated = false;
};

// Loads dataset.path or generates from the spec (seed derived from the
// run seed unless the spec pins one); splits always derive from the run
// seed so every subcommand of a run agrees on them.
PreparedData prepare_dataset(const ExperimentConfig& cfg);

double eval_accuracy(const Model& model, const Dataset& eval_set);

// Trials draw ids from the given split of the full dataset.
TrialList make_split_trials(const Dataset& full, const std::vector<int>& split_ids,
                            int genuine_per_class, int impostor_total, std::uint64_t seed);

EerResult eval_model_eer(const Model& model, const Dataset& full, const TrialList& trials);

// Attribution maps over the first `samples` of the split, true-label
// logit target, shared baseline.
std::vector<AttributionMap> attribution_maps(const Model& model, const std::string& model_id,
                                             const Dataset& full,
                                             const std::vector<int>& sample_ids,
                                             const Tensor& baseline, int steps);

// ---- Canonical complementary-cue experiment ------------------------------
// The defaults below are mirrored by configs/canonical.json.

ComplementaryCueSpec canonical_cue_spec(std::uint64_t dataset_seed);
ModelConfig canonical_model_config(HeadKind head);
TrainConfig canonical_train_config(HeadKind head);
TrainConfig canonical_fusion_train_config();

struct CanonicalSeedOutcome {
  // classification track (top-1 accuracy on the eval split)
  double acc_a = 0.0;
  double acc_b_plain = 0.0;
  double acc_b_acorl = 0.0;
  double lf_plain_ab = 0.0;
  double lf_acorl_ab = 0.0;
  double lf_a_alone = 0.0;
  double lf_aa = 0.0;
  // attribution complementarity (cosine of absolute maps)
  double comp_plain = 0.0;
  double comp_acorl = 0.0;
  // verification track
  double eer_a = 0.0;
  double eer_b_acorl = 0.0;
  double eer_logreg_fused = 0.0;
  GenerationReport gen_report;
};

// Full per-seed pipeline: generate data, train A/B/alliance-B, the four
// late-fusion heads, attribution maps, and the AAM verification track
// with logistic-regression output fusion.
CanonicalSeedOutcome run_canonical_seed(std::uint64_t seed);

}  // namespace acorl
