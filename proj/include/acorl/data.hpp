// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "acorl/tensor.hpp"

namespace acorl {

// Labeled feature matrix. Features are laid out [group 0 | group 1 | ... |
// noise dims]; rows are class-major (all of class 0 first).
struct Dataset {
  Tensor features;  // N x d
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t input_dim() const { return features.shape.size() == 2 ? features.shape[1] : 0; }
};

struct CueGroup {
  std::size_t dims = 0;
  double separation = 0.0;
};

// Synthetic classification data with several mutually independent cue
// groups, each individually informative about the class.
struct ComplementaryCueSpec {
  int num_classes = 0;
  int samples_per_class = 0;
  std::vector<CueGroup> cue_groups;
  std::size_t noise_dims = 0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  std::size_t input_dim() const;
  void validate() const;
};

struct GenerationReport {
  // Held-out accuracy of a nearest-centroid classifier restricted to each
  // group's dims (fit on the first half of every class, scored on the
  // second half).
  std::vector<double> per_group_oracle_acc;
  std::vector<std::size_t> rejection_attempts;
};

// Per class and group, a centroid is drawn uniformly on the sphere of
// radius separation/2 in that group's subspace and redrawn until all
// pairwise centroid distances reach separation * 0.8; samples add unit
// Gaussian noise per cue dim. Noise dims are N(0, noise_sigma^2).
// Deterministic given the spec (all draws come from one Rng(spec.seed)
// stream in documented order).
Dataset gen_complementary_classes(const ComplementaryCueSpec& spec, GenerationReport* report);

struct Trial {
  bool genuine = false;
  int enroll_id = 0;
  int test_id = 0;
};

using TrialList = std::vector<Trial>;

// Samples genuine (same-class) and impostor (cross-class) pairs uniformly
// without replacement over candidate_ids; pairs are unordered and never
// (i, i). Ids index into the dataset the labels came from.
TrialList gen_trial_list(const std::vector<int>& labels, const std::vector<int>& candidate_ids,
                         int genuine_per_class, int impostor_total, std::uint64_t seed);

void write_trial_list(const std::filesystem::path& path, const TrialList& trials);
TrialList read_trial_list(const std::filesystem::path& path);

// CSV round-trip: header `label,f_0,...,f_{d-1}`, floats printed with 17
// significant digits so 64-bit values survive exactly.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset_csv(const std::filesystem::path& path);

// Deterministic shuffle split into train / eval / calibration index sets.
struct Splits {
  std::vector<int> train;
  std::vector<int> eval;
  std::vector<int> calibration;
};
Splits make_splits(std::size_t n, double train_frac, double eval_frac, double calib_frac,
                   std::uint64_t seed);

Dataset subset(const Dataset& ds, const std::vector<int>& ids);

// Feature-wise mean over all rows, the default attribution baseline.
Tensor feature_mean(const Dataset& ds);

}  // namespace acorl
