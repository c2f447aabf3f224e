// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "acorl/data.hpp"
#include "acorl/fusion.hpp"
#include "acorl/losses.hpp"
#include "acorl/nn.hpp"
#include "acorl/training.hpp"

namespace acorl {

// Sections of the experiment configuration document (JSON). Parsing is
// strict: unknown keys anywhere are configuration errors. The published
// schema lives in configs/config.schema.json.

struct DatasetConfig {
  std::optional<std::string> path;                  // load a CSV
  std::optional<ComplementaryCueSpec> generator;    // or generate
  bool generator_seed_explicit = false;             // else derived from run seed
};

struct SplitConfig {
  double train = 0.7;
  double eval = 0.2;
  double calibration = 0.1;
};

struct ModelConfig {
  std::string name = "model";
  std::vector<std::size_t> hidden_dims;
  std::size_t repr_dim = 0;
  HeadKind head = HeadKind::kClassifier;
};

struct TrainConfig {
  OptimizerConfig optimizer;
  int epochs = 10;
  int batch_size = 64;
};

struct AcorlSection {
  double lambda = 1.0;
  double temperature = 1.0;
  std::vector<std::string> avoid;  // frozen checkpoint paths
  ProjectionSpec projection;
};

struct FusionConfig {
  std::string mode = "late";
  std::vector<std::string> members;
  std::string regime = "plain";  // reporting label
  std::size_t late_hidden = 512;
  int late_hidden_layers = 2;
  std::size_t max_late_input = 4096;
};

struct TrialsConfig {
  int genuine_per_class = 40;
  int impostor_total = 1280;
  int calibration_genuine_per_class = 20;
  int calibration_impostor_total = 640;
};

struct EvalSection {
  std::string checkpoint;
  std::string regime = "plain";
  std::string metric = "top1";  // top1 | eer
};

struct AttributionConfig {
  std::vector<std::string> models;
  int steps = 64;
  int samples = 64;
  std::string baseline = "mean";  // mean | zero
  std::vector<std::pair<int, int>> pairs;
};

struct ReportSection {
  std::vector<std::string> runs;
};

struct GradcheckConfig {
  int compositions = 100;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::optional<DatasetConfig> dataset;
  SplitConfig split;
  std::optional<ModelConfig> model;
  TrainConfig train;
  AamParams aam;
  std::optional<AcorlSection> acorl;
  std::optional<FusionConfig> fusion;
  TrialsConfig trials;
  std::optional<EvalSection> eval;
  std::optional<AttributionConfig> attribution;
  std::optional<ReportSection> report;
  GradcheckConfig gradcheck;
};

ExperimentConfig load_config_file(const std::filesystem::path& path);

}  // namespace acorl
