// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "acorl/data.hpp"
#include "acorl/losses.hpp"
#include "acorl/nn.hpp"
#include "acorl/tape.hpp"

namespace acorl {

struct TrainOptions {
  OptimizerConfig optimizer;
  int epochs = 10;
  int batch_size = 64;
  std::uint64_t seed = 0;
  std::string model_name = "model";
  AamParams aam;  // task loss for embedding heads
  // Optional per-epoch metric, evaluated on a model snapshot.
  std::function<double(const Model&)> eval_fn;
};

struct EpochMetric {
  int epoch = 0;
  double task_loss = 0.0;
  double adv_mean = 0.0;
  double eval_metric = 0.0;
  bool has_eval = false;
  std::uint64_t params_hash = 0;
};

struct TrainResult {
  Model model;
  std::vector<Model> projections;  // alliance runs only
  std::vector<EpochMetric> metrics;
};

// Minibatch descent on the task loss. RNG streams are derived from
// opts.seed per component ("init/<name>", "shuffle/<name>", "aam/<name>"),
// so a run is a pure function of (spec, dataset, opts).
TrainResult train_plain(const ModelSpec& spec, const Dataset& train, const TrainOptions& opts);

// Projection network d_k: depth affine layers with relu between, output
// dimension matched to the frozen model's representation. hidden == 0
// picks max(alliance repr_dim, frozen repr_dim).
struct ProjectionSpec {
  int depth = 2;
  std::size_t hidden = 0;
};

struct AcorlOptions {
  double lambda = 1.0;
  double temperature = 1.0;
  ProjectionSpec projection;
};

// Tracked network view for loss construction: spec plus tape-tracked
// parameters.
struct TrackedNet {
  const ModelSpec* spec = nullptr;
  ParamList params;
};

struct CombinedLossResult {
  Tensor total;
  double task_loss = 0.0;
  std::vector<double> adv;  // one per frozen model
};

// total = L_t + (lambda/K) * sum_k adv_loss(d_k(grad_reverse(z', 1)), v_k, T)
// with v_k the frozen model's representation computed without tracking.
// Descending `total` therefore pushes the projections toward matching v_k
// while the alliance model is pushed away from it.
CombinedLossResult combined_loss(Tape& tape, const Tensor& batch, const std::vector<int>& labels,
                                 const TrackedNet& alliance, const Tensor* aam_weights,
                                 const AamParams& aam,
                                 const std::vector<TrackedNet>& projections,
                                 const std::vector<const Model*>& frozen, double lambda,
                                 double temperature);

// Sequential alliance training against frozen members: jointly updates the
// alliance model, its head, and the projections each minibatch. With
// lambda == 0 the parameter trajectory is bitwise identical to
// train_plain under the same options.
TrainResult train_alliance(const ModelSpec& spec, const Dataset& train, const TrainOptions& opts,
                           const std::vector<const Model*>& frozen, const AcorlOptions& acorl);

// Projection architecture for a frozen member, as used by train_alliance.
ModelSpec projection_spec(std::size_t alliance_repr, std::size_t frozen_repr,
                          const ProjectionSpec& proj);

}  // namespace acorl
