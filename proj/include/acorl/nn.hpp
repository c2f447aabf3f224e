// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "acorl/tape.hpp"
#include "acorl/tensor.hpp"

namespace acorl {

enum class HeadKind { kClassifier, kEmbedding };

HeadKind head_kind_from_string(const std::string& s);
std::string head_kind_to_string(HeadKind k);

// MLP architecture. The representation is the activation output of the
// last hidden layer (the input itself when hidden_dims is empty), so
// repr_dim must equal the last hidden width (or input_dim).
struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t repr_dim = 0;
  HeadKind head = HeadKind::kClassifier;
  std::size_t num_classes = 0;  // classifier head only
  std::string activation = "relu";

  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

// Named parameter list in fixed order: W0, b0, W1, b1, ..., then
// head_W, head_b for the classifier head. Weights are input x output.
using ParamList = std::vector<std::pair<std::string, Tensor>>;

struct Model {
  ModelSpec spec;
  ParamList params;

  const Tensor& param(const std::string& name) const;
  Tensor& param(const std::string& name);
};

// Glorot-uniform weights, zero biases. Deterministic: one Rng stream from
// `seed`, each weight matrix drawn row-major with
// uniform(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
Model build_model(const ModelSpec& spec, std::uint64_t seed);

struct ForwardResult {
  Tensor representation;  // B x repr_dim
  Tensor task_out;        // B x num_classes logits, or L2-normalized repr
};

// Forward through tape primitives. Pass tracked parameter tensors (from
// track_params) to record gradients, or the model's raw parameters for
// pure inference; the arithmetic is identical either way.
ForwardResult model_forward(Tape& tape, const ModelSpec& spec, const ParamList& params,
                            const Tensor& batch);

// Inference convenience on an untracked scratch tape.
ForwardResult model_forward(const Model& model, const Tensor& batch);

// Register every parameter on the tape (as trainable parameters when
// `trainable`, plain leaves otherwise) and return the tracked list.
ParamList track_params(Tape& tape, const ParamList& params, bool trainable = true);

struct OptimizerConfig {
  enum class Kind { kSgdMomentum, kAdam };
  Kind kind = Kind::kAdam;
  double lr = 1e-3;
  double momentum = 0.0;   // sgd_momentum
  double beta1 = 0.9;      // adam
  double beta2 = 0.999;    // adam
  double eps = 1e-8;       // adam
};

// Mutable view over parameters owned elsewhere, for joint updates across
// several parameter groups.
using ParamRefs = std::vector<std::pair<std::string, Tensor*>>;
ParamRefs param_refs(ParamList& params, const std::string& prefix = "");

// First-order optimizer with per-parameter accumulators keyed by name.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  // Applies one update in place. Every parameter must have a gradient of
  // matching shape.
  void step(const ParamRefs& params, const std::map<std::string, Tensor>& grads);

  long step_count() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
  long t_ = 0;
};

// FNV-1a over parameter names and little-endian f64 bytes in list order.
// Used for frozen-model assertions and trajectory comparisons.
std::uint64_t param_hash(const ParamList& params);

}  // namespace acorl
