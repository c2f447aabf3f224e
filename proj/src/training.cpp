// SPDX-License-Identifier: Apache-2.0
#include "acorl/training.hpp"

#include <algorithm>
#include <cmath>

#include "acorl/errors.hpp"
#include "acorl/rng.hpp"

namespace acorl {

namespace {

Tensor gather_rows(const Dataset& ds, const std::vector<int>& order, std::size_t begin,
                   std::size_t end, std::vector<int>* labels) {
  const std::size_t d = ds.input_dim();
  Tensor batch = Tensor::zeros({end - begin, d});
  labels->clear();
  for (std::size_t i = begin; i < end; ++i) {
    std::size_t row = static_cast<std::size_t>(order[i]);
    for (std::size_t k = 0; k < d; ++k) {
      batch.data[(i - begin) * d + k] = ds.features.data[row * d + k];
    }
    labels->push_back(ds.labels[row]);
  }
  return batch;
}

Tensor task_loss(Tape& tape, const ModelSpec& spec, const ForwardResult& fwd,
                 const std::vector<int>& labels, const Tensor* aam_weights,
                 const AamParams& aam) {
  if (spec.head == HeadKind::kClassifier) {
    return cross_entropy(tape, fwd.task_out, labels);
  }
  if (aam_weights == nullptr) {
    throw ContractError("task_loss: embedding head requires AAM class weights");
  }
  return aam_softmax(tape, fwd.task_out, *aam_weights, labels, aam);
}

Tensor init_aam_weights(const Dataset& train, std::size_t repr_dim, std::uint64_t seed) {
  std::size_t c = static_cast<std::size_t>(train.num_classes);
  Rng rng(seed);
  double bound = std::sqrt(6.0 / static_cast<double>(c + repr_dim));
  Tensor w = Tensor::zeros({c, repr_dim});
  for (double& x : w.data) x = rng.uniform(-bound, bound);
  return w;
}

// Gradient map keyed by the names used in the optimizer's ParamRefs.
std::map<std::string, Tensor> named_grads(const Gradients& grads, const ParamList& tracked,
                                          const std::string& prefix) {
  std::map<std::string, Tensor> out;
  for (const auto& [name, t] : tracked) {
    auto it = grads.params.find(t.node);
    if (it == grads.params.end()) {
      throw ContractError("named_grads: parameter '" + name + "' missing from gradient map");
    }
    out.emplace(prefix + name, it->second);
  }
  return out;
}

}  // namespace

ModelSpec projection_spec(std::size_t alliance_repr, std::size_t frozen_repr,
                          const ProjectionSpec& proj) {
  if (proj.depth < 1) throw ConfigError("projection: depth must be >= 1");
  std::size_t width = proj.hidden != 0 ? proj.hidden : std::max(alliance_repr, frozen_repr);
  ModelSpec spec;
  spec.input_dim = alliance_repr;
  spec.hidden_dims.assign(static_cast<std::size_t>(proj.depth - 1), width);
  spec.repr_dim = spec.hidden_dims.empty() ? alliance_repr : width;
  spec.head = HeadKind::kClassifier;  // final affine map to the frozen dim
  spec.num_classes = frozen_repr;
  return spec;
}

CombinedLossResult combined_loss(Tape& tape, const Tensor& batch, const std::vector<int>& labels,
                                 const TrackedNet& alliance, const Tensor* aam_weights,
                                 const AamParams& aam,
                                 const std::vector<TrackedNet>& projections,
                                 const std::vector<const Model*>& frozen, double lambda,
                                 double temperature) {
  if (lambda < 0.0) throw ContractError("combined_loss: lambda must be nonnegative");
  if (projections.size() != frozen.size()) {
    throw ContractError("combined_loss: need one projection per frozen model");
  }

  ForwardResult fwd = model_forward(tape, *alliance.spec, alliance.params, batch);
  Tensor l_task = task_loss(tape, *alliance.spec, fwd, labels, aam_weights, aam);

  CombinedLossResult res;
  res.task_loss = l_task.item();

  const std::size_t k_count = frozen.size();
  if (k_count == 0) {
    res.total = l_task;
    return res;
  }

  Tensor reversed = tape.grad_reverse(fwd.representation, 1.0);
  Tensor adv_sum;
  for (std::size_t k = 0; k < k_count; ++k) {
    const Model& fm = *frozen[k];
    if (fm.spec.input_dim != alliance.spec->input_dim) {
      throw ContractError("combined_loss: frozen model " + std::to_string(k) +
                          " input_dim does not match");
    }
    // Frozen representation, untracked: the knowledge to avoid.
    ForwardResult ffwd = model_forward(tape, fm.spec, fm.params, batch);
    Tensor v_k = fm.spec.head == HeadKind::kEmbedding ? ffwd.task_out : ffwd.representation;

    ForwardResult pfwd = model_forward(tape, *projections[k].spec, projections[k].params, reversed);
    const Tensor& z_k = pfwd.task_out;
    if (!same_shape(z_k.shape, v_k.shape)) {
      throw ContractError("combined_loss: projection " + std::to_string(k) + " output " +
                          shape_str(z_k.shape) + " does not match frozen representation " +
                          shape_str(v_k.shape));
    }
    Tensor l_adv = adv_loss(tape, z_k, v_k, temperature);
    res.adv.push_back(l_adv.item());
    adv_sum = k == 0 ? l_adv : tape.add(adv_sum, l_adv);
  }

  res.total = tape.add(l_task, tape.scale(adv_sum, lambda / static_cast<double>(k_count)));
  return res;
}

namespace {

// Shared minibatch loop. `frozen` empty means plain training; otherwise
// the combined objective is used with the given acorl options.
TrainResult train_loop(const ModelSpec& spec, const Dataset& train, const TrainOptions& opts,
                       const std::vector<const Model*>& frozen, const AcorlOptions& acorl) {
  spec.validate();
  if (train.size() == 0) throw ContractError("train: dataset is empty");
  if (train.input_dim() != spec.input_dim) {
    throw ContractError("train: dataset input dim " + std::to_string(train.input_dim()) +
                        " does not match model input_dim " + std::to_string(spec.input_dim));
  }
  if (spec.head == HeadKind::kClassifier &&
      static_cast<std::size_t>(train.num_classes) > spec.num_classes) {
    throw ContractError("train: dataset has more classes than the classifier head");
  }
  if (opts.epochs < 0) throw ConfigError("train: epochs must be nonnegative");
  if (opts.batch_size < 1) throw ConfigError("train: batch_size must be positive");

  TrainResult result;
  result.model = build_model(spec, subseed(opts.seed, "init/" + opts.model_name));

  const bool embedding = spec.head == HeadKind::kEmbedding;
  Tensor aam_w;
  if (embedding) {
    aam_w = init_aam_weights(train, spec.repr_dim, subseed(opts.seed, "aam/" + opts.model_name));
  }

  std::vector<std::uint64_t> frozen_hashes;
  for (std::size_t k = 0; k < frozen.size(); ++k) {
    frozen_hashes.push_back(param_hash(frozen[k]->params));
    ModelSpec pspec =
        projection_spec(spec.repr_dim, frozen[k]->spec.repr_dim, acorl.projection);
    result.projections.push_back(build_model(
        pspec, subseed(opts.seed, "proj/" + opts.model_name + "/" + std::to_string(k))));
  }

  Optimizer optimizer(opts.optimizer);
  Rng shuffle_rng(subseed(opts.seed, "shuffle/" + opts.model_name));

  std::vector<int> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    double adv_sum = 0.0;
    std::size_t seen = 0;

    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(opts.batch_size)) {
      std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(opts.batch_size));
      std::vector<int> labels;
      Tensor batch = gather_rows(train, order, begin, end, &labels);

      Tape tape;
      TrackedNet alliance{&spec, track_params(tape, result.model.params)};
      Tensor aam_tracked;
      if (embedding) aam_tracked = tape.param(aam_w);

      std::vector<TrackedNet> proj_nets;
      for (auto& proj : result.projections) {
        proj_nets.push_back({&proj.spec, track_params(tape, proj.params)});
      }

      CombinedLossResult loss =
          combined_loss(tape, batch, labels, alliance, embedding ? &aam_tracked : nullptr,
                        opts.aam, proj_nets, frozen, acorl.lambda, acorl.temperature);

      Gradients grads = tape.backward(loss.total);

      std::map<std::string, Tensor> grad_map = named_grads(grads, alliance.params, "");
      ParamRefs refs = param_refs(result.model.params);
      if (embedding) {
        grad_map.merge(named_grads(grads, {{"aam_W", aam_tracked}}, ""));
        refs.emplace_back("aam_W", &aam_w);
      }
      for (std::size_t k = 0; k < proj_nets.size(); ++k) {
        std::string prefix = "proj" + std::to_string(k) + "/";
        grad_map.merge(named_grads(grads, proj_nets[k].params, prefix));
        ParamRefs proj_refs = param_refs(result.projections[k].params, prefix);
        refs.insert(refs.end(), proj_refs.begin(), proj_refs.end());
      }
      optimizer.step(refs, grad_map);

      std::size_t bs = end - begin;
      loss_sum += loss.task_loss * static_cast<double>(bs);
      if (!loss.adv.empty()) {
        double mean_k = 0.0;
        for (double a : loss.adv) mean_k += a;
        mean_k /= static_cast<double>(loss.adv.size());
        adv_sum += mean_k * static_cast<double>(bs);
      }
      seen += bs;
    }

    EpochMetric m;
    m.epoch = epoch;
    m.task_loss = loss_sum / static_cast<double>(seen);
    m.adv_mean = frozen.empty() ? 0.0 : adv_sum / static_cast<double>(seen);
    m.params_hash = param_hash(result.model.params);
    if (opts.eval_fn) {
      m.eval_metric = opts.eval_fn(result.model);
      m.has_eval = true;
    }
    result.metrics.push_back(m);
  }

  for (std::size_t k = 0; k < frozen.size(); ++k) {
    if (param_hash(frozen[k]->params) != frozen_hashes[k]) {
      throw ContractError("train: frozen model " + std::to_string(k) + " was mutated");
    }
  }
  return result;
}

}  // namespace

TrainResult train_plain(const ModelSpec& spec, const Dataset& train, const TrainOptions& opts) {
  return train_loop(spec, train, opts, {}, AcorlOptions{});
}

TrainResult train_alliance(const ModelSpec& spec, const Dataset& train, const TrainOptions& opts,
                           const std::vector<const Model*>& frozen, const AcorlOptions& acorl) {
  if (acorl.lambda < 0.0) throw ConfigError("train_alliance: lambda must be nonnegative");
  if (acorl.temperature <= 0.0) throw ConfigError("train_alliance: temperature must be positive");
  for (const Model* fm : frozen) {
    if (fm->spec.input_dim != spec.input_dim) {
      throw ContractError("train_alliance: frozen model input_dim " +
                          std::to_string(fm->spec.input_dim) + " does not match " +
                          std::to_string(spec.input_dim));
    }
  }
  return train_loop(spec, train, opts, frozen, acorl);
}

}  // namespace acorl
