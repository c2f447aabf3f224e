// SPDX-License-Identifier: Apache-2.0
#include "acorl/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "acorl/errors.hpp"
#include "acorl/rng.hpp"

namespace acorl {

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "classifier") return HeadKind::kClassifier;
  if (s == "embedding") return HeadKind::kEmbedding;
  throw ConfigError("unknown head kind '" + s + "' (expected classifier or embedding)");
}

std::string head_kind_to_string(HeadKind k) {
  return k == HeadKind::kClassifier ? "classifier" : "embedding";
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw ConfigError("ModelSpec: input_dim must be positive");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ConfigError("ModelSpec: hidden dims must be positive");
  }
  std::size_t expect = hidden_dims.empty() ? input_dim : hidden_dims.back();
  if (repr_dim != expect) {
    throw ConfigError("ModelSpec: repr_dim must equal the last hidden width (" +
                      std::to_string(expect) + "), got " + std::to_string(repr_dim));
  }
  if (head == HeadKind::kClassifier && num_classes == 0) {
    throw ConfigError("ModelSpec: classifier head requires num_classes > 0");
  }
  if (activation != "relu") {
    throw ConfigError("ModelSpec: unsupported activation '" + activation + "'");
  }
}

const Tensor& Model::param(const std::string& name) const {
  for (const auto& [n, t] : params) {
    if (n == name) return t;
  }
  throw ContractError("Model: no parameter named '" + name + "'");
}

Tensor& Model::param(const std::string& name) {
  for (auto& [n, t] : params) {
    if (n == name) return t;
  }
  throw ContractError("Model: no parameter named '" + name + "'");
}

namespace {

Tensor glorot_matrix(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(fan_in * fan_out);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor({fan_in, fan_out}, std::move(v));
}

}  // namespace

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Model m;
  m.spec = spec;
  std::size_t in = spec.input_dim;
  for (std::size_t l = 0; l < spec.hidden_dims.size(); ++l) {
    std::size_t out = spec.hidden_dims[l];
    m.params.emplace_back("W" + std::to_string(l), glorot_matrix(in, out, rng));
    m.params.emplace_back("b" + std::to_string(l), Tensor::zeros({out}));
    in = out;
  }
  if (spec.head == HeadKind::kClassifier) {
    m.params.emplace_back("head_W", glorot_matrix(spec.repr_dim, spec.num_classes, rng));
    m.params.emplace_back("head_b", Tensor::zeros({spec.num_classes}));
  }
  return m;
}

ForwardResult model_forward(Tape& tape, const ModelSpec& spec, const ParamList& params,
                            const Tensor& batch) {
  if (batch.shape.size() != 2 || batch.shape[1] != spec.input_dim) {
    throw ContractError("model_forward: batch must be B x " + std::to_string(spec.input_dim) +
                        ", got " + shape_str(batch.shape));
  }
  std::size_t layers = spec.hidden_dims.size();
  std::size_t expected = 2 * layers + (spec.head == HeadKind::kClassifier ? 2 : 0);
  if (params.size() != expected) {
    throw ContractError("model_forward: expected " + std::to_string(expected) +
                        " parameters, got " + std::to_string(params.size()));
  }

  Tensor h = batch;
  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor& w = params[2 * l].second;
    const Tensor& b = params[2 * l + 1].second;
    h = tape.relu(tape.broadcast_add_row(tape.matmul(h, w), b));
  }

  ForwardResult out;
  out.representation = h;
  if (spec.head == HeadKind::kClassifier) {
    const Tensor& hw = params[2 * layers].second;
    const Tensor& hb = params[2 * layers + 1].second;
    out.task_out = tape.broadcast_add_row(tape.matmul(h, hw), hb);
  } else {
    out.task_out = tape.l2_normalize_rows(h);
  }
  return out;
}

ForwardResult model_forward(const Model& model, const Tensor& batch) {
  Tape scratch;
  return model_forward(scratch, model.spec, model.params, batch);
}

ParamList track_params(Tape& tape, const ParamList& params, bool trainable) {
  ParamList out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) {
    out.emplace_back(name, trainable ? tape.param(t) : tape.leaf(t));
  }
  return out;
}

ParamRefs param_refs(ParamList& params, const std::string& prefix) {
  ParamRefs refs;
  refs.reserve(params.size());
  for (auto& [name, t] : params) refs.emplace_back(prefix + name, &t);
  return refs;
}

void Optimizer::step(const ParamRefs& params, const std::map<std::string, Tensor>& grads) {
  ++t_;
  for (const auto& [name, theta_ptr] : params) {
    Tensor& theta = *theta_ptr;
    auto it = grads.find(name);
    if (it == grads.end()) {
      throw ContractError("Optimizer::step: missing gradient for '" + name + "'");
    }
    const Tensor& g = it->second;
    if (!same_shape(g.shape, theta.shape)) {
      throw ContractError("Optimizer::step: gradient shape " + shape_str(g.shape) +
                          " does not match parameter '" + name + "' " + shape_str(theta.shape));
    }
    if (cfg_.kind == OptimizerConfig::Kind::kSgdMomentum) {
      auto& vel = m_[name];
      if (vel.empty()) vel.assign(theta.size(), 0.0);
      for (std::size_t i = 0; i < theta.size(); ++i) {
        vel[i] = cfg_.momentum * vel[i] + g.data[i];
        theta.data[i] -= cfg_.lr * vel[i];
      }
    } else {
      auto& m = m_[name];
      auto& v = v_[name];
      if (m.empty()) m.assign(theta.size(), 0.0);
      if (v.empty()) v.assign(theta.size(), 0.0);
      double b1t = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      double b2t = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g.data[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
        double mhat = m[i] / b1t;
        double vhat = v[i] / b2t;
        theta.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }
}

std::uint64_t param_hash(const ParamList& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, t] : params) {
    mix_bytes(name.data(), name.size());
    for (double d : t.data) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
      unsigned char le[8];
      for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(bits >> (8 * i));
      mix_bytes(le, 8);
    }
  }
  return h;
}

}  // namespace acorl
