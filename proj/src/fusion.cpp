// SPDX-License-Identifier: Apache-2.0
#include "acorl/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "acorl/checkpoint.hpp"
#include "acorl/errors.hpp"
#include "acorl/eval.hpp"
#include "acorl/tape.hpp"

namespace acorl {

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "late") return FusionMode::kLate;
  if (s == "output_weighted") return FusionMode::kOutputWeighted;
  if (s == "output_logreg") return FusionMode::kOutputLogreg;
  throw ConfigError("unknown fusion mode '" + s + "'");
}

std::string fusion_mode_to_string(FusionMode m) {
  switch (m) {
    case FusionMode::kLate:
      return "late";
    case FusionMode::kOutputWeighted:
      return "output_weighted";
    case FusionMode::kOutputLogreg:
      return "output_logreg";
  }
  throw ContractError("fusion_mode_to_string: bad mode");
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& ctx) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t next = s.find(',', pos);
    std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
      throw DataError("fusion bundle: bad float list in " + ctx);
    }
    out.push_back(v);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

// Representation used for fusion: normalized embedding for embedding
// heads, last hidden activation otherwise.
Tensor member_representation(const Model& m, const Tensor& batch) {
  ForwardResult fwd = model_forward(m, batch);
  return m.spec.head == HeadKind::kEmbedding ? fwd.task_out : fwd.representation;
}

}  // namespace

Tensor fused_representation(const std::vector<const Model*>& members, const Tensor& batch) {
  if (members.empty()) throw ContractError("fused_representation: no members");
  std::size_t rows = batch.rows();
  std::size_t total = 0;
  for (const Model* m : members) total += m->spec.repr_dim;
  Tensor out = Tensor::zeros({rows, total});
  std::size_t col = 0;
  for (const Model* m : members) {
    Tensor repr = member_representation(*m, batch);
    std::size_t d = repr.shape[1];
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < d; ++k) out.data[r * total + col + k] = repr.data[r * d + k];
    }
    col += d;
  }
  return out;
}

FusionBundle train_late_fusion(const std::vector<const Model*>& members,
                               const std::vector<std::string>& member_paths, const Dataset& train,
                               const LateFusionOptions& opts) {
  if (members.empty()) throw ContractError("train_late_fusion: no members");
  if (opts.hidden_layers < 0) throw ConfigError("train_late_fusion: hidden_layers must be >= 0");

  HeadKind head = members.front()->spec.head;
  for (const Model* m : members) {
    if (m->spec.head != head) {
      throw ContractError("train_late_fusion: members must share a head kind");
    }
  }

  std::size_t total = 0;
  for (const Model* m : members) total += m->spec.repr_dim;
  if (total > opts.max_input) {
    throw ConfigError("train_late_fusion: concatenated representation dim " +
                      std::to_string(total) + " exceeds max_input " +
                      std::to_string(opts.max_input));
  }

  std::vector<std::uint64_t> hashes;
  for (const Model* m : members) hashes.push_back(param_hash(m->params));

  Dataset derived;
  derived.num_classes = train.num_classes;
  derived.labels = train.labels;
  derived.features = fused_representation(members, train.features);

  ModelSpec spec;
  spec.input_dim = total;
  spec.hidden_dims.assign(static_cast<std::size_t>(opts.hidden_layers), opts.hidden);
  spec.repr_dim = spec.hidden_dims.empty() ? total : opts.hidden;
  spec.head = head;
  spec.num_classes = head == HeadKind::kClassifier ? static_cast<std::size_t>(train.num_classes)
                                                   : 0;

  TrainResult result = train_plain(spec, derived, opts.train);

  for (std::size_t i = 0; i < members.size(); ++i) {
    if (param_hash(members[i]->params) != hashes[i]) {
      throw ContractError("train_late_fusion: member " + std::to_string(i) + " was mutated");
    }
  }

  FusionBundle bundle;
  bundle.mode = FusionMode::kLate;
  bundle.member_paths = member_paths;
  bundle.late_head = std::move(result.model);
  return bundle;
}

ForwardResult late_fusion_forward(const FusionBundle& bundle,
                                  const std::vector<const Model*>& members, const Tensor& batch) {
  if (bundle.mode != FusionMode::kLate) {
    throw ContractError("late_fusion_forward: bundle is not a late-fusion bundle");
  }
  Tensor fused = fused_representation(members, batch);
  return model_forward(bundle.late_head, fused);
}

Tensor output_fuse_weighted(const std::vector<Tensor>& member_logits,
                            const std::vector<double>& w) {
  if (member_logits.empty() || member_logits.size() != w.size()) {
    throw ContractError("output_fuse_weighted: need one weight per member");
  }
  double sum = 0.0;
  for (double x : w) {
    if (x < -1e-9) throw ContractError("output_fuse_weighted: negative weight");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ContractError("output_fuse_weighted: weights must sum to 1, got " +
                        std::to_string(sum));
  }

  const auto& shape = member_logits.front().shape;
  Tensor fused = Tensor::zeros(shape);
  Tape scratch;
  for (std::size_t m = 0; m < member_logits.size(); ++m) {
    if (!same_shape(member_logits[m].shape, shape)) {
      throw ContractError("output_fuse_weighted: member logits shape mismatch");
    }
    Tensor probs = scratch.softmax_rows(member_logits[m]);
    for (std::size_t i = 0; i < fused.size(); ++i) fused.data[i] += w[m] * probs.data[i];
  }
  return fused;
}

namespace {

void enumerate_compositions(int m, int total, std::vector<int>& cur,
                            const std::function<void(const std::vector<int>&)>& visit) {
  if (m == 1) {
    cur.push_back(total);
    visit(cur);
    cur.pop_back();
    return;
  }
  for (int k = 0; k <= total; ++k) {
    cur.push_back(k);
    enumerate_compositions(m - 1, total - k, cur, visit);
    cur.pop_back();
  }
}

}  // namespace

std::vector<double> fit_output_weights(const std::vector<Tensor>& member_logits,
                                       const std::vector<int>& labels, double resolution) {
  if (member_logits.empty()) throw ContractError("fit_output_weights: no members");
  if (resolution <= 0.0 || resolution > 1.0) {
    throw ConfigError("fit_output_weights: resolution must be in (0, 1]");
  }
  const int steps = static_cast<int>(std::lround(1.0 / resolution));
  const std::size_t m_count = member_logits.size();

  // Member probabilities once; candidates only reweight them.
  Tape scratch;
  std::vector<Tensor> probs;
  probs.reserve(m_count);
  for (const auto& logits : member_logits) probs.push_back(scratch.softmax_rows(logits));

  const std::size_t b = probs.front().shape[0];
  const std::size_t c = probs.front().shape[1];
  const double uniform = 1.0 / static_cast<double>(m_count);

  std::vector<double> best_w;
  double best_acc = -1.0;
  double best_dist = 0.0;

  std::vector<int> cur;
  Tensor fused = Tensor::zeros({b, c});
  enumerate_compositions(static_cast<int>(m_count), steps, cur, [&](const std::vector<int>& comp) {
    std::vector<double> w(m_count);
    for (std::size_t i = 0; i < m_count; ++i) {
      w[i] = static_cast<double>(comp[i]) / static_cast<double>(steps);
    }
    std::fill(fused.data.begin(), fused.data.end(), 0.0);
    for (std::size_t i = 0; i < m_count; ++i) {
      if (w[i] == 0.0) continue;
      for (std::size_t j = 0; j < fused.size(); ++j) fused.data[j] += w[i] * probs[i].data[j];
    }
    double acc = top1_accuracy(fused, labels);
    double dist = 0.0;
    for (double x : w) dist += (x - uniform) * (x - uniform);
    bool better = false;
    if (acc > best_acc + 1e-15) {
      better = true;
    } else if (std::abs(acc - best_acc) <= 1e-15) {
      if (dist < best_dist - 1e-15) {
        better = true;
      } else if (std::abs(dist - best_dist) <= 1e-15 && w < best_w) {
        better = true;
      }
    }
    if (better) {
      best_acc = acc;
      best_dist = dist;
      best_w = w;
    }
  });
  return best_w;
}

LogregFit fit_score_logreg(const std::vector<std::vector<double>>& member_scores,
                           const std::vector<bool>& genuine) {
  if (member_scores.empty()) throw ContractError("fit_score_logreg: no members");
  const std::size_t n = genuine.size();
  for (const auto& s : member_scores) {
    if (s.size() != n) throw ContractError("fit_score_logreg: score/label length mismatch");
  }
  bool has_pos = false, has_neg = false;
  for (bool g : genuine) (g ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw ConfigError("fit_score_logreg: calibration split needs both classes");
  }

  const std::size_t m_count = member_scores.size();
  LogregFit fit;
  fit.beta.assign(m_count, 0.0);
  fit.beta0 = 0.0;

  // Full-batch gradient descent on binary cross-entropy. Scores live in
  // [-1, 1], so lr = 1 is stable; iteration caps the separable case where
  // the gradient norm decays only logarithmically.
  constexpr double kLr = 1.0;
  constexpr double kTol = 1e-8;
  constexpr long kMaxIter = 200000;

  for (long iter = 0; iter < kMaxIter; ++iter) {
    std::vector<double> gb(m_count, 0.0);
    double gb0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = fit.beta0;
      for (std::size_t m = 0; m < m_count; ++m) z += fit.beta[m] * member_scores[m][i];
      double sigma = 1.0 / (1.0 + std::exp(-z));
      double delta = sigma - (genuine[i] ? 1.0 : 0.0);
      for (std::size_t m = 0; m < m_count; ++m) gb[m] += delta * member_scores[m][i];
      gb0 += delta;
    }
    double norm_sq = gb0 * gb0;
    for (std::size_t m = 0; m < m_count; ++m) norm_sq += gb[m] * gb[m];
    double inv_n = 1.0 / static_cast<double>(n);
    if (std::sqrt(norm_sq) * inv_n < kTol) break;
    for (std::size_t m = 0; m < m_count; ++m) fit.beta[m] -= kLr * gb[m] * inv_n;
    fit.beta0 -= kLr * gb0 * inv_n;
  }
  return fit;
}

std::vector<double> logreg_fused_scores(const LogregFit& fit,
                                        const std::vector<std::vector<double>>& member_scores) {
  if (member_scores.size() != fit.beta.size()) {
    throw ContractError("logreg_fused_scores: member count mismatch");
  }
  const std::size_t n = member_scores.empty() ? 0 : member_scores.front().size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double z = fit.beta0;
    for (std::size_t m = 0; m < member_scores.size(); ++m) {
      z += fit.beta[m] * member_scores[m][i];
    }
    out[i] = 1.0 / (1.0 + std::exp(-z));
  }
  return out;
}

void save_fusion_bundle(const FusionBundle& bundle, const std::filesystem::path& path) {
  Container c;
  c.type = "fusion";
  c.fields.emplace_back("mode", fusion_mode_to_string(bundle.mode));
  c.fields.emplace_back("members", std::to_string(bundle.member_paths.size()));
  for (std::size_t i = 0; i < bundle.member_paths.size(); ++i) {
    c.fields.emplace_back("member" + std::to_string(i), bundle.member_paths[i]);
  }
  if (bundle.mode == FusionMode::kLate) {
    const ModelSpec& s = bundle.late_head.spec;
    c.fields.emplace_back("head", head_kind_to_string(s.head));
    c.fields.emplace_back("input_dim", std::to_string(s.input_dim));
    std::ostringstream hidden;
    if (s.hidden_dims.empty()) {
      hidden << "-";
    } else {
      for (std::size_t i = 0; i < s.hidden_dims.size(); ++i) {
        if (i) hidden << ",";
        hidden << s.hidden_dims[i];
      }
    }
    c.fields.emplace_back("hidden_dims", hidden.str());
    c.fields.emplace_back("repr_dim", std::to_string(s.repr_dim));
    c.fields.emplace_back("num_classes", std::to_string(s.num_classes));
    c.fields.emplace_back("activation", s.activation);
    c.params = bundle.late_head.params;
  } else if (bundle.mode == FusionMode::kOutputWeighted) {
    std::ostringstream w;
    for (std::size_t i = 0; i < bundle.weights.size(); ++i) {
      if (i) w << ",";
      w << format_double(bundle.weights[i]);
    }
    c.fields.emplace_back("weights", w.str());
  } else {
    std::ostringstream bvals;
    for (std::size_t i = 0; i < bundle.beta.size(); ++i) {
      if (i) bvals << ",";
      bvals << format_double(bundle.beta[i]);
    }
    c.fields.emplace_back("beta", bvals.str());
    c.fields.emplace_back("beta0", format_double(bundle.beta0));
  }
  write_container(path, c);
}

FusionBundle load_fusion_bundle(const std::filesystem::path& path) {
  Container c = read_container(path);
  if (c.type != "fusion") {
    throw DataError("fusion bundle '" + path.string() + "': expected type fusion, got " + c.type);
  }
  FusionBundle bundle;
  std::size_t member_count = 0;
  ModelSpec head_spec;
  bool has_head_fields = false;
  for (const auto& [k, v] : c.fields) {
    if (k == "mode") {
      bundle.mode = fusion_mode_from_string(v);
    } else if (k == "members") {
      member_count = std::stoull(v);
    } else if (k.rfind("member", 0) == 0 && k.size() > 6) {
      bundle.member_paths.push_back(v);
    } else if (k == "head") {
      head_spec.head = head_kind_from_string(v);
      has_head_fields = true;
    } else if (k == "input_dim") {
      head_spec.input_dim = std::stoull(v);
    } else if (k == "hidden_dims") {
      head_spec.hidden_dims.clear();
      if (v != "-") {
        std::size_t pos = 0;
        while (pos <= v.size()) {
          std::size_t next = v.find(',', pos);
          head_spec.hidden_dims.push_back(
              std::stoull(v.substr(pos, next == std::string::npos ? std::string::npos : next - pos)));
          if (next == std::string::npos) break;
          pos = next + 1;
        }
      }
    } else if (k == "repr_dim") {
      head_spec.repr_dim = std::stoull(v);
    } else if (k == "num_classes") {
      head_spec.num_classes = std::stoull(v);
    } else if (k == "activation") {
      head_spec.activation = v;
    } else if (k == "weights") {
      bundle.weights = parse_double_list(v, "weights");
    } else if (k == "beta") {
      bundle.beta = parse_double_list(v, "beta");
    } else if (k == "beta0") {
      bundle.beta0 = parse_double_list(v, "beta0").at(0);
    } else {
      throw DataError("fusion bundle '" + path.string() + "': unknown field '" + k + "'");
    }
  }
  if (bundle.member_paths.size() != member_count) {
    throw DataError("fusion bundle '" + path.string() + "': member count mismatch");
  }
  if (bundle.mode == FusionMode::kLate) {
    if (!has_head_fields) {
      throw DataError("fusion bundle '" + path.string() + "': late bundle missing head spec");
    }
    bundle.late_head.spec = head_spec;
    bundle.late_head.params = std::move(c.params);
  }
  return bundle;
}

}  // namespace acorl
