// SPDX-License-Identifier: Apache-2.0
#include "acorl/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "acorl/errors.hpp"

namespace acorl {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("config: unknown key '" + it.key() + "' in " + ctx);
    }
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + key + "'");
  }
}

template <typename T>
T get_required(const json& obj, const std::string& key, const std::string& ctx) {
  if (!obj.contains(key)) {
    throw ConfigError("config: missing required key '" + key + "' in " + ctx);
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + key + "' in " + ctx);
  }
}

DatasetConfig parse_dataset(const json& obj) {
  check_keys(obj,
             {"path", "classes", "samples_per_class", "cue_groups", "noise_dims", "noise_sigma",
              "seed"},
             "dataset");
  DatasetConfig out;
  if (obj.contains("path")) {
    out.path = get_required<std::string>(obj, "path", "dataset");
    if (obj.size() != 1) {
      throw ConfigError("config: dataset.path excludes generator keys");
    }
    return out;
  }
  ComplementaryCueSpec spec;
  spec.num_classes = get_required<int>(obj, "classes", "dataset");
  spec.samples_per_class = get_required<int>(obj, "samples_per_class", "dataset");
  if (!obj.contains("cue_groups") || !obj.at("cue_groups").is_array()) {
    throw ConfigError("config: dataset.cue_groups must be an array");
  }
  for (const auto& g : obj.at("cue_groups")) {
    check_keys(g, {"dims", "separation"}, "dataset.cue_groups[]");
    CueGroup group;
    group.dims = get_required<std::size_t>(g, "dims", "cue_groups[]");
    group.separation = get_required<double>(g, "separation", "cue_groups[]");
    spec.cue_groups.push_back(group);
  }
  spec.noise_dims = get_or<std::size_t>(obj, "noise_dims", 0);
  spec.noise_sigma = get_or<double>(obj, "noise_sigma", 1.0);
  DatasetConfig cfg;
  if (obj.contains("seed")) {
    spec.seed = get_required<std::uint64_t>(obj, "seed", "dataset");
    cfg.generator_seed_explicit = true;
  }
  cfg.generator = spec;
  return cfg;
}

OptimizerConfig parse_optimizer(const json& obj) {
  OptimizerConfig opt;
  std::string kind = get_or<std::string>(obj, "optimizer", "adam");
  if (kind == "adam") {
    opt.kind = OptimizerConfig::Kind::kAdam;
  } else if (kind == "sgd_momentum") {
    opt.kind = OptimizerConfig::Kind::kSgdMomentum;
  } else {
    throw ConfigError("config: unknown optimizer '" + kind + "'");
  }
  opt.lr = get_or<double>(obj, "lr", 1e-3);
  opt.momentum = get_or<double>(obj, "momentum", 0.0);
  opt.beta1 = get_or<double>(obj, "beta1", 0.9);
  opt.beta2 = get_or<double>(obj, "beta2", 0.999);
  opt.eps = get_or<double>(obj, "eps", 1e-8);
  return opt;
}

TrainConfig parse_train(const json& obj) {
  check_keys(obj, {"optimizer", "lr", "momentum", "beta1", "beta2", "eps", "epochs", "batch_size"},
             "train");
  TrainConfig cfg;
  cfg.optimizer = parse_optimizer(obj);
  cfg.epochs = get_or<int>(obj, "epochs", 10);
  cfg.batch_size = get_or<int>(obj, "batch_size", 64);
  return cfg;
}

}  // namespace

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': parse error: " + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(root,
             {"seed", "out", "dataset", "split", "model", "train", "aam", "acorl", "fusion",
              "trials", "eval", "attribution", "report", "gradcheck"},
             "top level");

  ExperimentConfig cfg;
  cfg.seed = get_or<std::uint64_t>(root, "seed", 0);
  cfg.out = get_or<std::string>(root, "out", "out");

  if (root.contains("dataset")) cfg.dataset = parse_dataset(root.at("dataset"));

  if (root.contains("split")) {
    const json& s = root.at("split");
    check_keys(s, {"train", "eval", "calibration"}, "split");
    cfg.split.train = get_or<double>(s, "train", 0.7);
    cfg.split.eval = get_or<double>(s, "eval", 0.2);
    cfg.split.calibration = get_or<double>(s, "calibration", 0.1);
  }

  if (root.contains("model")) {
    const json& m = root.at("model");
    check_keys(m, {"name", "hidden_dims", "repr_dim", "head"}, "model");
    ModelConfig mc;
    mc.name = get_or<std::string>(m, "name", "model");
    mc.hidden_dims = get_or<std::vector<std::size_t>>(m, "hidden_dims", {});
    mc.repr_dim = get_or<std::size_t>(m, "repr_dim", 0);
    mc.head = head_kind_from_string(get_or<std::string>(m, "head", "classifier"));
    if (mc.repr_dim == 0) {
      mc.repr_dim = mc.hidden_dims.empty() ? 0 : mc.hidden_dims.back();
    }
    cfg.model = mc;
  }

  if (root.contains("train")) cfg.train = parse_train(root.at("train"));

  if (root.contains("aam")) {
    const json& a = root.at("aam");
    check_keys(a, {"margin", "scale"}, "aam");
    cfg.aam.margin = get_or<double>(a, "margin", 0.2);
    cfg.aam.scale = get_or<double>(a, "scale", 32.0);
  }

  if (root.contains("acorl")) {
    const json& a = root.at("acorl");
    check_keys(a, {"lambda", "temperature", "avoid", "projection"}, "acorl");
    AcorlSection sec;
    sec.lambda = get_or<double>(a, "lambda", 1.0);
    sec.temperature = get_or<double>(a, "temperature", 1.0);
    sec.avoid = get_or<std::vector<std::string>>(a, "avoid", {});
    if (a.contains("projection")) {
      const json& p = a.at("projection");
      check_keys(p, {"depth", "hidden"}, "acorl.projection");
      sec.projection.depth = get_or<int>(p, "depth", 2);
      sec.projection.hidden = get_or<std::size_t>(p, "hidden", 0);
    }
    if (sec.lambda < 0.0) throw ConfigError("config: acorl.lambda must be nonnegative");
    if (sec.temperature <= 0.0) throw ConfigError("config: acorl.temperature must be positive");
    cfg.acorl = sec;
  }

  if (root.contains("fusion")) {
    const json& f = root.at("fusion");
    check_keys(f, {"mode", "members", "regime", "late_hidden", "late_hidden_layers",
                   "max_late_input"},
               "fusion");
    FusionConfig fc;
    fc.mode = get_or<std::string>(f, "mode", "late");
    fc.members = get_required<std::vector<std::string>>(f, "members", "fusion");
    fc.regime = get_or<std::string>(f, "regime", "plain");
    fc.late_hidden = get_or<std::size_t>(f, "late_hidden", 512);
    fc.late_hidden_layers = get_or<int>(f, "late_hidden_layers", 2);
    fc.max_late_input = get_or<std::size_t>(f, "max_late_input", 4096);
    fusion_mode_from_string(fc.mode);  // validate
    cfg.fusion = fc;
  }

  if (root.contains("trials")) {
    const json& t = root.at("trials");
    check_keys(t,
               {"genuine_per_class", "impostor_total", "calibration_genuine_per_class",
                "calibration_impostor_total"},
               "trials");
    cfg.trials.genuine_per_class = get_or<int>(t, "genuine_per_class", 40);
    cfg.trials.impostor_total = get_or<int>(t, "impostor_total", 1280);
    cfg.trials.calibration_genuine_per_class =
        get_or<int>(t, "calibration_genuine_per_class", 20);
    cfg.trials.calibration_impostor_total = get_or<int>(t, "calibration_impostor_total", 640);
  }

  if (root.contains("eval")) {
    const json& e = root.at("eval");
    check_keys(e, {"checkpoint", "regime", "metric"}, "eval");
    EvalSection ev;
    ev.checkpoint = get_required<std::string>(e, "checkpoint", "eval");
    ev.regime = get_or<std::string>(e, "regime", "plain");
    ev.metric = get_or<std::string>(e, "metric", "top1");
    if (ev.metric != "top1" && ev.metric != "eer") {
      throw ConfigError("config: eval.metric must be top1 or eer");
    }
    cfg.eval = ev;
  }

  if (root.contains("attribution")) {
    const json& a = root.at("attribution");
    check_keys(a, {"models", "steps", "samples", "baseline", "pairs"}, "attribution");
    AttributionConfig ac;
    ac.models = get_required<std::vector<std::string>>(a, "models", "attribution");
    ac.steps = get_or<int>(a, "steps", 64);
    ac.samples = get_or<int>(a, "samples", 64);
    ac.baseline = get_or<std::string>(a, "baseline", "mean");
    if (ac.baseline != "mean" && ac.baseline != "zero") {
      throw ConfigError("config: attribution.baseline must be mean or zero");
    }
    if (a.contains("pairs")) {
      for (const auto& pr : a.at("pairs")) {
        if (!pr.is_array() || pr.size() != 2) {
          throw ConfigError("config: attribution.pairs entries must be [i, j]");
        }
        ac.pairs.emplace_back(pr.at(0).get<int>(), pr.at(1).get<int>());
      }
    }
    cfg.attribution = ac;
  }

  if (root.contains("report")) {
    const json& r = root.at("report");
    check_keys(r, {"runs"}, "report");
    ReportSection rs;
    rs.runs = get_required<std::vector<std::string>>(r, "runs", "report");
    cfg.report = rs;
  }

  if (root.contains("gradcheck")) {
    const json& g = root.at("gradcheck");
    check_keys(g, {"compositions"}, "gradcheck");
    cfg.gradcheck.compositions = get_or<int>(g, "compositions", 100);
  }

  return cfg;
}

}  // namespace acorl
