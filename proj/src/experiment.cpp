// SPDX-License-Identifier: Apache-2.0
#include "acorl/experiment.hpp"

#include <algorithm>

#include "acorl/errors.hpp"
#include "acorl/rng.hpp"

namespace acorl {

PreparedData prepare_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset) throw ConfigError("config: this command requires a dataset section");
  PreparedData out;
  if (cfg.dataset->path) {
    out.full = read_dataset_csv(*cfg.dataset->path);
  } else {
    ComplementaryCueSpec spec = *cfg.dataset->generator;
    if (!cfg.dataset->generator_seed_explicit) spec.seed = subseed(cfg.seed, "data");
    out.full = gen_complementary_classes(spec, &out.gen_report);
    out.generated = true;
  }
  out.splits = make_splits(out.full.size(), cfg.split.train, cfg.split.eval,
                           cfg.split.calibration, subseed(cfg.seed, "split"));
  return out;
}

double eval_accuracy(const Model& model, const Dataset& eval_set) {
  ForwardResult fwd = model_forward(model, eval_set.features);
  return top1_accuracy(fwd.task_out, eval_set.labels);
}

TrialList make_split_trials(const Dataset& full, const std::vector<int>& split_ids,
                            int genuine_per_class, int impostor_total, std::uint64_t seed) {
  return gen_trial_list(full.labels, split_ids, genuine_per_class, impostor_total, seed);
}

EerResult eval_model_eer(const Model& model, const Dataset& full, const TrialList& trials) {
  std::vector<double> scores = cosine_trial_scores(model, full, trials);
  return eer(scores, trial_labels(trials));
}

std::vector<AttributionMap> attribution_maps(const Model& model, const std::string& model_id,
                                             const Dataset& full,
                                             const std::vector<int>& sample_ids,
                                             const Tensor& baseline, int steps) {
  const std::size_t d = full.input_dim();
  std::vector<AttributionMap> maps;
  maps.reserve(sample_ids.size());
  for (int id : sample_ids) {
    Tensor x = Tensor::zeros({1, d});
    for (std::size_t k = 0; k < d; ++k) {
      x.data[k] = full.features.data[static_cast<std::size_t>(id) * d + k];
    }
    IgTarget target = IgTarget::class_logit(full.labels[static_cast<std::size_t>(id)]);
    AttributionMap map = integrated_gradients(model, target, x, baseline, steps);
    map.model_id = model_id;
    map.sample_id = id;
    map.baseline_id = -1;
    maps.push_back(std::move(map));
  }
  return maps;
}

// ---- canonical experiment -------------------------------------------------

ComplementaryCueSpec canonical_cue_spec(std::uint64_t dataset_seed) {
  ComplementaryCueSpec spec;
  spec.num_classes = 8;
  spec.samples_per_class = 600;
  spec.cue_groups = {{12, 7.0}, {12, 5.0}};
  spec.noise_dims = 16;
  spec.noise_sigma = 1.0;
  spec.seed = dataset_seed;
  return spec;
}

ModelConfig canonical_model_config(HeadKind head) {
  ModelConfig mc;
  mc.hidden_dims = {16};
  mc.repr_dim = 16;
  mc.head = head;
  return mc;
}

TrainConfig canonical_train_config(HeadKind head) {
  TrainConfig tc;
  tc.optimizer.kind = OptimizerConfig::Kind::kAdam;
  tc.optimizer.lr = 1e-3;
  tc.epochs = head == HeadKind::kEmbedding ? 15 : 12;
  tc.batch_size = 64;
  return tc;
}

TrainConfig canonical_fusion_train_config() {
  TrainConfig tc;
  tc.optimizer.kind = OptimizerConfig::Kind::kAdam;
  tc.optimizer.lr = 1e-3;
  tc.epochs = 8;
  tc.batch_size = 128;
  return tc;
}

namespace {

ModelSpec classifier_spec(const ModelConfig& mc, std::size_t input_dim, int num_classes) {
  ModelSpec spec;
  spec.input_dim = input_dim;
  spec.hidden_dims = mc.hidden_dims;
  spec.repr_dim = mc.repr_dim;
  spec.head = mc.head;
  spec.num_classes = mc.head == HeadKind::kClassifier ? static_cast<std::size_t>(num_classes) : 0;
  return spec;
}

TrainOptions train_options(const TrainConfig& tc, std::uint64_t seed, const std::string& name) {
  TrainOptions opts;
  opts.optimizer = tc.optimizer;
  opts.epochs = tc.epochs;
  opts.batch_size = tc.batch_size;
  opts.seed = seed;
  opts.model_name = name;
  return opts;
}

double late_fusion_accuracy(const std::vector<const Model*>& members, const Dataset& train_set,
                            const Dataset& eval_set, std::uint64_t seed,
                            const std::string& name) {
  LateFusionOptions opts;
  opts.train = train_options(canonical_fusion_train_config(), seed, name);
  FusionBundle bundle = train_late_fusion(members, {}, train_set, opts);
  ForwardResult fwd = late_fusion_forward(bundle, members, eval_set.features);
  return top1_accuracy(fwd.task_out, eval_set.labels);
}

}  // namespace

CanonicalSeedOutcome run_canonical_seed(std::uint64_t seed) {
  CanonicalSeedOutcome out;

  ComplementaryCueSpec cue = canonical_cue_spec(subseed(seed, "data"));
  Dataset full = gen_complementary_classes(cue, &out.gen_report);
  Splits splits = make_splits(full.size(), 0.7, 0.2, 0.1, subseed(seed, "split"));
  Dataset train_set = subset(full, splits.train);
  Dataset eval_set = subset(full, splits.eval);

  // --- classification track ---
  ModelConfig mc = canonical_model_config(HeadKind::kClassifier);
  ModelSpec spec = classifier_spec(mc, full.input_dim(), full.num_classes);
  TrainConfig tc = canonical_train_config(HeadKind::kClassifier);

  Model model_a = train_plain(spec, train_set, train_options(tc, seed, "A")).model;
  Model model_b = train_plain(spec, train_set, train_options(tc, seed, "B")).model;

  AcorlOptions acorl;
  acorl.lambda = 1.0;
  acorl.temperature = 1.0;
  Model model_b_acorl =
      train_alliance(spec, train_set, train_options(tc, seed, "B"), {&model_a}, acorl).model;

  out.acc_a = eval_accuracy(model_a, eval_set);
  out.acc_b_plain = eval_accuracy(model_b, eval_set);
  out.acc_b_acorl = eval_accuracy(model_b_acorl, eval_set);

  out.lf_plain_ab =
      late_fusion_accuracy({&model_a, &model_b}, train_set, eval_set, seed, "lf/plain");
  out.lf_acorl_ab =
      late_fusion_accuracy({&model_a, &model_b_acorl}, train_set, eval_set, seed, "lf/acorl");
  out.lf_a_alone = late_fusion_accuracy({&model_a}, train_set, eval_set, seed, "lf/a");
  out.lf_aa = late_fusion_accuracy({&model_a, &model_a}, train_set, eval_set, seed, "lf/aa");

  // --- attribution complementarity ---
  Tensor baseline = feature_mean(full);
  const int attr_samples = 64;
  std::vector<int> sample_ids(splits.eval.begin(),
                              splits.eval.begin() +
                                  std::min<std::ptrdiff_t>(attr_samples,
                                                           static_cast<std::ptrdiff_t>(
                                                               splits.eval.size())));
  const int steps = 64;
  auto maps_a = attribution_maps(model_a, "A", full, sample_ids, baseline, steps);
  auto maps_b = attribution_maps(model_b, "B", full, sample_ids, baseline, steps);
  auto maps_b_acorl = attribution_maps(model_b_acorl, "B_acorl", full, sample_ids, baseline, steps);
  out.comp_plain = complementarity_score(maps_a, maps_b);
  out.comp_acorl = complementarity_score(maps_a, maps_b_acorl);

  // --- verification track ---
  ModelConfig vc = canonical_model_config(HeadKind::kEmbedding);
  ModelSpec vspec = classifier_spec(vc, full.input_dim(), full.num_classes);
  TrainConfig vtc = canonical_train_config(HeadKind::kEmbedding);

  Model model_av = train_plain(vspec, train_set, train_options(vtc, seed, "Av")).model;
  Model model_bv_acorl =
      train_alliance(vspec, train_set, train_options(vtc, seed, "Bv"), {&model_av}, acorl).model;

  TrialList eval_trials =
      make_split_trials(full, splits.eval, 40, 1280, subseed(seed, "trials/eval"));
  TrialList calib_trials =
      make_split_trials(full, splits.calibration, 20, 640, subseed(seed, "trials/calib"));

  std::vector<double> scores_a_eval = cosine_trial_scores(model_av, full, eval_trials);
  std::vector<double> scores_b_eval = cosine_trial_scores(model_bv_acorl, full, eval_trials);
  std::vector<bool> eval_labels = trial_labels(eval_trials);
  out.eer_a = eer(scores_a_eval, eval_labels).eer;
  out.eer_b_acorl = eer(scores_b_eval, eval_labels).eer;

  std::vector<double> scores_a_cal = cosine_trial_scores(model_av, full, calib_trials);
  std::vector<double> scores_b_cal = cosine_trial_scores(model_bv_acorl, full, calib_trials);
  LogregFit fit = fit_score_logreg({scores_a_cal, scores_b_cal}, trial_labels(calib_trials));
  std::vector<double> fused = logreg_fused_scores(fit, {scores_a_eval, scores_b_eval});
  out.eer_logreg_fused = eer(fused, eval_labels).eer;

  return out;
}

}  // namespace acorl
