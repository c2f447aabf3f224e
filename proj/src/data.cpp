// SPDX-License-Identifier: Apache-2.0
#include "acorl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "acorl/errors.hpp"
#include "acorl/rng.hpp"

namespace acorl {

namespace {

constexpr std::size_t kMaxRejectionAttempts = 100000;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::size_t ComplementaryCueSpec::input_dim() const {
  std::size_t d = noise_dims;
  for (const auto& g : cue_groups) d += g.dims;
  return d;
}

void ComplementaryCueSpec::validate() const {
  if (num_classes < 1) throw ConfigError("cue spec: num_classes must be >= 1");
  if (samples_per_class < 1) throw ConfigError("cue spec: samples_per_class must be >= 1");
  for (const auto& g : cue_groups) {
    if (g.dims == 0) throw ConfigError("cue spec: cue group dims must be positive");
    if (g.separation < 0.0) throw ConfigError("cue spec: separation must be nonnegative");
  }
  if (noise_sigma < 0.0) throw ConfigError("cue spec: noise_sigma must be nonnegative");
  if (input_dim() == 0) throw ConfigError("cue spec: input_dim is zero");
}

Dataset gen_complementary_classes(const ComplementaryCueSpec& spec, GenerationReport* report) {
  spec.validate();
  Rng rng(spec.seed);

  const std::size_t c = static_cast<std::size_t>(spec.num_classes);
  const std::size_t n = static_cast<std::size_t>(spec.samples_per_class);
  const std::size_t d = spec.input_dim();

  // Draw order: per group, the C centroids (with rejection), then all
  // samples class-major with cue-group gaussians before noise gaussians.
  std::vector<std::vector<std::vector<double>>> centroids(spec.cue_groups.size());
  std::vector<std::size_t> attempts(spec.cue_groups.size(), 0);
  for (std::size_t g = 0; g < spec.cue_groups.size(); ++g) {
    const auto& group = spec.cue_groups[g];
    const double radius = group.separation / 2.0;
    const double min_dist = group.separation * 0.8;
    for (;;) {
      ++attempts[g];
      if (attempts[g] > kMaxRejectionAttempts) {
        throw ConfigError("cue spec: centroid rejection sampling exceeded " +
                          std::to_string(kMaxRejectionAttempts) + " attempts for group " +
                          std::to_string(g));
      }
      std::vector<std::vector<double>> cand(c, std::vector<double>(group.dims));
      for (std::size_t i = 0; i < c; ++i) {
        double norm_sq = 0.0;
        for (std::size_t k = 0; k < group.dims; ++k) {
          cand[i][k] = rng.gaussian();
          norm_sq += cand[i][k] * cand[i][k];
        }
        double norm = std::sqrt(norm_sq);
        for (std::size_t k = 0; k < group.dims; ++k) {
          cand[i][k] = norm > 0.0 ? cand[i][k] / norm * radius : 0.0;
        }
      }
      bool ok = true;
      for (std::size_t i = 0; i < c && ok; ++i) {
        for (std::size_t j = i + 1; j < c && ok; ++j) {
          double dist_sq = 0.0;
          for (std::size_t k = 0; k < group.dims; ++k) {
            double delta = cand[i][k] - cand[j][k];
            dist_sq += delta * delta;
          }
          if (std::sqrt(dist_sq) < min_dist) ok = false;
        }
      }
      if (ok) {
        centroids[g] = std::move(cand);
        break;
      }
    }
  }

  Dataset ds;
  ds.num_classes = spec.num_classes;
  ds.features = Tensor::zeros({c * n, d});
  ds.labels.resize(c * n);
  for (std::size_t cls = 0; cls < c; ++cls) {
    for (std::size_t s = 0; s < n; ++s) {
      std::size_t row = cls * n + s;
      ds.labels[row] = static_cast<int>(cls);
      std::size_t col = 0;
      for (std::size_t g = 0; g < spec.cue_groups.size(); ++g) {
        for (std::size_t k = 0; k < spec.cue_groups[g].dims; ++k) {
          ds.features.data[row * d + col] = centroids[g][cls][k] + rng.gaussian();
          ++col;
        }
      }
      for (std::size_t k = 0; k < spec.noise_dims; ++k) {
        ds.features.data[row * d + col] = spec.noise_sigma * rng.gaussian();
        ++col;
      }
    }
  }

  if (report != nullptr) {
    report->rejection_attempts = attempts;
    report->per_group_oracle_acc.assign(spec.cue_groups.size(), 0.0);
    const std::size_t fit_n = n / 2;
    std::size_t col0 = 0;
    for (std::size_t g = 0; g < spec.cue_groups.size(); ++g) {
      const std::size_t gd = spec.cue_groups[g].dims;
      // class means over the fit half, restricted to this group's dims
      std::vector<std::vector<double>> means(c, std::vector<double>(gd, 0.0));
      for (std::size_t cls = 0; cls < c; ++cls) {
        for (std::size_t s = 0; s < fit_n; ++s) {
          std::size_t row = cls * n + s;
          for (std::size_t k = 0; k < gd; ++k) {
            means[cls][k] += ds.features.data[row * d + col0 + k];
          }
        }
        for (std::size_t k = 0; k < gd; ++k) {
          means[cls][k] /= fit_n > 0 ? static_cast<double>(fit_n) : 1.0;
        }
      }
      std::size_t correct = 0, total = 0;
      for (std::size_t cls = 0; cls < c; ++cls) {
        for (std::size_t s = fit_n; s < n; ++s) {
          std::size_t row = cls * n + s;
          std::size_t best = 0;
          double best_dist = 0.0;
          for (std::size_t m = 0; m < c; ++m) {
            double dist = 0.0;
            for (std::size_t k = 0; k < gd; ++k) {
              double delta = ds.features.data[row * d + col0 + k] - means[m][k];
              dist += delta * delta;
            }
            if (m == 0 || dist < best_dist) {
              best_dist = dist;
              best = m;
            }
          }
          if (best == cls) ++correct;
          ++total;
        }
      }
      report->per_group_oracle_acc[g] = total > 0 ? static_cast<double>(correct) / total : 0.0;
      col0 += gd;
    }
  }
  return ds;
}

TrialList gen_trial_list(const std::vector<int>& labels, const std::vector<int>& candidate_ids,
                         int genuine_per_class, int impostor_total, std::uint64_t seed) {
  if (genuine_per_class < 0 || impostor_total < 0) {
    throw ConfigError("gen_trial_list: counts must be nonnegative");
  }
  int num_classes = 0;
  for (int id : candidate_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= labels.size()) {
      throw ContractError("gen_trial_list: candidate id " + std::to_string(id) +
                          " out of range");
    }
    num_classes = std::max(num_classes, labels[id] + 1);
  }

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
  for (int id : candidate_ids) by_class[static_cast<std::size_t>(labels[id])].push_back(id);
  for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
    if (by_class[cls].size() < 2) {
      throw ConfigError("gen_trial_list: class " + std::to_string(cls) +
                        " has fewer than 2 samples");
    }
  }

  Rng rng(seed);
  TrialList trials;

  // Genuine pairs per class: enumerate all unordered pairs, take the first
  // genuine_per_class of a partial Fisher-Yates shuffle.
  for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
    const auto& ids = by_class[cls];
    std::size_t m = ids.size();
    std::size_t total_pairs = m * (m - 1) / 2;
    if (static_cast<std::size_t>(genuine_per_class) > total_pairs) {
      throw ConfigError("gen_trial_list: class " + std::to_string(cls) + " has only " +
                        std::to_string(total_pairs) + " genuine pairs, need " +
                        std::to_string(genuine_per_class));
    }
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(total_pairs);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(ids[i], ids[j]);
    }
    for (int k = 0; k < genuine_per_class; ++k) {
      std::size_t pick = static_cast<std::size_t>(k) +
                         rng.below(pairs.size() - static_cast<std::size_t>(k));
      std::swap(pairs[static_cast<std::size_t>(k)], pairs[pick]);
      trials.push_back({true, pairs[static_cast<std::size_t>(k)].first,
                        pairs[static_cast<std::size_t>(k)].second});
    }
  }

  // Impostor pairs across classes, uniform without replacement.
  std::vector<std::pair<int, int>> cross;
  for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
    for (std::size_t j = i + 1; j < candidate_ids.size(); ++j) {
      int a = candidate_ids[i], b = candidate_ids[j];
      if (labels[a] != labels[b]) cross.emplace_back(a, b);
    }
  }
  if (static_cast<std::size_t>(impostor_total) > cross.size()) {
    throw ConfigError("gen_trial_list: only " + std::to_string(cross.size()) +
                      " impostor pairs available, need " + std::to_string(impostor_total));
  }
  for (int k = 0; k < impostor_total; ++k) {
    std::size_t pick = static_cast<std::size_t>(k) +
                       rng.below(cross.size() - static_cast<std::size_t>(k));
    std::swap(cross[static_cast<std::size_t>(k)], cross[pick]);
    trials.push_back({false, cross[static_cast<std::size_t>(k)].first,
                      cross[static_cast<std::size_t>(k)].second});
  }
  return trials;
}

void write_trial_list(const std::filesystem::path& path, const TrialList& trials) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("trial list: cannot open '" + path.string() + "' for writing");
  for (const auto& t : trials) {
    out << (t.genuine ? 1 : 0) << " " << t.enroll_id << " " << t.test_id << "\n";
  }
  if (!out) throw DataError("trial list: write failed for '" + path.string() + "'");
}

TrialList read_trial_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("trial list: cannot open '" + path.string() + "'");
  TrialList trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int g, a, b;
    if (!(ls >> g >> a >> b) || (g != 0 && g != 1)) {
      throw DataError("trial list '" + path.string() + "': malformed line " +
                      std::to_string(line_no));
    }
    trials.push_back({g == 1, a, b});
  }
  return trials;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("dataset: cannot open '" + path.string() + "' for writing");
  const std::size_t d = ds.input_dim();
  out << "label";
  for (std::size_t k = 0; k < d; ++k) out << ",f_" << k;
  out << "\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out << ds.labels[r];
    for (std::size_t k = 0; k < d; ++k) out << "," << format_double(ds.features.data[r * d + k]);
    out << "\n";
  }
  if (!out) throw DataError("dataset: write failed for '" + path.string() + "'");
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset: cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw DataError("dataset '" + path.string() + "': no header");
  }
  if (line.rfind("label", 0) != 0) {
    throw DataError("dataset '" + path.string() + "': header must start with 'label'");
  }
  std::size_t d = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));

  std::vector<double> features;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t cells = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (cells != d + 1) {
      throw DataError("dataset '" + path.string() + "': ragged row at line " +
                      std::to_string(line_no) + " (got " + std::to_string(cells) +
                      " cells, expected " + std::to_string(d + 1) + ")");
    }
    std::size_t pos = 0;
    for (std::size_t cell = 0; cell <= d; ++cell) {
      std::size_t next = line.find(',', pos);
      std::string tok =
          line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      const char* begin = tok.c_str();
      char* end = nullptr;
      if (cell == 0) {
        long v = std::strtol(begin, &end, 10);
        if (end == begin || *end != '\0') {
          throw DataError("dataset '" + path.string() + "': non-numeric label at line " +
                          std::to_string(line_no));
        }
        labels.push_back(static_cast<int>(v));
      } else {
        double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0') {
          throw DataError("dataset '" + path.string() + "': non-numeric cell at line " +
                          std::to_string(line_no));
        }
        features.push_back(v);
      }
      pos = next == std::string::npos ? line.size() + 1 : next + 1;
    }
  }
  if (labels.empty()) {
    throw DataError("dataset '" + path.string() + "': no data rows");
  }
  Dataset ds;
  ds.labels = std::move(labels);
  ds.features = Tensor({ds.labels.size(), d}, std::move(features));
  int max_label = 0;
  for (int l : ds.labels) {
    if (l < 0) throw DataError("dataset '" + path.string() + "': negative label");
    max_label = std::max(max_label, l);
  }
  ds.num_classes = max_label + 1;
  return ds;
}

Splits make_splits(std::size_t n, double train_frac, double eval_frac, double calib_frac,
                   std::uint64_t seed) {
  if (train_frac < 0 || eval_frac < 0 || calib_frac < 0 ||
      std::abs(train_frac + eval_frac + calib_frac - 1.0) > 1e-9) {
    throw ConfigError("make_splits: fractions must be nonnegative and sum to 1");
  }
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(ids);
  std::size_t n_eval = static_cast<std::size_t>(std::floor(eval_frac * static_cast<double>(n)));
  std::size_t n_cal = static_cast<std::size_t>(std::floor(calib_frac * static_cast<double>(n)));
  std::size_t n_train = n - n_eval - n_cal;
  Splits s;
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.eval.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_eval));
  s.calibration.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_eval), ids.end());
  return s;
}

Dataset subset(const Dataset& ds, const std::vector<int>& ids) {
  const std::size_t d = ds.input_dim();
  Dataset out;
  out.num_classes = ds.num_classes;
  out.features = Tensor::zeros({ids.size(), d});
  out.labels.resize(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    int id = ids[r];
    if (id < 0 || static_cast<std::size_t>(id) >= ds.size()) {
      throw ContractError("subset: id " + std::to_string(id) + " out of range");
    }
    out.labels[r] = ds.labels[static_cast<std::size_t>(id)];
    for (std::size_t k = 0; k < d; ++k) {
      out.features.data[r * d + k] = ds.features.data[static_cast<std::size_t>(id) * d + k];
    }
  }
  return out;
}

Tensor feature_mean(const Dataset& ds) {
  const std::size_t d = ds.input_dim();
  Tensor mean = Tensor::zeros({1, d});
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t k = 0; k < d; ++k) mean.data[k] += ds.features.data[r * d + k];
  }
  for (std::size_t k = 0; k < d; ++k) mean.data[k] /= static_cast<double>(ds.size());
  return mean;
}

}  // namespace acorl
