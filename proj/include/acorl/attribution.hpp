// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "acorl/nn.hpp"
#include "acorl/tensor.hpp"

namespace acorl {

// Scalar output to attribute: a class logit, or the cosine score against
// a fixed reference embedding (verification track).
struct IgTarget {
  enum class Kind { kClassLogit, kCosineRef };
  Kind kind = Kind::kClassLogit;
  int class_index = 0;
  Tensor reference;  // 1 x repr_dim, used by kCosineRef

  static IgTarget class_logit(int index);
  static IgTarget cosine_ref(Tensor reference);
};

struct AttributionMap {
  std::vector<double> values;  // one per input feature
  std::string model_id;
  int sample_id = 0;
  int baseline_id = 0;
  int steps = 0;
  double completeness_gap = 0.0;
};

// Right-endpoint Riemann integrated gradients:
//   IG_i = (x_i - x0_i) * (1/S) * sum_{s=1..S} df/dx_i at x0 + (s/S)(x-x0).
// The completeness gap |sum_i IG_i - (f(x) - f(x0))| is reported with the
// map. All S interpolation points are evaluated as one batch.
AttributionMap integrated_gradients(const Model& model, const IgTarget& target, const Tensor& x,
                                    const Tensor& baseline, int steps);

// Mean over samples of the cosine similarity between |IG_P| and |IG_Q|.
// Samples whose attribution is all-zero in either map are skipped;
// `skipped` (optional) receives the count. Lower = more complementary.
double complementarity_score(const std::vector<AttributionMap>& a,
                             const std::vector<AttributionMap>& b, std::size_t* skipped = nullptr);

// CSV dump: header `sample_id,model_id,feature_0..feature_{d-1},completeness_gap`.
void write_attribution_csv(const std::filesystem::path& path,
                           const std::vector<AttributionMap>& maps);

}  // namespace acorl
