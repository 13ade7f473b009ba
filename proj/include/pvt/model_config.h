// Copyright (c) 2026 The pvtrigger Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PVT_MODEL_CONFIG_H_
#define PVT_MODEL_CONFIG_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "pvt/common.h"
#include "pvt/weights.h"

namespace pvt {

inline constexpr char kKwsArch[] = "kws_lstm";
inline constexpr char kEmbeddingArch[] = "resnet_se_asp";

// Two stacked LSTM layers, average pooling over the window, affine + softmax.
struct KwsConfig {
  Index input_dim = 80;
  Index hidden_dim = 128;
  Index num_classes = 4;  // three keyword subwords plus filler
  Index window = 40;
  std::array<int, 3> keyword_classes = {0, 1, 2};
  int filler_class = 3;

  nlohmann::json ToJson() const;
  static KwsConfig FromJson(const nlohmann::json& j);
};

struct EmbeddingConfig {
  Index input_dim = 80;
  std::vector<Index> channels = {8, 16, 32, 64};
  Index blocks_per_stage = 1;
  Index se_reduction = 4;
  Index attention_dim = 64;
  Index embedding_dim = 128;

  // Frequency bins left after the stride-2 stages.
  Index output_width() const;
  // Width of each pooled frame vector (channels x frequency bins).
  Index frame_dim() const;

  nlohmann::json ToJson() const;
  static EmbeddingConfig FromJson(const nlohmann::json& j);
};

std::vector<TensorSpec> KwsTensorSpecs(const KwsConfig& config);
std::vector<TensorSpec> EmbeddingTensorSpecs(const EmbeddingConfig& config);

// Seeded Glorot-uniform weights in PVTW form, for plumbing runs and tests.
WeightBundle RandomKwsWeights(uint64_t seed, const KwsConfig& config = {});
WeightBundle RandomEmbeddingWeights(uint64_t seed,
                                    const EmbeddingConfig& config = {});

}  // namespace pvt

#endif  // PVT_MODEL_CONFIG_H_
