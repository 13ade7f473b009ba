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

#include <cmath>
#include <random>

#include "pvt/model_config.h"
#include "pvt/nnet.h"

namespace pvt {

namespace {

Index GetIndex(const nlohmann::json& j, const char* key, Index fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer() || j.at(key).get<int64_t>() < 1) {
    throw Error(ErrorKind::kFormat,
                std::string("weights config: '") + key + "' must be a positive integer");
  }
  return j.at(key).get<Index>();
}

void CheckArch(const nlohmann::json& j, const char* arch) {
  if (!j.contains("arch") || j.at("arch") != arch) {
    throw Error(ErrorKind::kFormat,
                std::string("weights config: expected arch '") + arch + "'");
  }
}

uint32_t U(Index v) { return static_cast<uint32_t>(v); }

}  // namespace

nlohmann::json KwsConfig::ToJson() const {
  return {{"arch", kKwsArch},
          {"input_dim", input_dim},
          {"hidden_dim", hidden_dim},
          {"num_layers", 2},
          {"num_classes", num_classes},
          {"window", window},
          {"keyword_classes", keyword_classes},
          {"filler_class", filler_class},
          {"gate_order", "ifgo"}};
}

KwsConfig KwsConfig::FromJson(const nlohmann::json& j) {
  CheckArch(j, kKwsArch);
  KwsConfig c;
  c.input_dim = GetIndex(j, "input_dim", c.input_dim);
  c.hidden_dim = GetIndex(j, "hidden_dim", c.hidden_dim);
  c.num_classes = GetIndex(j, "num_classes", c.num_classes);
  c.window = GetIndex(j, "window", c.window);
  if (GetIndex(j, "num_layers", 2) != 2) {
    throw Error(ErrorKind::kFormat, "weights config: num_layers must be 2");
  }
  if (j.contains("gate_order") && j.at("gate_order") != "ifgo") {
    throw Error(ErrorKind::kFormat, "weights config: gate_order must be ifgo");
  }
  if (j.contains("keyword_classes")) {
    c.keyword_classes = j.at("keyword_classes").get<std::array<int, 3>>();
  }
  if (j.contains("filler_class")) c.filler_class = j.at("filler_class").get<int>();
  for (int k : c.keyword_classes) {
    if (k < 0 || k >= c.num_classes) {
      throw Error(ErrorKind::kFormat, "weights config: keyword class out of range");
    }
  }
  if (c.filler_class < 0 || c.filler_class >= c.num_classes) {
    throw Error(ErrorKind::kFormat, "weights config: filler class out of range");
  }
  return c;
}

Index EmbeddingConfig::output_width() const {
  Index w = input_dim;
  for (size_t s = 0; s < channels.size(); ++s) w = nnet::ConvOutputSize(w, 3, 2, 1);
  return w;
}

Index EmbeddingConfig::frame_dim() const {
  return channels.back() * output_width();
}

nlohmann::json EmbeddingConfig::ToJson() const {
  return {{"arch", kEmbeddingArch},
          {"input_dim", input_dim},
          {"channels", channels},
          {"blocks_per_stage", blocks_per_stage},
          {"se_reduction", se_reduction},
          {"attention_dim", attention_dim},
          {"embedding_dim", embedding_dim}};
}

EmbeddingConfig EmbeddingConfig::FromJson(const nlohmann::json& j) {
  CheckArch(j, kEmbeddingArch);
  EmbeddingConfig c;
  c.input_dim = GetIndex(j, "input_dim", c.input_dim);
  if (j.contains("channels")) c.channels = j.at("channels").get<std::vector<Index>>();
  if (c.channels.empty()) {
    throw Error(ErrorKind::kFormat, "weights config: channels must be non-empty");
  }
  for (Index ch : c.channels) {
    if (ch < 1) throw Error(ErrorKind::kFormat, "weights config: bad channel count");
  }
  c.blocks_per_stage = GetIndex(j, "blocks_per_stage", c.blocks_per_stage);
  c.se_reduction = GetIndex(j, "se_reduction", c.se_reduction);
  c.attention_dim = GetIndex(j, "attention_dim", c.attention_dim);
  c.embedding_dim = GetIndex(j, "embedding_dim", c.embedding_dim);
  for (Index ch : c.channels) {
    if (ch / c.se_reduction < 1) {
      throw Error(ErrorKind::kFormat, "weights config: se_reduction too large");
    }
  }
  return c;
}

std::vector<TensorSpec> KwsTensorSpecs(const KwsConfig& c) {
  const uint32_t g = U(4 * c.hidden_dim), h = U(c.hidden_dim);
  return {
      {"lstm1.input_weights", {g, U(c.input_dim)}},
      {"lstm1.recurrent_weights", {g, h}},
      {"lstm1.bias", {g}},
      {"lstm2.input_weights", {g, h}},
      {"lstm2.recurrent_weights", {g, h}},
      {"lstm2.bias", {g}},
      {"fc.weight", {U(c.num_classes), h}},
      {"fc.bias", {U(c.num_classes)}},
  };
}

std::vector<TensorSpec> EmbeddingTensorSpecs(const EmbeddingConfig& c) {
  std::vector<TensorSpec> specs;
  const uint32_t c0 = U(c.channels.front());
  specs.push_back({"stem.weight", {c0, 1, 3, 3}});
  specs.push_back({"stem.bias", {c0}});
  uint32_t in = c0;
  for (size_t s = 0; s < c.channels.size(); ++s) {
    const uint32_t out = U(c.channels[s]);
    const uint32_t red = U(c.channels[s] / c.se_reduction);
    for (Index b = 0; b < c.blocks_per_stage; ++b) {
      const std::string p =
          "stage" + std::to_string(s + 1) + ".block" + std::to_string(b + 1) + ".";
      const uint32_t block_in = b == 0 ? in : out;
      specs.push_back({p + "conv1.weight", {out, block_in, 3, 3}});
      specs.push_back({p + "conv1.bias", {out}});
      specs.push_back({p + "conv2.weight", {out, out, 3, 3}});
      specs.push_back({p + "conv2.bias", {out}});
      specs.push_back({p + "se.reduce.weight", {red, out}});
      specs.push_back({p + "se.reduce.bias", {red}});
      specs.push_back({p + "se.expand.weight", {out, red}});
      specs.push_back({p + "se.expand.bias", {out}});
      if (b == 0) {
        specs.push_back({p + "shortcut.weight", {out, block_in, 1, 1}});
        specs.push_back({p + "shortcut.bias", {out}});
      }
    }
    in = out;
  }
  const uint32_t d = U(c.frame_dim()), a = U(c.attention_dim);
  specs.push_back({"pool.attention.weight", {a, d}});
  specs.push_back({"pool.attention.bias", {a}});
  specs.push_back({"pool.context", {a}});
  specs.push_back({"fc.weight", {U(c.embedding_dim), 2 * d}});
  specs.push_back({"fc.bias", {U(c.embedding_dim)}});
  return specs;
}

std::vector<TensorSpec> RequiredTensors(const nlohmann::json& config) {
  if (!config.contains("arch") || !config.at("arch").is_string()) {
    throw Error(ErrorKind::kFormat, "weights config: missing 'arch'");
  }
  const std::string arch = config.at("arch").get<std::string>();
  if (arch == kKwsArch) return KwsTensorSpecs(KwsConfig::FromJson(config));
  if (arch == kEmbeddingArch) {
    return EmbeddingTensorSpecs(EmbeddingConfig::FromJson(config));
  }
  throw Error(ErrorKind::kFormat, "weights config: unknown arch '" + arch + "'");
}

namespace {

WeightBundle RandomBundle(uint64_t seed, nlohmann::json config,
                          const std::vector<TensorSpec>& specs) {
  std::mt19937_64 rng(seed);
  WeightBundle bundle(std::move(config));
  for (const auto& spec : specs) {
    Tensor t;
    t.shape = spec.shape;
    t.data.assign(t.num_elements(), 0.0f);
    if (spec.shape.size() >= 2) {
      // Glorot-uniform over receptive-field-scaled fan in/out.
      size_t receptive = 1;
      for (size_t i = 2; i < spec.shape.size(); ++i) receptive *= spec.shape[i];
      const double fan_out = static_cast<double>(spec.shape[0]) * receptive;
      const double fan_in = static_cast<double>(spec.shape[1]) * receptive;
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (float& v : t.data) v = static_cast<float>(dist(rng));
    } else {
      std::uniform_real_distribution<double> dist(-0.1, 0.1);
      for (float& v : t.data) v = static_cast<float>(dist(rng));
    }
    bundle.add(spec.name, std::move(t));
  }
  return bundle;
}

}  // namespace

WeightBundle RandomKwsWeights(uint64_t seed, const KwsConfig& config) {
  return RandomBundle(seed, config.ToJson(), KwsTensorSpecs(config));
}

WeightBundle RandomEmbeddingWeights(uint64_t seed, const EmbeddingConfig& config) {
  return RandomBundle(seed, config.ToJson(), EmbeddingTensorSpecs(config));
}

}  // namespace pvt
