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

#ifndef PVT_EMBEDDING_NET_H_
#define PVT_EMBEDDING_NET_H_

#include <string>
#include <vector>

#include "pvt/frontend.h"
#include "pvt/model_config.h"
#include "pvt/nnet.h"
#include "pvt/weights.h"

namespace pvt {

inline constexpr Index kMinEmbeddingFrames = 40;

template <typename Scalar>
struct ResidualSeBlock {
  nnet::Conv2dParams<Scalar> conv1;
  nnet::Conv2dParams<Scalar> conv2;
  nnet::SqueezeExciteParams<Scalar> se;
  bool has_shortcut = false;  // 1x1 projection when shape changes
  nnet::Conv2dParams<Scalar> shortcut;
};

// Optional intermediate values, filled when passed to Forward.
template <typename Scalar>
struct EmbeddingTrace {
  std::vector<Vector<Scalar>> se_gates;
  Matrix<Scalar> frame_features;  // T' x frame_dim, input to pooling
  Vector<Scalar> pooled;
};

// Residual squeeze-excitation network over the T x 80 feature image,
// attentive statistics pooling, affine projection, L2 normalization.
template <typename Scalar>
class EmbeddingNetwork {
 public:
  static EmbeddingNetwork FromBundle(const WeightBundle& bundle) {
    EmbeddingNetwork net;
    net.config_ = EmbeddingConfig::FromJson(bundle.config());
    const EmbeddingConfig& c = net.config_;
    CheckTensors(bundle, EmbeddingTensorSpecs(c));

    auto conv = [&](const std::string& p, Index kernel, Index stride, Index pad) {
      const Tensor& w = bundle.at(p + ".weight");
      nnet::Conv2dParams<Scalar> params;
      params.weights = ToMatrix<Scalar>(w, w.shape[0], w.num_elements() / w.shape[0]);
      params.bias = ToVector<Scalar>(bundle.at(p + ".bias"));
      params.kernel = kernel;
      params.stride = stride;
      params.padding = pad;
      return params;
    };
    auto dense = [&](const std::string& p) {
      const Tensor& w = bundle.at(p);
      return ToMatrix<Scalar>(w, w.shape[0], w.shape[1]);
    };

    net.stem_ = conv("stem", 3, 1, 1);
    for (size_t s = 0; s < c.channels.size(); ++s) {
      for (Index b = 0; b < c.blocks_per_stage; ++b) {
        const std::string p =
            "stage" + std::to_string(s + 1) + ".block" + std::to_string(b + 1) + ".";
        ResidualSeBlock<Scalar> block;
        block.conv1 = conv(p + "conv1", 3, b == 0 ? 2 : 1, 1);
        block.conv2 = conv(p + "conv2", 3, 1, 1);
        block.se.reduce_weights = dense(p + "se.reduce.weight");
        block.se.reduce_bias = ToVector<Scalar>(bundle.at(p + "se.reduce.bias"));
        block.se.expand_weights = dense(p + "se.expand.weight");
        block.se.expand_bias = ToVector<Scalar>(bundle.at(p + "se.expand.bias"));
        block.has_shortcut = b == 0;
        if (block.has_shortcut) block.shortcut = conv(p + "shortcut", 1, 2, 0);
        net.blocks_.push_back(std::move(block));
      }
    }
    net.pool_.projection = dense("pool.attention.weight");
    net.pool_.bias = ToVector<Scalar>(bundle.at("pool.attention.bias"));
    net.pool_.context = ToVector<Scalar>(bundle.at("pool.context"));
    net.fc_weights_ = dense("fc.weight");
    net.fc_bias_ = ToVector<Scalar>(bundle.at("fc.bias"));
    return net;
  }

  const EmbeddingConfig& config() const { return config_; }
  const nnet::AttentivePoolingParams<Scalar>& pool() const { return pool_; }

  // Unit-norm embedding of a T x 80 feature matrix, T >= 40.
  Vector<Scalar> Embed(const Eigen::Ref<const FeatureMatrixT<float>>& features,
                       EmbeddingTrace<Scalar>* trace = nullptr) const {
    if (features.rows() < kMinEmbeddingFrames) {
      throw Error(ErrorKind::kTooShort,
                  "embedding: " + std::to_string(features.rows()) +
                      " frames, need at least " +
                      std::to_string(kMinEmbeddingFrames));
    }
    if (features.cols() != config_.input_dim) {
      throw Error(ErrorKind::kShapeMismatch, "embedding: feature width mismatch");
    }
    nnet::FeatureMap<Scalar> x;
    x.height = features.rows();
    x.width = features.cols();
    x.data.resize(1, x.height * x.width);
    for (Index t = 0; t < x.height; ++t) {
      x.data.block(0, t * x.width, 1, x.width) =
          features.row(t).template cast<Scalar>();
    }

    x = nnet::Conv2d(x, stem_);
    nnet::Relu(x);
    for (const auto& block : blocks_) {
      nnet::FeatureMap<Scalar> y = nnet::Conv2d(x, block.conv1);
      nnet::Relu(y);
      y = nnet::Conv2d(y, block.conv2);
      const Vector<Scalar> gates = nnet::SqueezeExciteGates(y, block.se);
      if (trace) trace->se_gates.push_back(gates);
      y.data = gates.asDiagonal() * y.data;
      if (block.has_shortcut) {
        y.data += nnet::Conv2d(x, block.shortcut).data;
      } else {
        y.data += x.data;
      }
      nnet::Relu(y);
      x = std::move(y);
    }

    // Flatten channels x frequency into one vector per remaining frame.
    Matrix<Scalar> frames(x.height, x.channels() * x.width);
    for (Index t = 0; t < x.height; ++t) {
      for (Index c = 0; c < x.channels(); ++c) {
        frames.block(t, c * x.width, 1, x.width) =
            x.data.block(c, t * x.width, 1, x.width);
      }
    }
    Vector<Scalar> pooled = nnet::AspPool<Scalar>(frames, pool_);
    Vector<Scalar> embedding = fc_weights_ * pooled + fc_bias_;
    const Scalar norm = embedding.norm();
    if (!(norm > Scalar(0))) {
      throw Error(ErrorKind::kZeroNorm, "embedding: zero-norm output");
    }
    embedding /= norm;
    if (trace) {
      trace->frame_features = std::move(frames);
      trace->pooled = std::move(pooled);
    }
    return embedding;
  }

 private:
  EmbeddingNetwork() = default;

  EmbeddingConfig config_;
  nnet::Conv2dParams<Scalar> stem_;
  std::vector<ResidualSeBlock<Scalar>> blocks_;
  nnet::AttentivePoolingParams<Scalar> pool_;
  Matrix<Scalar> fc_weights_;
  Vector<Scalar> fc_bias_;
};

}  // namespace pvt

#endif  // PVT_EMBEDDING_NET_H_
