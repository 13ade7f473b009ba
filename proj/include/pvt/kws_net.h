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

#ifndef PVT_KWS_NET_H_
#define PVT_KWS_NET_H_

#include <algorithm>
#include <vector>

#include "pvt/frontend.h"
#include "pvt/model_config.h"
#include "pvt/nnet.h"
#include "pvt/weights.h"

namespace pvt {

// Per-window class probabilities. Row n comes from the window covering
// feature frames [n, n + window) and is attached to its last frame.
struct PosteriorSequence {
  Matrix<double> probs;  // N x C
  std::vector<int> keyword_classes;
  int filler_class = 0;
  Index frame_offset = 0;  // feature frame row 0 is attached to

  Index num_rows() const { return probs.rows(); }
  Index num_classes() const { return probs.cols(); }
};

template <typename Scalar>
class KwsNetwork {
 public:
  KwsNetwork(KwsConfig config, nnet::LstmLayerParams<Scalar> layer1,
             nnet::LstmLayerParams<Scalar> layer2, Matrix<Scalar> fc_weights,
             Vector<Scalar> fc_bias)
      : config_(std::move(config)),
        layer1_(std::move(layer1)),
        layer2_(std::move(layer2)),
        fc_weights_(std::move(fc_weights)),
        fc_bias_(std::move(fc_bias)) {
    layer1_.Check();
    layer2_.Check();
    const Index h = config_.hidden_dim;
    if (layer1_.input_dim() != config_.input_dim || layer1_.hidden_dim() != h ||
        layer2_.input_dim() != h || layer2_.hidden_dim() != h ||
        fc_weights_.rows() != config_.num_classes || fc_weights_.cols() != h ||
        fc_bias_.size() != config_.num_classes) {
      throw Error(ErrorKind::kShapeMismatch,
                  "kws network: parameters inconsistent with config");
    }
    stacked_layer2_.resize(4 * h, 2 * h);
    stacked_layer2_ << layer2_.input_weights, layer2_.recurrent_weights;
  }

  static KwsNetwork FromBundle(const WeightBundle& bundle) {
    const KwsConfig config = KwsConfig::FromJson(bundle.config());
    CheckTensors(bundle, KwsTensorSpecs(config));
    const Index h = config.hidden_dim;
    auto layer = [&](const std::string& p, Index d) {
      return nnet::LstmLayerParams<Scalar>{
          ToMatrix<Scalar>(bundle.at(p + ".input_weights"), 4 * h, d),
          ToMatrix<Scalar>(bundle.at(p + ".recurrent_weights"), 4 * h, h),
          ToVector<Scalar>(bundle.at(p + ".bias"))};
    };
    return KwsNetwork(config, layer("lstm1", config.input_dim), layer("lstm2", h),
                      ToMatrix<Scalar>(bundle.at("fc.weight"), config.num_classes, h),
                      ToVector<Scalar>(bundle.at("fc.bias")));
  }

  WeightBundle ToBundle() const {
    WeightBundle bundle(config_.ToJson());
    auto add_layer = [&](const std::string& p, const nnet::LstmLayerParams<Scalar>& l) {
      bundle.add(p + ".input_weights", FromMatrix(l.input_weights));
      bundle.add(p + ".recurrent_weights", FromMatrix(l.recurrent_weights));
      bundle.add(p + ".bias", FromMatrix(l.bias));
    };
    add_layer("lstm1", layer1_);
    add_layer("lstm2", layer2_);
    bundle.add("fc.weight", FromMatrix(fc_weights_));
    bundle.add("fc.bias", FromMatrix(fc_bias_));
    return bundle;
  }

  const KwsConfig& config() const { return config_; }
  const nnet::LstmLayerParams<Scalar>& layer1() const { return layer1_; }
  const nnet::LstmLayerParams<Scalar>& layer2() const { return layer2_; }
  const Matrix<Scalar>& fc_weights() const { return fc_weights_; }
  const Vector<Scalar>& fc_bias() const { return fc_bias_; }

  // softmax(FC(mean_t LSTM2(LSTM1(window)))) for one window x D input.
  Vector<Scalar> ClassifyWindow(const Eigen::Ref<const Matrix<Scalar>>& window) const {
    if (window.rows() != config_.window || window.cols() != config_.input_dim) {
      throw Error(ErrorKind::kShapeMismatch,
                  "kws: window must be " + std::to_string(config_.window) + "x" +
                      std::to_string(config_.input_dim) + ", got " +
                      std::to_string(window.rows()) + "x" +
                      std::to_string(window.cols()));
    }
    const Matrix<Scalar> h1 = nnet::LstmForward(layer1_, window);
    const Matrix<Scalar> h2 = nnet::LstmForward<Scalar>(layer2_, h1);
    const Vector<Scalar> context = nnet::AveragePool<Scalar>(h2);
    const Vector<Scalar> logits = fc_weights_ * context + fc_bias_;
    return nnet::Softmax<Scalar>(logits);
  }

  // ClassifyWindow on every hop-1 window, batched: windows advance through
  // their time steps together so each step is one matrix product.
  PosteriorSequence Posteriors(const FeatureMatrix& features) const {
    const Index num = NumWindows(features.rows(), config_.window, 1);
    if (features.cols() != config_.input_dim) {
      throw Error(ErrorKind::kShapeMismatch, "kws: feature width mismatch");
    }
    const Index h = config_.hidden_dim;
    Matrix<Scalar> projected =
        layer1_.input_weights * features.template cast<Scalar>().transpose();
    projected.colwise() += layer1_.bias;

    PosteriorSequence out;
    out.probs.resize(num, config_.num_classes);
    out.keyword_classes.assign(config_.keyword_classes.begin(),
                               config_.keyword_classes.end());
    out.filler_class = config_.filler_class;
    out.frame_offset = config_.window - 1;

    constexpr Index kBatch = 256;
    Matrix<Scalar> c1, h12, c2, sum, pre1, pre2;
    for (Index start = 0; start < num; start += kBatch) {
      const Index b = std::min(kBatch, num - start);
      c1.setZero(h, b);
      c2.setZero(h, b);
      h12.setZero(2 * h, b);  // [h1; h2] stacked for the layer-2 product
      sum.setZero(h, b);
      for (Index k = 0; k < config_.window; ++k) {
        pre1.noalias() = layer1_.recurrent_weights * h12.topRows(h);
        pre1 += projected.middleCols(start + k, b);
        auto h1 = h12.topRows(h);
        nnet::LstmCellUpdate<Scalar>(pre1, c1, h1);
        pre2.noalias() = stacked_layer2_ * h12;
        pre2.colwise() += layer2_.bias;
        auto h2 = h12.bottomRows(h);
        nnet::LstmCellUpdate<Scalar>(pre2, c2, h2);
        sum += h12.bottomRows(h);
      }
      Matrix<Scalar> logits = fc_weights_ * (sum / Scalar(config_.window));
      logits.colwise() += fc_bias_;
      for (Index j = 0; j < b; ++j) {
        out.probs.row(start + j) =
            nnet::Softmax<Scalar>(logits.col(j)).template cast<double>().transpose();
      }
    }
    return out;
  }

 private:
  KwsConfig config_;
  nnet::LstmLayerParams<Scalar> layer1_;
  nnet::LstmLayerParams<Scalar> layer2_;
  Matrix<Scalar> fc_weights_;
  Vector<Scalar> fc_bias_;
  Matrix<Scalar> stacked_layer2_;  // [input_weights recurrent_weights]
};

}  // namespace pvt

#endif  // PVT_KWS_NET_H_
