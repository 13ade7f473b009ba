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

#ifndef PVT_NNET_H_
#define PVT_NNET_H_

#include <cmath>

#include "pvt/common.h"

// Forward-pass kernels shared by the keyword and speaker networks. Sequences
// are laid out one time step per row.
namespace pvt::nnet {

// Packed gate order is [input, forget, cell candidate, output].
template <typename Scalar>
struct LstmLayerParams {
  Matrix<Scalar> input_weights;      // 4H x D
  Matrix<Scalar> recurrent_weights;  // 4H x H
  Vector<Scalar> bias;               // 4H

  Index input_dim() const { return input_weights.cols(); }
  Index hidden_dim() const { return recurrent_weights.cols(); }

  void Check() const {
    const Index h = hidden_dim();
    if (input_weights.rows() != 4 * h || recurrent_weights.rows() != 4 * h ||
        bias.size() != 4 * h) {
      throw Error(ErrorKind::kShapeMismatch,
                  "lstm: parameter shapes inconsistent with hidden size " +
                      std::to_string(h));
    }
  }

  template <typename Other>
  LstmLayerParams<Other> cast() const {
    return {input_weights.template cast<Other>(),
            recurrent_weights.template cast<Other>(), bias.template cast<Other>()};
  }
};

template <typename Derived>
auto Sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return Scalar(1) / (Scalar(1) + (-x).exp());
}

// Applies the gate nonlinearities to packed pre-activations (4H x B) and
// advances the cell and hidden states (H x B) in place.
template <typename Scalar, typename Gates, typename Cell, typename Hidden>
void LstmCellUpdate(const Eigen::MatrixBase<Gates>& pre, Cell& cell,
                    Hidden& hidden) {
  const Index h = cell.rows();
  const auto i = Sigmoid(pre.topRows(h).array());
  const auto f = Sigmoid(pre.middleRows(h, h).array());
  const auto g = pre.middleRows(2 * h, h).array().tanh();
  const auto o = Sigmoid(pre.bottomRows(h).array());
  cell.array() = f * cell.array() + i * g;
  hidden.array() = o * cell.array().tanh();
}

// h = LSTM(x) from zero initial state; x is T x D, result T x H.
template <typename Scalar>
Matrix<Scalar> LstmForward(const LstmLayerParams<Scalar>& params,
                           const Eigen::Ref<const Matrix<Scalar>>& x) {
  params.Check();
  if (x.cols() != params.input_dim()) {
    throw Error(ErrorKind::kShapeMismatch,
                "lstm: input width " + std::to_string(x.cols()) +
                    " does not match D=" + std::to_string(params.input_dim()));
  }
  const Index steps = x.rows();
  const Index h = params.hidden_dim();
  // Input projections for every step in one product.
  Matrix<Scalar> projected = params.input_weights * x.transpose();
  projected.colwise() += params.bias;

  Matrix<Scalar> out(steps, h);
  Matrix<Scalar> cell = Matrix<Scalar>::Zero(h, 1);
  Matrix<Scalar> hidden = Matrix<Scalar>::Zero(h, 1);
  Matrix<Scalar> pre(4 * h, 1);
  for (Index t = 0; t < steps; ++t) {
    pre.noalias() = params.recurrent_weights * hidden;
    pre += projected.col(t);
    LstmCellUpdate<Scalar>(pre, cell, hidden);
    out.row(t) = hidden.transpose();
  }
  return out;
}

// c = (1/T) sum_t h_t.
template <typename Scalar>
Vector<Scalar> AveragePool(const Eigen::Ref<const Matrix<Scalar>>& h) {
  if (h.rows() < 1) throw Error(ErrorKind::kEmptyInput, "average_pool: no rows");
  return h.colwise().mean().transpose();
}

// Max-subtracted softmax.
template <typename Scalar>
Vector<Scalar> Softmax(const Eigen::Ref<const Vector<Scalar>>& logits) {
  if (logits.size() == 0) throw Error(ErrorKind::kEmptyInput, "softmax: empty");
  Vector<Scalar> p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

template <typename Scalar>
struct AttentivePoolingParams {
  Matrix<Scalar> projection;  // A x D
  Vector<Scalar> bias;        // A
  Vector<Scalar> context;     // A
};

inline constexpr double kAspVarianceEpsilon = 1e-9;

// Attentive statistics pooling over the rows of h (T x D): returns [mu; sigma]
// with e_t = v . tanh(W h_t + b) and alpha = softmax(e).
template <typename Scalar>
Vector<Scalar> AspPool(const Eigen::Ref<const Matrix<Scalar>>& h,
                       const AttentivePoolingParams<Scalar>& p) {
  const Index d = h.cols();
  if (h.rows() < 1) throw Error(ErrorKind::kEmptyInput, "asp_pool: no rows");
  if (p.projection.cols() != d || p.projection.rows() != p.bias.size() ||
      p.bias.size() != p.context.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "asp_pool: attention parameters do not match feature width " +
                    std::to_string(d));
  }
  Matrix<Scalar> hidden = p.projection * h.transpose();  // A x T
  hidden.colwise() += p.bias;
  const Vector<Scalar> scores =
      (p.context.transpose() * hidden.array().tanh().matrix()).transpose();
  const Vector<Scalar> alpha = Softmax<Scalar>(scores);

  Vector<Scalar> out(2 * d);
  const Vector<Scalar> mu = h.transpose() * alpha;
  const Vector<Scalar> second = h.array().square().matrix().transpose() * alpha;
  out.head(d) = mu;
  out.tail(d) = ((second.array() - mu.array().square()).max(Scalar(0)) +
                 Scalar(kAspVarianceEpsilon))
                    .sqrt()
                    .matrix();
  return out;
}

// Channel-major feature map: one row per channel, spatial positions
// flattened row-major (index = y * width + x).
template <typename Scalar>
struct FeatureMap {
  Matrix<Scalar> data;  // C x (height * width)
  Index height = 0;
  Index width = 0;

  Index channels() const { return data.rows(); }
};

template <typename Scalar>
struct Conv2dParams {
  Matrix<Scalar> weights;  // Cout x (Cin * k * k), ordered [ci][ky][kx]
  Vector<Scalar> bias;     // Cout
  Index kernel = 3;
  Index stride = 1;
  Index padding = 1;

  Index in_channels() const { return weights.cols() / (kernel * kernel); }
  Index out_channels() const { return weights.rows(); }
};

inline Index ConvOutputSize(Index in, Index kernel, Index stride, Index pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

// im2col convolution with zero padding.
template <typename Scalar>
FeatureMap<Scalar> Conv2d(const FeatureMap<Scalar>& x,
                          const Conv2dParams<Scalar>& p) {
  const Index k = p.kernel;
  if (x.channels() != p.in_channels() || p.weights.cols() % (k * k) != 0) {
    throw Error(ErrorKind::kShapeMismatch,
                "conv2d: input has " + std::to_string(x.channels()) +
                    " channels, weights expect " +
                    std::to_string(p.in_channels()));
  }
  const Index oh = ConvOutputSize(x.height, k, p.stride, p.padding);
  const Index ow = ConvOutputSize(x.width, k, p.stride, p.padding);
  if (oh < 1 || ow < 1) {
    throw Error(ErrorKind::kTooShort, "conv2d: input smaller than kernel");
  }
  const Index cin = x.channels();
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(cin * k * k, oh * ow);
  for (Index c = 0; c < cin; ++c) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const Index row = (c * k + ky) * k + kx;
        for (Index y = 0; y < oh; ++y) {
          const Index iy = y * p.stride + ky - p.padding;
          if (iy < 0 || iy >= x.height) continue;
          for (Index xo = 0; xo < ow; ++xo) {
            const Index ix = xo * p.stride + kx - p.padding;
            if (ix < 0 || ix >= x.width) continue;
            cols(row, y * ow + xo) = x.data(c, iy * x.width + ix);
          }
        }
      }
    }
  }
  FeatureMap<Scalar> out;
  out.height = oh;
  out.width = ow;
  out.data.noalias() = p.weights * cols;
  out.data.colwise() += p.bias;
  return out;
}

template <typename Scalar>
struct SqueezeExciteParams {
  Matrix<Scalar> reduce_weights;  // C/r x C
  Vector<Scalar> reduce_bias;
  Matrix<Scalar> expand_weights;  // C x C/r
  Vector<Scalar> expand_bias;
};

// Channel gates in (0, 1): sigmoid(W2 relu(W1 mean(x) + b1) + b2).
template <typename Scalar>
Vector<Scalar> SqueezeExciteGates(const FeatureMap<Scalar>& x,
                                  const SqueezeExciteParams<Scalar>& p) {
  const Vector<Scalar> squeezed = x.data.rowwise().mean();
  const Vector<Scalar> z =
      (p.reduce_weights * squeezed + p.reduce_bias).cwiseMax(Scalar(0));
  return Sigmoid((p.expand_weights * z + p.expand_bias).array()).matrix();
}

template <typename Scalar>
void SqueezeExcite(FeatureMap<Scalar>& x, const SqueezeExciteParams<Scalar>& p) {
  x.data = SqueezeExciteGates(x, p).asDiagonal() * x.data;
}

template <typename Scalar>
void Relu(FeatureMap<Scalar>& x) {
  x.data = x.data.cwiseMax(Scalar(0));
}

}  // namespace pvt::nnet

#endif  // PVT_NNET_H_
