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

#ifndef PVT_WEIGHTS_H_
#define PVT_WEIGHTS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pvt/common.h"

namespace pvt {

// Row-major float tensor as stored on disk.
struct Tensor {
  std::vector<uint32_t> shape;
  std::vector<float> data;

  size_t num_elements() const;
  bool operator==(const Tensor&) const = default;
};

std::string ShapeString(const std::vector<uint32_t>& shape);

// PVTW container: magic "PVTW", u32 version, u32 config length, JSON config,
// u32 tensor count, then per tensor u16 name length, name, u8 rank,
// rank x u32 dims, f32 values. Everything little-endian.
class WeightBundle {
 public:
  static constexpr uint32_t kFormatVersion = 1;

  WeightBundle() = default;
  explicit WeightBundle(nlohmann::json config);

  uint32_t format_version() const { return format_version_; }
  const nlohmann::json& config() const { return config_; }
  // Exact config bytes, preserved across load/save.
  const std::string& config_text() const { return config_text_; }
  void set_config(nlohmann::json config);
  // Parses `text` as the config and keeps it verbatim; throws kFormat.
  void set_config_text(std::string text);

  const std::vector<std::pair<std::string, Tensor>>& tensors() const {
    return tensors_;
  }
  bool contains(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  // Throws kInvalidArgument on a duplicate name or inconsistent tensor.
  void add(std::string name, Tensor tensor);
  // Replaces an existing tensor; used by tests to plant corruption.
  Tensor& mutable_at(const std::string& name);

 private:
  uint32_t format_version_ = kFormatVersion;
  nlohmann::json config_;
  std::string config_text_;
  std::vector<std::pair<std::string, Tensor>> tensors_;
};

// Raw container I/O; no architecture checks.
WeightBundle ReadBundle(std::istream& in, const std::string& name);
void WriteBundle(std::ostream& out, const WeightBundle& bundle);

// Reads a PVTW file and validates every tensor against the architecture
// declared in its config ("arch": "kws_lstm" or "resnet_se_asp").
WeightBundle LoadWeights(const std::string& path);
void SaveWeights(const std::string& path, const WeightBundle& bundle);

struct TensorSpec {
  std::string name;
  std::vector<uint32_t> shape;
};

// Throws kMissingTensor / kShapeMismatch naming the offending tensor.
void CheckTensors(const WeightBundle& bundle,
                  const std::vector<TensorSpec>& required);

// Architecture-specific spec lookup; throws kFormat on an unknown arch.
std::vector<TensorSpec> RequiredTensors(const nlohmann::json& config);

void ValidateBundle(const WeightBundle& bundle);

// Eigen views over stored tensors (copying, scalar converted).
template <typename Scalar>
Matrix<Scalar> ToMatrix(const Tensor& t, Index rows, Index cols) {
  Eigen::Map<const RowMatrix<float>> m(t.data.data(), rows, cols);
  return m.template cast<Scalar>();
}

template <typename Scalar>
Vector<Scalar> ToVector(const Tensor& t) {
  Eigen::Map<const Vector<float>> v(t.data.data(),
                                    static_cast<Index>(t.data.size()));
  return v.template cast<Scalar>();
}

template <typename Derived>
Tensor FromMatrix(const Eigen::MatrixBase<Derived>& m,
                  std::vector<uint32_t> shape = {}) {
  Tensor t;
  if (shape.empty()) {
    if (m.cols() == 1) {
      shape = {static_cast<uint32_t>(m.rows())};
    } else {
      shape = {static_cast<uint32_t>(m.rows()), static_cast<uint32_t>(m.cols())};
    }
  }
  t.shape = std::move(shape);
  t.data.resize(static_cast<size_t>(m.size()));
  Eigen::Map<RowMatrix<float>>(t.data.data(), m.rows(), m.cols()) =
      m.template cast<float>();
  return t;
}

}  // namespace pvt

#endif  // PVT_WEIGHTS_H_
