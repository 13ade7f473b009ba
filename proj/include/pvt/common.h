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

#ifndef PVT_COMMON_H_
#define PVT_COMMON_H_

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pvt {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class ErrorKind {
  kInvalidArgument,
  kEmptyInput,
  kTooShort,
  kShapeMismatch,
  kFormat,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kMissingTensor,
  kNotNormalized,
  kZeroNorm,
  kIo,
  kParse,
};

const char* ToString(ErrorKind kind);

// All library failures surface as pvt::Error; kind() distinguishes the
// diagnostics that callers and tests need to tell apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pvt

#endif  // PVT_COMMON_H_
