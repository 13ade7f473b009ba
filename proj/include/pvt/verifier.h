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

#ifndef PVT_VERIFIER_H_
#define PVT_VERIFIER_H_

#include <span>
#include <string>

#include "json.hpp"
#include "pvt/common.h"
#include "pvt/metrics.h"

namespace pvt {

inline constexpr double kUnitNormTolerance = 1e-3;
inline constexpr int kMaxEnrollment = 3;

using Embedding = Vector<float>;

struct SpeakerProfile {
  std::string speaker_id;
  Embedding embedding;  // unit norm
  int num_enroll = 0;
};

// L2-normalized mean of 1-3 unit-norm embeddings. Throws kEmptyInput,
// kInvalidArgument (more than three), kNotNormalized or kZeroNorm.
SpeakerProfile Enroll(const std::string& speaker_id,
                      std::span<const Embedding> embeddings);

// Cosine similarity of unit vectors, clamped to [-1, 1].
double Score(const SpeakerProfile& profile, const Embedding& test);
double Score(const Embedding& a, const Embedding& b);

struct ThresholdSet {
  double thr_eer = 0.0;
  double thr_mindcf = 0.0;
  double thr_mean = 0.0;
  double eer = 0.0;
  double min_dcf = 0.0;

  nlohmann::json ToJson() const;
  static ThresholdSet FromJson(const nlohmann::json& j);
};

// Operating points: V1 uses the EER threshold, V2 the mean of EER and
// minDCF thresholds.
enum class SvOperatingPoint { kV1, kV2 };
double SelectThreshold(const ThresholdSet& set, SvOperatingPoint point);
SvOperatingPoint ParseOperatingPoint(const std::string& name);

ThresholdSet Calibrate(std::span<const double> dev_positive,
                       std::span<const double> dev_negative,
                       const DcfParams& dcf = {});

// profiles/<speaker_id>.json
nlohmann::json ProfileToJson(const SpeakerProfile& profile);
SpeakerProfile ProfileFromJson(const nlohmann::json& j);
std::string ProfilePath(const std::string& dir, const std::string& speaker_id);
void SaveProfile(const std::string& dir, const SpeakerProfile& profile);
SpeakerProfile LoadProfile(const std::string& dir, const std::string& speaker_id);

const char* EngineVersion();

}  // namespace pvt

#endif  // PVT_VERIFIER_H_
