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

#include "pvt/verifier.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace pvt {

namespace {

void RequireUnit(const Embedding& e, const char* who) {
  const double norm = e.cast<double>().norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitNormTolerance) {
    throw Error(ErrorKind::kNotNormalized,
                std::string(who) + ": embedding norm " + std::to_string(norm) +
                    " is not 1");
  }
}

}  // namespace

const char* EngineVersion() { return "pvtrigger-" PVT_VERSION; }

SpeakerProfile Enroll(const std::string& speaker_id,
                      std::span<const Embedding> embeddings) {
  if (embeddings.empty()) {
    throw Error(ErrorKind::kEmptyInput, "enroll: no enrollment embeddings");
  }
  if (embeddings.size() > kMaxEnrollment) {
    throw Error(ErrorKind::kInvalidArgument, "enroll: at most three utterances");
  }
  const Index dim = embeddings.front().size();
  Vector<double> sum = Vector<double>::Zero(dim);
  for (const auto& e : embeddings) {
    if (e.size() != dim) {
      throw Error(ErrorKind::kShapeMismatch, "enroll: embedding sizes differ");
    }
    RequireUnit(e, "enroll");
    sum += e.cast<double>();
  }
  const double norm = sum.norm();
  if (norm < 1e-6 * static_cast<double>(embeddings.size())) {
    throw Error(ErrorKind::kZeroNorm, "enroll: mean embedding has zero norm");
  }
  return {speaker_id, (sum / norm).cast<float>(),
          static_cast<int>(embeddings.size())};
}

double Score(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kShapeMismatch, "score: embedding sizes differ");
  }
  RequireUnit(a, "score");
  RequireUnit(b, "score");
  return std::clamp(a.cast<double>().dot(b.cast<double>()), -1.0, 1.0);
}

double Score(const SpeakerProfile& profile, const Embedding& test) {
  return Score(profile.embedding, test);
}

nlohmann::json ThresholdSet::ToJson() const {
  return {{"thr_eer", thr_eer},
          {"thr_mindcf", thr_mindcf},
          {"thr_mean", thr_mean},
          {"eer", eer},
          {"min_dcf", min_dcf}};
}

ThresholdSet ThresholdSet::FromJson(const nlohmann::json& j) {
  try {
    ThresholdSet t;
    t.thr_eer = j.at("thr_eer").get<double>();
    t.thr_mindcf = j.at("thr_mindcf").get<double>();
    t.thr_mean = j.value("thr_mean", 0.5 * (t.thr_eer + t.thr_mindcf));
    t.eer = j.value("eer", 0.0);
    t.min_dcf = j.value("min_dcf", 0.0);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("threshold set: ") + e.what());
  }
}

double SelectThreshold(const ThresholdSet& set, SvOperatingPoint point) {
  return point == SvOperatingPoint::kV1 ? set.thr_eer : set.thr_mean;
}

SvOperatingPoint ParseOperatingPoint(const std::string& name) {
  if (name == "v1" || name == "V1") return SvOperatingPoint::kV1;
  if (name == "v2" || name == "V2") return SvOperatingPoint::kV2;
  throw Error(ErrorKind::kInvalidArgument, "operating point must be v1 or v2");
}

ThresholdSet Calibrate(std::span<const double> dev_positive,
                       std::span<const double> dev_negative, const DcfParams& dcf) {
  const EerResult eer = ComputeEer(dev_positive, dev_negative);
  const MinDcfResult mindcf = ComputeMinDcf(dev_positive, dev_negative, dcf);
  ThresholdSet t;
  t.thr_eer = eer.threshold;
  t.thr_mindcf = mindcf.threshold;
  t.thr_mean = (t.thr_eer + t.thr_mindcf) / 2.0;
  t.eer = eer.eer;
  t.min_dcf = mindcf.min_dcf;
  return t;
}

nlohmann::json ProfileToJson(const SpeakerProfile& p) {
  return {{"speaker_id", p.speaker_id},
          {"embedding", std::vector<float>(p.embedding.begin(), p.embedding.end())},
          {"num_enroll", p.num_enroll},
          {"engine_version", EngineVersion()}};
}

SpeakerProfile ProfileFromJson(const nlohmann::json& j) {
  SpeakerProfile p;
  try {
    p.speaker_id = j.at("speaker_id").get<std::string>();
    const auto values = j.at("embedding").get<std::vector<float>>();
    p.embedding = Eigen::Map<const Embedding>(values.data(),
                                              static_cast<Index>(values.size()));
    p.num_enroll = j.at("num_enroll").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("profile: ") + e.what());
  }
  if (p.num_enroll < 1 || p.num_enroll > kMaxEnrollment) {
    throw Error(ErrorKind::kParse, "profile: num_enroll must be 1-3");
  }
  RequireUnit(p.embedding, "profile");
  return p;
}

std::string ProfilePath(const std::string& dir, const std::string& speaker_id) {
  if (speaker_id.empty() || speaker_id.find('/') != std::string::npos ||
      speaker_id == "." || speaker_id == "..") {
    throw Error(ErrorKind::kInvalidArgument, "profile: bad speaker id '" + speaker_id + "'");
  }
  return (std::filesystem::path(dir) / (speaker_id + ".json")).string();
}

void SaveProfile(const std::string& dir, const SpeakerProfile& profile) {
  std::filesystem::create_directories(dir);
  const std::string path = ProfilePath(dir, profile.speaker_id);
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "profile " + path + ": cannot create");
  out << ProfileToJson(profile).dump(2) << "\n";
}

SpeakerProfile LoadProfile(const std::string& dir, const std::string& speaker_id) {
  const std::string path = ProfilePath(dir, speaker_id);
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "profile " + path + ": cannot open");
  const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::kParse, "profile " + path + ": bad JSON");
  return ProfileFromJson(j);
}

}  // namespace pvt
