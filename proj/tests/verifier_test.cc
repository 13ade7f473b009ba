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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "test_util.h"

namespace pvt {
namespace {

Embedding Unit(std::initializer_list<float> v) {
  Embedding e(static_cast<Index>(v.size()));
  Index i = 0;
  for (float x : v) e[i++] = x;
  return e.normalized();
}

TEST(Enroll, AveragesAndNormalizes) {
  const Embedding v = Unit({1, 2, 3});
  const std::vector<Embedding> three{v, v, v};
  const SpeakerProfile p = Enroll("alice", three);
  EXPECT_LT((p.embedding - v).norm(), 1e-6f);
  EXPECT_EQ(p.num_enroll, 3);

  const std::vector<Embedding> ortho{Unit({1, 0}), Unit({0, 1})};
  const SpeakerProfile q = Enroll("bob", ortho);
  EXPECT_NEAR(q.embedding[0], 1 / std::sqrt(2.0f), 1e-7f);
  EXPECT_NEAR(q.embedding[1], 1 / std::sqrt(2.0f), 1e-7f);
}

TEST(Enroll, Errors) {
  const Embedding v = Unit({1, 0, 0});
  auto kind = [](std::vector<Embedding> e) {
    try {
      Enroll("x", e);
    } catch (const Error& err) {
      return err.kind();
    }
    return ErrorKind::kIo;
  };
  EXPECT_EQ(kind({}), ErrorKind::kEmptyInput);
  EXPECT_EQ(kind({v, v, v, v}), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind({v, Embedding(-v)}), ErrorKind::kZeroNorm);
  EXPECT_EQ(kind({Embedding(v * 1.01f)}), ErrorKind::kNotNormalized);
}

TEST(Score, Cosine) {
  const Embedding v = Unit({3, -1, 2});
  EXPECT_NEAR(Score(v, v), 1.0, 1e-6);
  EXPECT_NEAR(Score(Unit({1, 0}), Unit({0, 1})), 0.0, 1e-12);
  EXPECT_NEAR(Score(v, Embedding(-v)), -1.0, 1e-6);
  EXPECT_LE(Score(v, v), 1.0);
  EXPECT_THROW(Score(v, Unit({1, 0})), Error);
}

TEST(Calibrate, ThresholdsAndOperatingPoints) {
  const std::vector<double> pos{0.9, 0.8}, neg{0.1, 0.2};
  const ThresholdSet set = Calibrate(pos, neg);
  EXPECT_DOUBLE_EQ(set.thr_eer, 0.5);
  EXPECT_EQ(set.eer, 0.0);
  EXPECT_EQ(set.thr_mean, (set.thr_eer + set.thr_mindcf) / 2);
  EXPECT_EQ(SelectThreshold(set, SvOperatingPoint::kV1), set.thr_eer);
  EXPECT_EQ(SelectThreshold(set, SvOperatingPoint::kV2), set.thr_mean);

  ThresholdSet manual;
  manual.thr_eer = 0.4;
  manual.thr_mindcf = 0.6;
  manual.thr_mean = 0.5;
  const ThresholdSet back = ThresholdSet::FromJson(manual.ToJson());
  EXPECT_EQ(back.thr_mean, 0.5);
  EXPECT_EQ(ParseOperatingPoint("v1"), SvOperatingPoint::kV1);
  EXPECT_THROW(ParseOperatingPoint("v3"), Error);
}

TEST(Profile, SaveLoadRoundTrip) {
  testing::TempDir dir("profiles");
  const std::vector<Embedding> e{Unit({0.3f, -0.2f, 0.9f})};
  const SpeakerProfile p = Enroll("spk1", e);
  SaveProfile(dir.path().string(), p);
  EXPECT_TRUE(std::filesystem::exists(ProfilePath(dir.path().string(), "spk1")));
  const SpeakerProfile q = LoadProfile(dir.path().string(), "spk1");
  EXPECT_EQ(q.speaker_id, "spk1");
  EXPECT_EQ(q.num_enroll, 1);
  EXPECT_EQ(q.embedding, p.embedding);
  const auto j = ProfileToJson(p);
  EXPECT_EQ(j.at("engine_version"), EngineVersion());
  EXPECT_THROW(LoadProfile(dir.path().string(), "nobody"), Error);
}

TEST(Profile, RejectsNonUnitEmbedding) {
  auto j = ProfileToJson(Enroll("s", std::vector<Embedding>{Unit({1, 0})}));
  j["embedding"] = {2.0, 0.0};
  EXPECT_THROW(ProfileFromJson(j), Error);
}

}  // namespace
}  // namespace pvt
