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

#include "pvt/weights.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pvt/embedding_net.h"
#include "pvt/kws_net.h"
#include "pvt/model_config.h"
#include "test_util.h"

namespace pvt {
namespace {

std::string Serialize(const WeightBundle& b) {
  std::ostringstream out;
  WriteBundle(out, b);
  return out.str();
}

WeightBundle Parse(const std::string& bytes) {
  std::istringstream in(bytes);
  return ReadBundle(in, "test");
}

// Copy of `b` with one tensor replaced.
WeightBundle Replace(const WeightBundle& b, const std::string& name, Tensor t) {
  WeightBundle out(b.config());
  for (const auto& [n, v] : b.tensors()) out.add(n, n == name ? t : v);
  return out;
}

ErrorKind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidArgument;
}

std::string MessageOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Pvtw, RoundTripIsBitIdentical) {
  for (const WeightBundle& b : {RandomKwsWeights(1), RandomEmbeddingWeights(2)}) {
    const std::string bytes = Serialize(b);
    const WeightBundle back = Parse(bytes);
    EXPECT_EQ(back.config_text(), b.config_text());
    ASSERT_EQ(back.tensors().size(), b.tensors().size());
    for (size_t i = 0; i < b.tensors().size(); ++i) {
      EXPECT_EQ(back.tensors()[i].first, b.tensors()[i].first);
      EXPECT_EQ(back.tensors()[i].second, b.tensors()[i].second);
    }
    EXPECT_EQ(Serialize(back), bytes);
  }
}

TEST(Pvtw, FileRoundTripGivesBitIdenticalForwardPass) {
  testing::TempDir dir("pvtw");
  SaveWeights(dir / "kws.pvtw", RandomKwsWeights(3));
  SaveWeights(dir / "emb.pvtw", RandomEmbeddingWeights(4));
  const auto kws_a = KwsNetwork<float>::FromBundle(RandomKwsWeights(3));
  const auto kws_b = KwsNetwork<float>::FromBundle(LoadWeights(dir / "kws.pvtw"));
  const auto emb_a = EmbeddingNetwork<float>::FromBundle(RandomEmbeddingWeights(4));
  const auto emb_b = EmbeddingNetwork<float>::FromBundle(LoadWeights(dir / "emb.pvtw"));
  std::mt19937_64 rng(9);
  const FeatureMatrix f = testing::RandomMatrix(rng, 60, 80, -5, 5).cast<float>();
  EXPECT_EQ(kws_a.Posteriors(f).probs, kws_b.Posteriors(f).probs);
  EXPECT_EQ(emb_a.Embed(f), emb_b.Embed(f));
  // KwsNetwork::ToBundle reproduces the same tensors.
  EXPECT_EQ(Serialize(kws_b.ToBundle()), Serialize(LoadWeights(dir / "kws.pvtw")));
}

TEST(Pvtw, BadMagic) {
  std::string bytes = Serialize(RandomKwsWeights(1));
  bytes[0] = 'X';
  EXPECT_EQ(KindOf([&] { Parse(bytes); }), ErrorKind::kBadMagic);
  EXPECT_NE(MessageOf([&] { Parse(bytes); }).find("magic"), std::string::npos);
}

TEST(Pvtw, UnsupportedVersion) {
  std::string bytes = Serialize(RandomKwsWeights(1));
  bytes[4] = 2;
  EXPECT_EQ(KindOf([&] { Parse(bytes); }), ErrorKind::kUnsupportedVersion);
  EXPECT_NE(MessageOf([&] { Parse(bytes); }).find("version 2"), std::string::npos);
}

TEST(Pvtw, EveryTruncationIsRejected) {
  WeightBundle small(nlohmann::json{{"arch", "toy"}});
  small.add("a", {{2, 3}, {1, 2, 3, 4, 5, 6}});
  small.add("b", {{2}, {7, 8}});
  const std::string bytes = Serialize(small);
  for (size_t n = 0; n < bytes.size(); ++n) {
    EXPECT_EQ(KindOf([&] { Parse(bytes.substr(0, n)); }), ErrorKind::kTruncated)
        << "prefix " << n;
  }
  EXPECT_NE(MessageOf([&] { Parse(bytes.substr(0, bytes.size() - 1)); }).find("'b'"),
            std::string::npos);
}

TEST(Pvtw, TrailingBytesNonFiniteAndDuplicates) {
  WeightBundle small(nlohmann::json{{"arch", "toy"}});
  small.add("a", {{1}, {1}});
  EXPECT_EQ(KindOf([&] { Parse(Serialize(small) + "x"); }), ErrorKind::kFormat);
  WeightBundle nan(nlohmann::json{{"arch", "toy"}});
  nan.add("a", {{1}, {std::numeric_limits<float>::quiet_NaN()}});
  EXPECT_EQ(KindOf([&] { Parse(Serialize(nan)); }), ErrorKind::kFormat);
  EXPECT_THROW(small.add("a", {{1}, {2}}), Error);
  EXPECT_THROW(small.add("c", {{2}, {1}}), Error);
}

TEST(Pvtw, WrongShapeNamesTheTensor) {
  const WeightBundle good = RandomKwsWeights(1);
  Tensor bad;
  bad.shape = {512, 127};
  bad.data.assign(512 * 127, 0.0f);
  const WeightBundle b = Replace(good, "lstm2.recurrent_weights", bad);
  EXPECT_EQ(KindOf([&] { ValidateBundle(b); }), ErrorKind::kShapeMismatch);
  const std::string msg = MessageOf([&] { KwsNetwork<float>::FromBundle(b); });
  EXPECT_NE(msg.find("lstm2.recurrent_weights"), std::string::npos) << msg;
  EXPECT_NE(msg.find("[512, 128]"), std::string::npos) << msg;
}

TEST(Pvtw, MissingTensorIsNamed) {
  const WeightBundle good = RandomEmbeddingWeights(1);
  WeightBundle b(good.config());
  for (const auto& [n, t] : good.tensors()) {
    if (n != "stage2.block1.se.expand.bias") b.add(n, t);
  }
  EXPECT_EQ(KindOf([&] { ValidateBundle(b); }), ErrorKind::kMissingTensor);
  EXPECT_NE(MessageOf([&] { EmbeddingNetwork<float>::FromBundle(b); })
                .find("stage2.block1.se.expand.bias"),
            std::string::npos);
}

TEST(Pvtw, LoadReportsMissingFile) {
  EXPECT_EQ(KindOf([] { LoadWeights("/nonexistent/x.pvtw"); }), ErrorKind::kIo);
}

TEST(Pvtw, RandomWeightsAreSeeded) {
  EXPECT_EQ(Serialize(RandomKwsWeights(5)), Serialize(RandomKwsWeights(5)));
  EXPECT_NE(Serialize(RandomKwsWeights(5)), Serialize(RandomKwsWeights(6)));
}

}  // namespace
}  // namespace pvt
