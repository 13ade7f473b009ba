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

#include "pvt/decoder.h"

#include <gtest/gtest.h>

#include <random>

#include "oracles.h"
#include "test_util.h"

namespace pvt {
namespace {

// Random posteriors, rows normalized, with occasional exact zeros.
Matrix<double> RandomPosteriors(std::mt19937_64& rng, Index t, Index c) {
  Matrix<double> p = testing::RandomMatrix(rng, t, c, 0.0, 1.0);
  std::bernoulli_distribution zero(0.1);
  for (Index i = 0; i < p.size(); ++i) {
    if (zero(rng)) p.data()[i] = 0.0;
  }
  for (Index r = 0; r < t; ++r) {
    const double s = p.row(r).sum();
    if (s > 0) p.row(r) /= s;
  }
  return p;
}

TEST(Confidence, MatchesBruteForceEnumeration) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> m_dist(1, 4);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = m_dist(rng);
    const Index t = std::uniform_int_distribution<Index>(m, 8)(rng);
    const Index c = m + 1;
    const Matrix<double> p = RandomPosteriors(rng, t, c);
    std::vector<int> subwords(static_cast<size_t>(m));
    std::uniform_int_distribution<int> cls(0, static_cast<int>(c) - 1);
    for (int& w : subwords) w = cls(rng);
    const ConfidenceScore s = Confidence(p, subwords, 100);
    ASSERT_NEAR(s.value, oracle::BruteConfidence(p, subwords), 1e-9);
    // The alignment attains the value.
    ASSERT_EQ(s.alignment.size(), subwords.size());
    double log_sum = 0.0;
    for (size_t i = 0; i < subwords.size(); ++i) {
      const Index row = s.alignment[i] - 100;
      ASSERT_GE(row, 0);
      ASSERT_LT(row, t);
      if (i > 0) {
        ASSERT_GT(s.alignment[i], s.alignment[i - 1]);
      }
      log_sum += std::log(std::max(p(row, subwords[i]), kPosteriorFloor));
    }
    ASSERT_NEAR(std::exp(log_sum / m), s.value, 1e-9);
    EXPECT_EQ(s.begin, 100);
    EXPECT_EQ(s.end, 100 + t);
  }
}

TEST(Confidence, WorkedExamples) {
  Matrix<double> one(3, 1);
  one << 0.2, 0.9, 0.5;
  EXPECT_DOUBLE_EQ(Confidence(one, std::vector<int>{0}).value, 0.9);

  Matrix<double> two(3, 2);
  two << 0.5, 0.3, 0.1, 0.9, 0.2, 0.4;
  const ConfidenceScore s = Confidence(two, std::vector<int>{0, 1});
  EXPECT_NEAR(s.value, std::sqrt(0.45), 1e-12);
  EXPECT_EQ(s.alignment, (std::vector<Index>{0, 1}));

  const Matrix<double> ones = Matrix<double>::Ones(6, 4);
  EXPECT_DOUBLE_EQ(Confidence(ones, std::vector<int>{0, 1, 2}).value, 1.0);
}

TEST(Confidence, TiesKeepEarliestPlacement) {
  const Matrix<double> flat = Matrix<double>::Constant(5, 2, 0.5);
  EXPECT_EQ(Confidence(flat, std::vector<int>{0, 1}).alignment,
            (std::vector<Index>{0, 1}));
}

TEST(Confidence, RejectsBadInput) {
  const Matrix<double> p = Matrix<double>::Constant(2, 3, 0.3);
  EXPECT_THROW(Confidence(p, std::vector<int>{0, 1, 2}), Error);
  EXPECT_THROW(Confidence(p, std::vector<int>{}), Error);
  EXPECT_THROW(Confidence(p, std::vector<int>{3}), Error);
}

TEST(Confidence, MonotoneInPosteriors) {
  std::mt19937_64 rng(42);
  const std::vector<int> sw{0, 1, 2};
  for (int trial = 0; trial < 200; ++trial) {
    Matrix<double> p = RandomPosteriors(rng, 10, 4);
    const double before = Confidence(p, sw).value;
    const Index r = std::uniform_int_distribution<Index>(0, 9)(rng);
    const Index c = std::uniform_int_distribution<Index>(0, 3)(rng);
    p(r, c) = std::min(1.0, p(r, c) + 0.3);
    ASSERT_GE(Confidence(p, sw).value, before);
  }
}

TEST(Confidence, TimeReversalLowersOrderedPeaks) {
  std::mt19937_64 rng(45);
  const std::vector<int> sw{0, 1, 2};
  for (int trial = 0; trial < 100; ++trial) {
    Matrix<double> p = RandomPosteriors(rng, 12, 4) * 0.1;
    p(1, 0) = 0.9;
    p(5, 1) = 0.9;
    p(9, 2) = 0.9;
    const Matrix<double> reversed = p.colwise().reverse();
    ASSERT_LT(Confidence(reversed, sw).value, Confidence(p, sw).value);
  }
}

PosteriorSequence Stream(const Matrix<double>& p) {
  PosteriorSequence s;
  s.probs = p;
  s.keyword_classes = {0, 1, 2};
  s.filler_class = 3;
  return s;
}

Matrix<double> Filler(Index rows) {
  Matrix<double> p(rows, 4);
  p.rowwise() = Eigen::RowVector4d(1e-6, 1e-6, 1e-6, 1 - 3e-6);
  return p;
}

void PlantKeyword(Matrix<double>& p, Index at, double peak = 0.9) {
  for (Index k = 0; k < 3; ++k) {
    p.row(at + 5 * k).setConstant((1 - peak) / 3);
    p(at + 5 * k, k) = peak;
  }
}

TEST(Detector, FillerNeverFires) {
  const DetectionResult r = DetectStream(Stream(Filler(400)), {});
  EXPECT_TRUE(r.events.empty());
  EXPECT_GT(r.windows_evaluated, 0);
}

TEST(Detector, SingleWindowWithOrderedPeaksFiresOnce) {
  Matrix<double> p = Filler(150);
  PlantKeyword(p, 60);
  const DetectionResult r = DetectStream(Stream(p), {});
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.windows_evaluated, 1);
  EXPECT_EQ(r.events[0].end_row, 149);
  EXPECT_GE(r.events[0].confidence, 0.9 - 1e-12);
  EXPECT_EQ(r.events[0].alignment, (std::vector<Index>{60, 65, 70}));
  EXPECT_NEAR(r.best.value, 0.9, 1e-12);
}

TEST(Detector, ThresholdOneNeverFires) {
  Matrix<double> p = Filler(300);
  PlantKeyword(p, 100, 0.999);
  DetectorConfig c;
  c.threshold = 1.0;
  EXPECT_TRUE(DetectStream(Stream(p), c).events.empty());
}

TEST(Detector, RefractorySuppressesRepeats) {
  Matrix<double> p = Filler(600);
  PlantKeyword(p, 150);
  PlantKeyword(p, 450);
  DetectorConfig c;
  c.refractory = 0;
  const auto all = DetectStream(Stream(p), c).events;
  c.refractory = 100;
  const auto limited = DetectStream(Stream(p), c).events;
  EXPECT_GT(all.size(), limited.size());
  ASSERT_GE(limited.size(), 2u);
  for (size_t i = 1; i < limited.size(); ++i) {
    EXPECT_GT(limited[i].end_row - limited[i - 1].end_row, 100);
  }
}

TEST(Detector, EventCountMonotoneInThreshold) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix<double> p = RandomPosteriors(rng, 500, 4);
    size_t previous = std::numeric_limits<size_t>::max();
    for (double th = 0.0; th <= 1.0; th += 0.05) {
      DetectorConfig c;
      c.threshold = th;
      c.refractory = 0;
      const size_t n = DetectStream(Stream(p), c).events.size();
      ASSERT_LE(n, previous) << "threshold " << th;
      previous = n;
    }
  }
}

TEST(Detector, WindowScheduleAndShortStreams) {
  // 150 + 10k rows evaluate exactly k + 1 windows; a ragged tail adds one.
  EXPECT_EQ(DetectStream(Stream(Filler(250)), {}).windows_evaluated, 11);
  EXPECT_EQ(DetectStream(Stream(Filler(255)), {}).windows_evaluated, 12);
  const DetectionResult short_stream = DetectStream(Stream(Filler(60)), {});
  EXPECT_EQ(short_stream.windows_evaluated, 1);
  EXPECT_EQ(short_stream.best.begin, 0);
  EXPECT_EQ(short_stream.best.end, 60);
  EXPECT_THROW(DetectStream(Stream(Filler(2)), {}), Error);
}

TEST(Detector, StreamingMatchesBatch) {
  std::mt19937_64 rng(44);
  const Matrix<double> p = RandomPosteriors(rng, 333, 4);
  DetectorConfig c;
  c.threshold = 0.3;
  StreamingDetector d(c, {0, 1, 2});
  std::vector<TriggerEvent> events;
  for (Index r = 0; r < p.rows(); ++r) {
    if (auto e = d.Push(p.row(r).transpose())) events.push_back(*e);
  }
  if (auto e = d.Finish()) events.push_back(*e);
  const DetectionResult batch = DetectStream(Stream(p), c);
  ASSERT_EQ(events.size(), batch.events.size());
  for (size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i].end_row, batch.events[i].end_row);
    EXPECT_EQ(events[i].confidence, batch.events[i].confidence);
  }
  EXPECT_THROW(d.Push(p.row(0).transpose()), Error);
}

TEST(Detector, RejectsBadConfig) {
  DetectorConfig c;
  c.threshold = 1.5;
  EXPECT_THROW(Validate(c), Error);
  c = {};
  c.hop = 0;
  EXPECT_THROW(StreamingDetector(c, {0}), Error);
}

}  // namespace
}  // namespace pvt
