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

#include <cmath>
#include <limits>

namespace pvt {

ConfidenceScore Confidence(const Eigen::Ref<const Matrix<double>>& window,
                           std::span<const int> subwords, Index first_row) {
  const Index steps = window.rows();
  const Index m = static_cast<Index>(subwords.size());
  if (m < 1) throw Error(ErrorKind::kInvalidArgument, "confidence: no subwords");
  if (steps < m) {
    throw Error(ErrorKind::kTooShort,
                "confidence: window of " + std::to_string(steps) +
                    " rows cannot align " + std::to_string(m) + " subwords");
  }
  for (int w : subwords) {
    if (w < 0 || w >= window.cols()) {
      throw Error(ErrorKind::kInvalidArgument, "confidence: subword class out of range");
    }
  }
  const double log_floor = std::log(kPosteriorFloor);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // score(i, t): best log product of w_1..w_i using rows < t (t = 0..T).
  // took(i, t): whether the optimum for (i, t) places w_i at row t - 1.
  Matrix<double> score(m + 1, steps + 1);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> took(m + 1, steps + 1);
  score.row(0).setZero();
  took.setConstant(false);
  for (Index i = 1; i <= m; ++i) {
    score(i, 0) = kNegInf;
    const int cls = subwords[static_cast<size_t>(i - 1)];
    for (Index t = 1; t <= steps; ++t) {
      const double logp = std::max(std::log(window(t - 1, cls)), log_floor);
      const double skip = score(i, t - 1);
      const double take = score(i - 1, t - 1) + logp;
      // Ties keep the earlier placement.
      if (take > skip) {
        score(i, t) = take;
        took(i, t) = true;
      } else {
        score(i, t) = skip;
      }
    }
  }

  ConfidenceScore out;
  out.begin = first_row;
  out.end = first_row + steps;
  out.value = std::exp(score(m, steps) / static_cast<double>(m));
  out.alignment.assign(static_cast<size_t>(m), 0);
  Index t = steps;
  for (Index i = m; i >= 1; --i) {
    while (!took(i, t)) --t;
    out.alignment[static_cast<size_t>(i - 1)] = first_row + t - 1;
    --t;
  }
  return out;
}

void Validate(const DetectorConfig& config) {
  if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "detector: threshold must be in [0, 1]");
  }
  if (config.window < 1 || config.hop < 1 || config.refractory < 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "detector: window and hop must be >= 1, refractory >= 0");
  }
}

StreamingDetector::StreamingDetector(DetectorConfig config,
                                     std::vector<int> subwords)
    : config_(config), subwords_(std::move(subwords)) {
  Validate(config_);
  if (subwords_.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "detector: no subwords");
  }
  result_.best.value = -1.0;
}

std::optional<TriggerEvent> StreamingDetector::Evaluate() {
  const Index rows = static_cast<Index>(buffer_.size());
  Matrix<double> window(rows, buffer_.front().size());
  for (Index r = 0; r < rows; ++r) {
    window.row(r) = buffer_[static_cast<size_t>(r)].transpose();
  }
  const Index end_row = rows_seen_ - 1;
  ConfidenceScore score = Confidence(window, subwords_, rows_seen_ - rows);
  last_evaluated_end_ = end_row;
  ++result_.windows_evaluated;
  const double value = score.value;
  if (value > result_.best.value) result_.best = score;

  const bool suppressed =
      last_event_end_ && end_row <= *last_event_end_ + config_.refractory;
  if (value > config_.threshold && !suppressed) {
    last_event_end_ = end_row;
    TriggerEvent event{end_row, value, std::move(score.alignment)};
    result_.events.push_back(event);
    return event;
  }
  return std::nullopt;
}

std::optional<TriggerEvent> StreamingDetector::Push(
    const Eigen::Ref<const Vector<double>>& row) {
  if (finished_) {
    throw Error(ErrorKind::kInvalidArgument, "detector: push after finish");
  }
  if (!buffer_.empty() && row.size() != buffer_.front().size()) {
    throw Error(ErrorKind::kShapeMismatch, "detector: posterior width changed");
  }
  buffer_.emplace_back(row);
  if (static_cast<Index>(buffer_.size()) > config_.window) buffer_.pop_front();
  ++rows_seen_;
  if (rows_seen_ >= config_.window &&
      (rows_seen_ - config_.window) % config_.hop == 0) {
    return Evaluate();
  }
  return std::nullopt;
}

std::optional<TriggerEvent> StreamingDetector::Finish() {
  if (finished_) return std::nullopt;
  finished_ = true;
  const Index m = static_cast<Index>(subwords_.size());
  if (rows_seen_ < m) {
    throw Error(ErrorKind::kTooShort,
                "detector: " + std::to_string(rows_seen_) +
                    " posterior rows, need at least " + std::to_string(m));
  }
  if (last_evaluated_end_ == rows_seen_ - 1) return std::nullopt;
  return Evaluate();
}

DetectionResult DetectStream(const PosteriorSequence& posteriors,
                             const DetectorConfig& config) {
  StreamingDetector detector(config, posteriors.keyword_classes);
  for (Index r = 0; r < posteriors.num_rows(); ++r) {
    detector.Push(posteriors.probs.row(r).transpose());
  }
  detector.Finish();
  return detector.result();
}

}  // namespace pvt
