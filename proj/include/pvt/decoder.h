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

#ifndef PVT_DECODER_H_
#define PVT_DECODER_H_

#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "pvt/common.h"
#include "pvt/kws_net.h"

namespace pvt {

inline constexpr double kPosteriorFloor = 1e-12;

// Order-constrained keyword confidence over one decision window.
struct ConfidenceScore {
  double value = 0.0;
  Index begin = 0;               // first row of the window
  Index end = 0;                 // one past the last row
  std::vector<Index> alignment;  // t_1 < ... < t_M, absolute rows
};

// [max over t_1 < ... < t_M of prod_i p_{w_i}(t_i)]^(1/M), evaluated by the
// recurrence f[i][t] = max(f[i][t-1], f[i-1][t-1] * p_{w_i}(t)) in the log
// domain. `window` is T x C; `subwords` lists the class of each w_i.
// Row indices in the result are offset by `first_row`.
ConfidenceScore Confidence(const Eigen::Ref<const Matrix<double>>& window,
                           std::span<const int> subwords, Index first_row = 0);

struct DetectorConfig {
  double threshold = 0.5;
  Index window = 150;
  Index hop = 10;
  Index refractory = 100;
};

void Validate(const DetectorConfig& config);

struct TriggerEvent {
  Index end_row = 0;  // last posterior row of the decision window
  double confidence = 0.0;
  std::vector<Index> alignment;
};

struct DetectionResult {
  std::vector<TriggerEvent> events;
  // Highest-scoring decision window, suppressed or not.
  ConfidenceScore best;
  Index windows_evaluated = 0;
};

// Sliding decision windows over a posterior stream. One instance per audio
// stream; rows are pushed as they arrive and Finish() scores the tail.
class StreamingDetector {
 public:
  StreamingDetector(DetectorConfig config, std::vector<int> subwords);

  // Returns an event when the window ending at this row fires.
  std::optional<TriggerEvent> Push(const Eigen::Ref<const Vector<double>>& row);
  // Scores the final partial hop (or the whole stream if shorter than one
  // window). Throws kTooShort if fewer than M rows were pushed.
  std::optional<TriggerEvent> Finish();

  const DetectionResult& result() const { return result_; }
  Index rows_seen() const { return rows_seen_; }

 private:
  std::optional<TriggerEvent> Evaluate();

  DetectorConfig config_;
  std::vector<int> subwords_;
  std::deque<Vector<double>> buffer_;
  Index rows_seen_ = 0;
  Index last_evaluated_end_ = -1;
  std::optional<Index> last_event_end_;
  bool finished_ = false;
  DetectionResult result_;
};

DetectionResult DetectStream(const PosteriorSequence& posteriors,
                             const DetectorConfig& config);

}  // namespace pvt

#endif  // PVT_DECODER_H_
