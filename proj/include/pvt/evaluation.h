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

#ifndef PVT_EVALUATION_H_
#define PVT_EVALUATION_H_

#include <optional>
#include <string>
#include <vector>

#include "pvt/metrics.h"
#include "pvt/pipeline.h"
#include "pvt/trials.h"

namespace pvt {

// Aggregate challenge metrics. Rates are stored rounded to six decimals and
// score_wakeup is computed from the stored rates, so the serialized report
// satisfies score_wakeup = miss_rate + 19 fa_rate digit for digit.
struct EvalReport {
  size_t num_pos = 0;
  size_t num_neg = 0;
  double miss_rate = 0.0;
  double fa_rate = 0.0;
  double score_wakeup = 0.0;
  std::optional<double> eer;
  std::optional<double> min_dcf;
  std::optional<double> fr_at_1fa_per_hour;  // percent
  std::optional<double> rtf;

  // Fixed keys, numbers printed with six decimals, missing values as null.
  std::string ToJson() const;
};

double RoundTo6(double x);

struct TrialOutcome {
  Label label = Label::kNegative;
  double kws_confidence = 0.0;
  bool kws_triggered = false;
  std::optional<double> sv_score;
  bool accepted = false;
  double test_seconds = 0.0;
};

struct MetricOptions {
  DcfParams dcf;
  double target_fa_per_hour = 1.0;
};

// miss = rejected positives / positives, fa = accepted negatives / negatives,
// EER and minDCF over the sv scores of triggered trials, FR at the target
// false alarms per hour of negative test audio (when durations are known).
EvalReport Summarize(const std::vector<TrialOutcome>& outcomes,
                     const MetricOptions& options = {});

struct EvalOptions {
  MetricOptions metrics;
  int jobs = 1;
};

struct EvalOutcome {
  EvalReport report;
  std::vector<TriggerDecision> decisions;  // in trial order
  std::vector<TrialOutcome> outcomes;
  RtfReport rtf;
};

// Runs the pipeline over every trial. With jobs == 1 the run doubles as the
// single-threaded real-time-factor measurement.
EvalOutcome Evaluate(const std::vector<Trial>& trials, const std::string& base_dir,
                     const VoiceTrigger& trigger, const EvalOptions& options = {});

// Re-scores stored (label, kws_confidence, sv_score) rows at new thresholds.
// negative_hours enables the FR@FA metric.
EvalReport EvaluateScores(const std::vector<ScoredTrial>& rows, double kws_threshold,
                          double sv_threshold,
                          std::optional<double> negative_hours = std::nullopt,
                          const MetricOptions& options = {});

}  // namespace pvt

#endif  // PVT_EVALUATION_H_
