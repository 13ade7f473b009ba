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

#ifndef PVT_METRICS_H_
#define PVT_METRICS_H_

#include <span>
#include <vector>

namespace pvt {

// Miss + alpha * FA. alpha = (1 - P_pos) / P_pos = 19 for P_pos = 0.05.
inline constexpr double kWakeupAlpha = 19.0;
double ComputeScore(double miss, double fa, double alpha = kWakeupAlpha);

// Candidate thresholds: midpoints of adjacent sorted distinct scores, plus
// one sentinel below the minimum and one above the maximum (min - 1, max + 1).
std::vector<double> ThresholdCandidates(std::span<const double> pos,
                                        std::span<const double> neg);

// FRR(theta) = #pos < theta / #pos; FAR(theta) = #neg >= theta / #neg.
struct OperatingPoint {
  double threshold = 0.0;
  double frr = 0.0;
  double far = 0.0;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  double frr = 0.0;
  double far = 0.0;
};

// Minimizes |FAR - FRR| over the candidate grid; ties go to smaller FAR + FRR,
// and a run of adjacent tied candidates resolves to its midpoint.
// eer = (FAR + FRR) / 2 at the returned threshold.
EerResult ComputeEer(std::span<const double> pos, std::span<const double> neg);

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;
};

struct MinDcfResult {
  double min_dcf = 0.0;  // normalized
  double threshold = 0.0;
};

// DCF = c_miss p FRR + c_fa (1 - p) FAR over the same grid, normalized by
// min(c_miss p, c_fa (1 - p)); tie runs resolve to their midpoint.
MinDcfResult ComputeMinDcf(std::span<const double> pos, std::span<const double> neg,
                           const DcfParams& params = {});

double NormalizedDcf(double frr, double far, const DcfParams& params);

struct FrAtFaResult {
  double fr_percent = 0.0;
  // Trigger threshold (fires when confidence > threshold) achieving it.
  double threshold = 0.0;
  double fa_per_hour = 0.0;
};

// Lowest trigger threshold whose false alarms per hour of negative audio stay
// within the target. Each negative confidence is one false alarm when it
// exceeds the threshold; positives at or below it are false rejections.
// Throws if negative_hours <= 0.
FrAtFaResult FrAtFaPerHour(std::span<const double> pos_confidences,
                           std::span<const double> neg_confidences,
                           double negative_hours, double target_fa_per_hour = 1.0);

}  // namespace pvt

#endif  // PVT_METRICS_H_
