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

#include "pvt/metrics.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "pvt/common.h"

namespace pvt {

double ComputeScore(double miss, double fa, double alpha) {
  if (!(miss >= 0.0 && miss <= 1.0) || !(fa >= 0.0 && fa <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "score_wakeup: rates must lie in [0, 1]");
  }
  return miss + alpha * fa;
}

namespace {

void RequireScores(std::span<const double> pos, std::span<const double> neg,
                   const char* who) {
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorKind::kEmptyInput,
                std::string(who) + ": positive and negative scores must be non-empty");
  }
  for (auto list : {pos, neg}) {
    for (double s : list) {
      if (!std::isfinite(s)) {
        throw Error(ErrorKind::kInvalidArgument, std::string(who) + ": non-finite score");
      }
    }
  }
}

// Rates at every candidate via one sorted sweep.
std::vector<OperatingPoint> Sweep(std::span<const double> pos,
                                  std::span<const double> neg) {
  const std::vector<double> candidates = ThresholdCandidates(pos, neg);
  std::vector<double> p(pos.begin(), pos.end()), n(neg.begin(), neg.end());
  std::sort(p.begin(), p.end());
  std::sort(n.begin(), n.end());
  std::vector<OperatingPoint> points;
  points.reserve(candidates.size());
  size_t pi = 0, ni = 0;
  for (double theta : candidates) {
    while (pi < p.size() && p[pi] < theta) ++pi;
    while (ni < n.size() && n[ni] < theta) ++ni;
    points.push_back({theta, static_cast<double>(pi) / p.size(),
                      static_cast<double>(n.size() - ni) / n.size()});
  }
  return points;
}

// Returns the midpoint of the first run of adjacent candidates that all
// minimize `key` (compared exactly).
template <typename Key>
size_t FirstMinimalRun(const std::vector<OperatingPoint>& pts, Key key,
                       size_t* run_end) {
  size_t best = 0;
  for (size_t i = 1; i < pts.size(); ++i) {
    if (key(pts[i]) < key(pts[best])) best = i;
  }
  size_t last = best;
  while (last + 1 < pts.size() && !(key(pts[best]) < key(pts[last + 1])) &&
         !(key(pts[last + 1]) < key(pts[best]))) {
    ++last;
  }
  *run_end = last;
  return best;
}

OperatingPoint RatesAt(std::span<const double> pos, std::span<const double> neg,
                       double theta) {
  const auto below = std::count_if(pos.begin(), pos.end(),
                                   [&](double s) { return s < theta; });
  const auto above = std::count_if(neg.begin(), neg.end(),
                                   [&](double s) { return s >= theta; });
  return {theta, static_cast<double>(below) / pos.size(),
          static_cast<double>(above) / neg.size()};
}

OperatingPoint ResolveRun(std::span<const double> pos, std::span<const double> neg,
                          const std::vector<OperatingPoint>& pts, size_t first,
                          size_t last) {
  if (first == last) return pts[first];
  return RatesAt(pos, neg, 0.5 * (pts[first].threshold + pts[last].threshold));
}

}  // namespace

std::vector<double> ThresholdCandidates(std::span<const double> pos,
                                        std::span<const double> neg) {
  std::vector<double> all(pos.begin(), pos.end());
  all.insert(all.end(), neg.begin(), neg.end());
  if (all.empty()) return {};
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> out;
  out.reserve(all.size() + 1);
  out.push_back(all.front() - 1.0);
  for (size_t i = 0; i + 1 < all.size(); ++i) {
    out.push_back(0.5 * (all[i] + all[i + 1]));
  }
  out.push_back(all.back() + 1.0);
  return out;
}

EerResult ComputeEer(std::span<const double> pos, std::span<const double> neg) {
  RequireScores(pos, neg, "compute_eer");
  const std::vector<OperatingPoint> pts = Sweep(pos, neg);
  // Lexicographic key: |FAR - FRR| first, then FAR + FRR.
  auto key = [](const OperatingPoint& p) {
    return std::pair(std::abs(p.far - p.frr), p.far + p.frr);
  };
  size_t last = 0;
  const size_t first = FirstMinimalRun(pts, key, &last);
  const OperatingPoint op = ResolveRun(pos, neg, pts, first, last);
  return {0.5 * (op.far + op.frr), op.threshold, op.frr, op.far};
}

double NormalizedDcf(double frr, double far, const DcfParams& d) {
  const double norm = std::min(d.c_miss * d.p_target, d.c_fa * (1.0 - d.p_target));
  return (d.c_miss * d.p_target * frr + d.c_fa * (1.0 - d.p_target) * far) / norm;
}

MinDcfResult ComputeMinDcf(std::span<const double> pos, std::span<const double> neg,
                           const DcfParams& params) {
  RequireScores(pos, neg, "compute_mindcf");
  if (!(params.p_target > 0.0 && params.p_target < 1.0) || !(params.c_miss > 0.0) ||
      !(params.c_fa > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "compute_mindcf: need 0 < p_target < 1 and positive costs");
  }
  const std::vector<OperatingPoint> pts = Sweep(pos, neg);
  auto key = [&](const OperatingPoint& p) { return NormalizedDcf(p.frr, p.far, params); };
  size_t last = 0;
  const size_t first = FirstMinimalRun(pts, key, &last);
  const OperatingPoint op = ResolveRun(pos, neg, pts, first, last);
  return {NormalizedDcf(op.frr, op.far, params), op.threshold};
}

FrAtFaResult FrAtFaPerHour(std::span<const double> pos_confidences,
                           std::span<const double> neg_confidences,
                           double negative_hours, double target_fa_per_hour) {
  if (!(negative_hours > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "fr_at_fa: no negative audio");
  }
  if (pos_confidences.empty()) {
    throw Error(ErrorKind::kEmptyInput, "fr_at_fa: no positive confidences");
  }
  if (!(target_fa_per_hour >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "fr_at_fa: negative target rate");
  }
  std::vector<double> neg(neg_confidences.begin(), neg_confidences.end());
  std::sort(neg.begin(), neg.end(), std::greater<>());
  // Largest alarm count allowed; std::isinf target admits everything.
  const double allowed_real = target_fa_per_hour * negative_hours;
  const size_t allowed = std::isinf(allowed_real) || allowed_real >= neg.size()
                             ? neg.size()
                             : static_cast<size_t>(std::floor(allowed_real + 1e-12));

  FrAtFaResult out;
  size_t alarms = 0;
  if (allowed >= neg.size()) {
    out.threshold = -std::numeric_limits<double>::infinity();
    alarms = neg.size();
  } else {
    // Fire only above the (allowed+1)-th highest negative; ties at that
    // value are excluded together.
    out.threshold = neg[allowed];
    alarms = static_cast<size_t>(
        std::count_if(neg.begin(), neg.end(), [&](double s) { return s > out.threshold; }));
  }
  const auto rejected =
      std::count_if(pos_confidences.begin(), pos_confidences.end(),
                    [&](double s) { return !(s > out.threshold); });
  out.fr_percent = 100.0 * static_cast<double>(rejected) / pos_confidences.size();
  out.fa_per_hour = static_cast<double>(alarms) / negative_hours;
  return out;
}

}  // namespace pvt
