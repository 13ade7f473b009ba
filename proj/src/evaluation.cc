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

#include "pvt/evaluation.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <thread>

namespace pvt {

double RoundTo6(double x) { return std::round(x * 1e6) / 1e6; }

std::string EvalReport::ToJson() const {
  auto num = [](std::optional<double> v) -> std::string {
    if (!v || !std::isfinite(*v)) return "null";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
  };
  std::string s = "{\n";
  s += "  \"num_pos\": " + std::to_string(num_pos) + ",\n";
  s += "  \"num_neg\": " + std::to_string(num_neg) + ",\n";
  s += "  \"miss_rate\": " + num(miss_rate) + ",\n";
  s += "  \"fa_rate\": " + num(fa_rate) + ",\n";
  s += "  \"score_wakeup\": " + num(score_wakeup) + ",\n";
  s += "  \"eer\": " + num(eer) + ",\n";
  s += "  \"min_dcf\": " + num(min_dcf) + ",\n";
  s += "  \"fr_at_1fa_per_hour\": " + num(fr_at_1fa_per_hour) + ",\n";
  s += "  \"rtf\": " + num(rtf) + "\n";
  s += "}\n";
  return s;
}

EvalReport Summarize(const std::vector<TrialOutcome>& outcomes,
                     const MetricOptions& options) {
  EvalReport r;
  size_t missed = 0, false_accepts = 0;
  std::vector<double> sv_pos, sv_neg, kws_pos, kws_neg;
  double neg_seconds = 0.0;
  bool durations_known = true;
  for (const auto& o : outcomes) {
    const bool positive = o.label == Label::kPositive;
    if (positive) {
      ++r.num_pos;
      if (!o.accepted) ++missed;
      kws_pos.push_back(o.kws_confidence);
    } else {
      ++r.num_neg;
      if (o.accepted) ++false_accepts;
      kws_neg.push_back(o.kws_confidence);
      neg_seconds += o.test_seconds;
      durations_known = durations_known && o.test_seconds > 0.0;
    }
    if (o.kws_triggered && o.sv_score) {
      (positive ? sv_pos : sv_neg).push_back(*o.sv_score);
    }
  }
  if (r.num_pos == 0 || r.num_neg == 0) {
    throw Error(ErrorKind::kEmptyInput,
                "evaluate: need at least one positive and one negative trial");
  }
  r.miss_rate = RoundTo6(static_cast<double>(missed) / r.num_pos);
  r.fa_rate = RoundTo6(static_cast<double>(false_accepts) / r.num_neg);
  r.score_wakeup = RoundTo6(ComputeScore(r.miss_rate, r.fa_rate));
  if (!sv_pos.empty() && !sv_neg.empty()) {
    r.eer = ComputeEer(sv_pos, sv_neg).eer;
    r.min_dcf = ComputeMinDcf(sv_pos, sv_neg, options.dcf).min_dcf;
  }
  if (durations_known && neg_seconds > 0.0) {
    r.fr_at_1fa_per_hour =
        FrAtFaPerHour(kws_pos, kws_neg, neg_seconds / 3600.0, options.target_fa_per_hour)
            .fr_percent;
  }
  return r;
}

EvalOutcome Evaluate(const std::vector<Trial>& trials, const std::string& base_dir,
                     const VoiceTrigger& trigger, const EvalOptions& options) {
  if (trials.empty()) throw Error(ErrorKind::kEmptyInput, "evaluate: no trials");
  for (const auto& t : trials) {
    for (const auto* path : {&t.enrollment[0], &t.enrollment[1], &t.enrollment[2], &t.test}) {
      if (!std::filesystem::exists(ResolvePath(base_dir, *path))) {
        throw Error(ErrorKind::kIo, "evaluate: trial line " + std::to_string(t.line) +
                                        ": missing audio file " + *path);
      }
    }
  }

  EnrollmentCache enrollments(trigger, base_dir);
  EvalOutcome out;
  out.decisions.resize(trials.size());
  out.outcomes.resize(trials.size());

  auto run_one = [&](size_t i) {
    const Trial& trial = trials[i];
    const SpeakerProfile& profile = enrollments.Get(trial);
    const AudioSignal audio = ReadWav(ResolvePath(base_dir, trial.test));
    TriggerDecision d;
    {
      VoiceTrigger::TimingScope timed(trigger);
      d = trigger.Process(audio, profile);
    }
    out.outcomes[i] = {trial.label, d.kws_confidence, d.kws_triggered, d.sv_score,
                       d.accepted, audio.duration_seconds()};
    out.decisions[i] = std::move(d);
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (size_t i = 0; i < trials.size(); ++i) run_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (size_t i = next++; i < trials.size(); i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
            next = trials.size();
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
  }

  double process = 0.0, total = 0.0;
  for (size_t i = 0; i < trials.size(); ++i) {
    process += out.decisions[i].processing_seconds;
    total += out.outcomes[i].test_seconds;
  }
  out.rtf = MakeRtfReport(process, total, trials.size(), jobs == 1);
  out.report = Summarize(out.outcomes, options.metrics);
  out.report.rtf = out.rtf.factor;
  return out;
}

EvalReport EvaluateScores(const std::vector<ScoredTrial>& rows, double kws_threshold,
                          double sv_threshold, std::optional<double> negative_hours,
                          const MetricOptions& options) {
  std::vector<TrialOutcome> outcomes;
  outcomes.reserve(rows.size());
  size_t num_neg = 0;
  for (const auto& r : rows) {
    TrialOutcome o;
    o.label = r.label;
    o.kws_confidence = r.kws_confidence;
    o.kws_triggered = r.kws_confidence > kws_threshold && r.sv_score.has_value();
    o.sv_score = o.kws_triggered ? r.sv_score : std::nullopt;
    o.accepted = o.kws_triggered && *o.sv_score > sv_threshold;
    if (r.label == Label::kNegative) ++num_neg;
    outcomes.push_back(o);
  }
  // Spread the stated negative duration evenly; only the total matters.
  if (negative_hours && *negative_hours > 0.0 && num_neg > 0) {
    const double each = *negative_hours * 3600.0 / static_cast<double>(num_neg);
    for (auto& o : outcomes) {
      if (o.label == Label::kNegative) o.test_seconds = each;
    }
  }
  return Summarize(outcomes, options);
}

}  // namespace pvt
