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

#ifndef PVT_PIPELINE_H_
#define PVT_PIPELINE_H_

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pvt/audio.h"
#include "pvt/decoder.h"
#include "pvt/embedding_net.h"
#include "pvt/frontend.h"
#include "pvt/kws_net.h"
#include "pvt/trials.h"
#include "pvt/verifier.h"

namespace pvt {

struct PipelineConfig {
  DetectorConfig detector;  // detector.threshold is the KWS threshold
  double sv_threshold = 0.5;
  Index segment_margin = 20;  // frames added on each side of the alignment
};

struct KwsStageResult {
  bool triggered = false;
  double confidence = 0.0;
  int channel = 0;
  ConfidenceScore best;          // alignment on `channel`
  FeatureMatrix features;        // features of `channel`
  Index segment_begin = 0;       // feature frames, end exclusive
  Index segment_end = 0;
};

struct TriggerDecision {
  double kws_confidence = 0.0;
  bool kws_triggered = false;
  std::optional<double> sv_score;
  bool accepted = false;
  int channel = 0;
  Index segment_begin = 0;
  Index segment_end = 0;
  double processing_seconds = 0.0;
};

// The two-stage decision table. The speaker stage is invoked only when the
// keyword stage fired; accepted iff triggered and sv_score > sv_threshold.
template <typename SvStage>
TriggerDecision ApplyGate(const KwsStageResult& kws, SvStage&& sv_stage,
                          double sv_threshold) {
  TriggerDecision d;
  d.kws_confidence = kws.confidence;
  d.kws_triggered = kws.triggered;
  d.channel = kws.channel;
  if (!kws.triggered) return d;
  d.segment_begin = kws.segment_begin;
  d.segment_end = kws.segment_end;
  d.sv_score = sv_stage(kws);
  d.accepted = *d.sv_score > sv_threshold;
  return d;
}

struct StageCounters {
  uint64_t kws_runs = 0;
  uint64_t sv_runs = 0;
  uint64_t enrollments = 0;
  uint64_t enrollments_while_timing = 0;
};

// Feature frames spanned by the aligned KWS windows, widened by `margin`
// and clamped to [0, num_frames). Returns [begin, end).
std::pair<Index, Index> AlignmentSegment(const std::vector<Index>& alignment,
                                         Index kws_window, Index margin,
                                         Index num_frames);

// Keyword gate followed by speaker verification. Networks are shared and
// immutable; one instance may serve concurrent calls.
class VoiceTrigger {
 public:
  VoiceTrigger(std::shared_ptr<const KwsNetwork<float>> kws,
               std::shared_ptr<const EmbeddingNetwork<float>> embedder,
               PipelineConfig config);

  const PipelineConfig& config() const { return config_; }

  // Per-channel detection; the channel with the highest confidence wins.
  KwsStageResult RunKws(const AudioSignal& audio) const;

  Embedding EmbedSegment(const FeatureMatrix& features, Index begin, Index end) const;

  // Enrollment embedding: the best-aligned keyword span of channel 0, the
  // same region the test-time segment selection would pick.
  Embedding EnrollmentEmbedding(const AudioSignal& audio) const;

  TriggerDecision Process(const AudioSignal& audio, const SpeakerProfile& profile) const;

  StageCounters counters() const;

  // Marks the calling thread's region timed for real-time-factor accounting.
  class TimingScope {
   public:
    explicit TimingScope(const VoiceTrigger&) { ++timing_depth_; }
    ~TimingScope() { --timing_depth_; }
    TimingScope(const TimingScope&) = delete;
    TimingScope& operator=(const TimingScope&) = delete;
  };

 private:
  std::shared_ptr<const KwsNetwork<float>> kws_;
  std::shared_ptr<const EmbeddingNetwork<float>> embedder_;
  PipelineConfig config_;
  mutable std::atomic<uint64_t> kws_runs_{0};
  mutable std::atomic<uint64_t> sv_runs_{0};
  mutable std::atomic<uint64_t> enrollments_{0};
  mutable std::atomic<uint64_t> enrollments_while_timing_{0};
  static inline thread_local int timing_depth_ = 0;
};

// Enrollment profiles keyed by the trial's enrollment triple; built outside
// any timed region.
class EnrollmentCache {
 public:
  EnrollmentCache(const VoiceTrigger& trigger, std::string base_dir)
      : trigger_(trigger), base_dir_(std::move(base_dir)) {}

  const SpeakerProfile& Get(const Trial& trial);

 private:
  const VoiceTrigger& trigger_;
  std::string base_dir_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<SpeakerProfile>> cache_;
};

// Resolves `path` against `base_dir` unless absolute.
std::string ResolvePath(const std::string& base_dir, const std::string& path);

struct RtfReport {
  double process_seconds = 0.0;     // T_process
  double total_test_seconds = 0.0;  // T_total_test, multi-channel counted once
  double factor = 0.0;
  size_t utterances = 0;
  bool single_threaded = true;
  std::string hardware;

  nlohmann::json ToJson() const;
};

// factor = T_process / T_total_test; throws on an empty set or zero audio.
RtfReport MakeRtfReport(double process_seconds, double total_test_seconds,
                        size_t utterances, bool single_threaded);

// Single-threaded timing of Process over every trial's test audio.
// Enrollment and file decoding happen outside the timed region.
RtfReport MeasureRtf(const std::vector<Trial>& trials, const std::string& base_dir,
                     const VoiceTrigger& trigger);

std::string HardwareDescription();

// "trial_index<TAB>kws_confidence<TAB>sv_score|NA<TAB>accept|reject<TAB>ms"
std::string FormatResultLine(size_t trial_index, const TriggerDecision& d);

}  // namespace pvt

#endif  // PVT_PIPELINE_H_
