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

#include "pvt/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace pvt {

namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::pair<Index, Index> AlignmentSegment(const std::vector<Index>& alignment,
                                         Index kws_window, Index margin,
                                         Index num_frames) {
  if (alignment.empty()) return {0, num_frames};
  const Index first = alignment.front();
  const Index last = alignment.back() + kws_window;  // exclusive
  return {std::max<Index>(0, first - margin), std::min(num_frames, last + margin)};
}

VoiceTrigger::VoiceTrigger(std::shared_ptr<const KwsNetwork<float>> kws,
                           std::shared_ptr<const EmbeddingNetwork<float>> embedder,
                           PipelineConfig config)
    : kws_(std::move(kws)), embedder_(std::move(embedder)), config_(config) {
  if (!kws_ || !embedder_) {
    throw Error(ErrorKind::kInvalidArgument, "pipeline: networks must be set");
  }
  Validate(config_.detector);
  if (config_.segment_margin < 0) {
    throw Error(ErrorKind::kInvalidArgument, "pipeline: negative segment margin");
  }
}

KwsStageResult VoiceTrigger::RunKws(const AudioSignal& audio) const {
  Validate(audio);
  ++kws_runs_;
  KwsStageResult out;
  out.confidence = -1.0;
  for (int c = 0; c < audio.channels(); ++c) {
    FeatureMatrix features = ExtractFeatures(audio, c);
    if (features.rows() < kws_->config().window) {
      throw Error(ErrorKind::kTooShort,
                  "pipeline: utterance shorter than one " +
                      std::to_string(kws_->config().window) + "-frame window");
    }
    const PosteriorSequence post = kws_->Posteriors(features);
    const DetectionResult det = DetectStream(post, config_.detector);
    if (det.best.value > out.confidence) {
      out.confidence = det.best.value;
      out.triggered = !det.events.empty();
      out.channel = c;
      out.best = det.best;
      out.features = std::move(features);
    }
  }
  const auto [begin, end] =
      AlignmentSegment(out.best.alignment, kws_->config().window,
                       config_.segment_margin, out.features.rows());
  out.segment_begin = begin;
  out.segment_end = end;
  return out;
}

Embedding VoiceTrigger::EmbedSegment(const FeatureMatrix& features, Index begin,
                                     Index end) const {
  if (begin < 0 || end > features.rows() || end <= begin) {
    throw Error(ErrorKind::kInvalidArgument, "pipeline: bad segment range");
  }
  // Short segments grow symmetrically to the embedder's minimum length.
  const Index need = kMinEmbeddingFrames - (end - begin);
  if (need > 0) {
    begin = std::max<Index>(0, begin - (need + 1) / 2);
    end = std::min(features.rows(), begin + kMinEmbeddingFrames);
    begin = std::max<Index>(0, end - kMinEmbeddingFrames);
  }
  return embedder_->Embed(features.middleRows(begin, end - begin));
}

Embedding VoiceTrigger::EnrollmentEmbedding(const AudioSignal& audio) const {
  ++enrollments_;
  if (timing_depth_ > 0) ++enrollments_while_timing_;
  Validate(audio);
  const FeatureMatrix features = ExtractFeatures(audio, 0);
  const PosteriorSequence post = kws_->Posteriors(features);
  DetectorConfig cfg = config_.detector;
  cfg.threshold = 1.0;  // alignment only
  const DetectionResult det = DetectStream(post, cfg);
  const auto [begin, end] = AlignmentSegment(
      det.best.alignment, kws_->config().window, config_.segment_margin,
      features.rows());
  return EmbedSegment(features, begin, end);
}

TriggerDecision VoiceTrigger::Process(const AudioSignal& audio,
                                      const SpeakerProfile& profile) const {
  const auto start = Clock::now();
  const KwsStageResult kws = RunKws(audio);
  TriggerDecision d = ApplyGate(
      kws,
      [&](const KwsStageResult& k) {
        ++sv_runs_;
        return Score(profile, EmbedSegment(k.features, k.segment_begin, k.segment_end));
      },
      config_.sv_threshold);
  d.processing_seconds = SecondsSince(start);
  return d;
}

StageCounters VoiceTrigger::counters() const {
  return {kws_runs_.load(), sv_runs_.load(), enrollments_.load(),
          enrollments_while_timing_.load()};
}

std::string ResolvePath(const std::string& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

const SpeakerProfile& EnrollmentCache::Get(const Trial& trial) {
  const std::string key =
      trial.enrollment[0] + '\n' + trial.enrollment[1] + '\n' + trial.enrollment[2];
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
  }
  std::vector<Embedding> embeddings;
  for (const auto& path : trial.enrollment) {
    embeddings.push_back(trigger_.EnrollmentEmbedding(ReadWav(ResolvePath(base_dir_, path))));
  }
  auto profile = std::make_unique<SpeakerProfile>(
      Enroll(std::filesystem::path(trial.enrollment[0]).parent_path().filename().string(),
             embeddings));
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = cache_.emplace(key, std::move(profile));
  return *it->second;
}

nlohmann::json RtfReport::ToJson() const {
  return {{"t_process", process_seconds},
          {"t_total_test", total_test_seconds},
          {"factor", factor},
          {"utterances", utterances},
          {"single_threaded", single_threaded},
          {"hardware", hardware}};
}

RtfReport MakeRtfReport(double process_seconds, double total_test_seconds,
                        size_t utterances, bool single_threaded) {
  if (utterances == 0) {
    throw Error(ErrorKind::kEmptyInput, "rtf: no test utterances");
  }
  if (!(total_test_seconds > 0.0) || process_seconds < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "rtf: test audio has zero duration");
  }
  RtfReport r;
  r.process_seconds = process_seconds;
  r.total_test_seconds = total_test_seconds;
  r.factor = process_seconds / total_test_seconds;
  r.utterances = utterances;
  r.single_threaded = single_threaded;
  r.hardware = HardwareDescription();
  return r;
}

RtfReport MeasureRtf(const std::vector<Trial>& trials, const std::string& base_dir,
                     const VoiceTrigger& trigger) {
  if (trials.empty()) throw Error(ErrorKind::kEmptyInput, "rtf: empty trial set");
  EnrollmentCache enrollments(trigger, base_dir);
  double process = 0.0, total = 0.0;
  for (const auto& trial : trials) {
    const SpeakerProfile& profile = enrollments.Get(trial);
    const AudioSignal audio = ReadWav(ResolvePath(base_dir, trial.test));
    VoiceTrigger::TimingScope timed(trigger);
    const TriggerDecision d = trigger.Process(audio, profile);
    process += d.processing_seconds;
    total += audio.duration_seconds();
  }
  return MakeRtfReport(process, total, trials.size(), true);
}

std::string HardwareDescription() {
  std::string cpu = "unknown CPU";
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        cpu = line.substr(colon + 1);
        cpu.erase(0, cpu.find_first_not_of(' '));
      }
      break;
    }
  }
#if defined(__clang__)
  const std::string compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  const std::string compiler = "gcc " __VERSION__;
#else
  const std::string compiler = "unknown compiler";
#endif
  return cpu + ", 1 core, " + compiler;
}

std::string FormatResultLine(size_t trial_index, const TriggerDecision& d) {
  char buf[160];
  char sv[32] = "NA";
  if (d.sv_score) std::snprintf(sv, sizeof sv, "%.6f", *d.sv_score);
  std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%s\t%s\t%.3f", trial_index,
                d.kws_confidence, sv, d.accepted ? "accept" : "reject",
                d.processing_seconds * 1000.0);
  return buf;
}

}  // namespace pvt
