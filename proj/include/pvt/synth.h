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

#ifndef PVT_SYNTH_H_
#define PVT_SYNTH_H_

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "pvt/audio.h"

// Deterministic synthetic corpus: speakers are spectral envelopes, keyword
// content is a fixed sequence of three harmonic "subword" units.
namespace pvt::synth {

using Rng = std::mt19937_64;

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();
inline constexpr double kUnitSeconds = 0.2;
inline constexpr int kNumUnits = 3;
// Base frequency of each subword unit, in keyword order.
inline constexpr std::array<double, kNumUnits> kUnitBaseHz = {200.0, 310.0, 470.0};

struct SyntheticSpeaker {
  int id = 0;
  double f0_hz = 0.0;
  double tilt_db_per_octave = 0.0;
  std::array<double, 3> formant_hz{};
  std::array<double, 3> formant_gain_db{};
  std::array<double, 3> formant_bandwidth_hz{};

  std::string name() const;
  // Spectral envelope amplitude (linear) at `hz`.
  double Gain(double hz) const;
  nlohmann::json ToJson() const;
};

// Parameters drawn from mt19937_64 seeded with (corpus_seed, id).
SyntheticSpeaker MakeSpeaker(uint64_t corpus_seed, int id);

enum class Content { kKeyword, kConfusable, kFiller, kMixed };
const char* ToString(Content c);

struct UtteranceRequest {
  Content content = Content::kKeyword;
  double duration_s = 3.8;
  double snr_db = kNoNoise;
  // Speaker of the text-independent segment preceding the keyword
  // (kMixed only).
  const SyntheticSpeaker* prefix_speaker = nullptr;
  double gain = 1.0;  // stands in for talker distance
};

struct SynthUtterance {
  AudioSignal audio;
  int speaker_id = 0;
  Content content = Content::kKeyword;
  std::vector<int> unit_order;          // units at the utterance end
  std::vector<double> subword_end_ms;   // keyword content only
  double snr_db = kNoNoise;
  int prefix_speaker_id = -1;
};

// Throws kInvalidArgument for durations too short for the requested content.
SynthUtterance MakeUtterance(const SyntheticSpeaker& speaker,
                             const UtteranceRequest& request, Rng& rng);

// Scales `noise` so 10 log10(P_signal / P_noise) = snr_db, adds it and clips
// to [-1, 1). snr_db = +inf returns the signal unchanged.
AudioSignal MixNoise(const AudioSignal& signal, const Vector<float>& noise,
                     double snr_db);

// Table rows: keyword present / keyword by target / non-target prefix /
// target prefix -> label.
struct TrialRow {
  bool keyword;
  bool keyword_by_target;
  bool other_prefix;
  bool target_prefix;
  bool positive;
};
inline constexpr std::array<TrialRow, 8> kTrialRows = {{
    {true, true, false, false, true},
    {true, true, false, true, true},
    {true, true, true, false, true},
    {true, false, false, false, false},
    {true, false, false, true, false},
    {true, false, true, false, false},
    {false, false, false, true, false},
    {false, false, false, false, false},
}};

struct TrialsetConfig {
  uint64_t seed = 0;
  std::array<int, 8> row_counts = SplitCounts(200, 1800);
  int num_target_speakers = 10;
  int num_other_speakers = 20;
  int speaker_id_offset = 0;
  double mean_duration_s = 3.8;
  double duration_spread_s = 1.0;  // uniform in mean +/- spread
  double snr_min_db = 5.0;
  double snr_max_db = 20.0;
  double confusable_fraction = 0.5;  // of keyword-free utterances
  int enroll_per_speaker = 3;
  int jobs = 1;

  // Positives spread over rows 1-3, negatives over rows 4-8, remainders to
  // the earliest rows.
  static std::array<int, 8> SplitCounts(int positives, int negatives);
  nlohmann::json ToJson() const;
};

struct TrialsetSummary {
  std::string trials_path;
  std::string manifest_path;
  std::array<int, 8> row_counts{};
  int positives = 0;
  int negatives = 0;
};

// Writes out_dir/<speaker>/<utt>.wav, out_dir/trials.txt and
// out_dir/manifest.json.
TrialsetSummary BuildTrialset(const TrialsetConfig& config, const std::string& out_dir);

}  // namespace pvt::synth

#endif  // PVT_SYNTH_H_
