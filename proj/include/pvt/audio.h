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

#ifndef PVT_AUDIO_H_
#define PVT_AUDIO_H_

#include <iosfwd>
#include <string>

#include "pvt/common.h"

namespace pvt {

inline constexpr int kSampleRate = 16000;
inline constexpr int kMaxChannels = 6;

// Samples are stored one column per channel, values in [-1, 1).
struct AudioSignal {
  Matrix<float> samples;
  int sample_rate = kSampleRate;

  Index num_samples() const { return samples.rows(); }
  int channels() const { return static_cast<int>(samples.cols()); }
  double duration_seconds() const {
    return static_cast<double>(num_samples()) / sample_rate;
  }
  auto channel(int c) const { return samples.col(c); }

  static AudioSignal Mono(const Vector<float>& x, int sample_rate = kSampleRate);
};

// Throws kInvalidArgument on a bad rate, empty signal or non-finite sample.
void Validate(const AudioSignal& signal);

// RIFF/WAVE, PCM signed 16-bit little-endian, 16 kHz, 1-6 channels.
AudioSignal ReadWav(const std::string& path);
AudioSignal ReadWav(std::istream& in, const std::string& name = "<stream>");
void WriteWav(const std::string& path, const AudioSignal& signal);
void WriteWav(std::ostream& out, const AudioSignal& signal);

// Duration from the header only, without decoding the samples.
double WavDurationSeconds(const std::string& path);

}  // namespace pvt

#endif  // PVT_AUDIO_H_
