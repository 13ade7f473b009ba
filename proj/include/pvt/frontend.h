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

#ifndef PVT_FRONTEND_H_
#define PVT_FRONTEND_H_

#include <string>
#include <vector>

#include "pvt/audio.h"
#include "pvt/common.h"

namespace pvt {

inline constexpr int kFrameLength = 400;  // 25 ms at 16 kHz
inline constexpr int kFrameShift = 160;   // 10 ms
inline constexpr int kFftSize = 512;
inline constexpr int kNumBins = kFftSize / 2 + 1;
inline constexpr int kNumMel = 80;
inline constexpr double kLogFloor = 1e-10;

// Rows are frames, columns are mel channels (natural-log energies).
template <typename Scalar = float>
using FeatureMatrixT = RowMatrix<Scalar>;
using FeatureMatrix = FeatureMatrixT<float>;

// 1 + floor((n - 400) / 160); throws kTooShort for n < 400.
Index NumFrames(Index num_samples);

// 1 + floor((frames - length) / hop); throws kTooShort for frames < length.
Index NumWindows(Index num_frames, Index length = 40, Index hop = 1);

// Periodic Hann window, w[n] = 0.5 - 0.5 cos(2 pi n / N).
Vector<double> HannWindow(int length = kFrameLength);

// One windowed frame per row.
RowMatrix<double> FrameSignal(const AudioSignal& signal, int channel);

// |DFT_512(zero-padded frame)|^2 for bins 0..256.
Vector<double> PowerSpectrum(const Eigen::Ref<const Vector<double>>& frame);

double HzToMel(double hz);
double MelToHz(double mel);

struct MelFilterbank {
  RowMatrix<double> weights;  // num_filters x num_bins
  Vector<double> center_bins;  // fractional FFT bin of each peak
  double fmin = 0.0;
  double fmax = 0.0;

  Index num_filters() const { return weights.rows(); }
};

MelFilterbank MakeMelFilterbank(int num_filters = kNumMel, double fmin = 20.0,
                                double fmax = 7600.0, int nfft = kFftSize,
                                int sample_rate = kSampleRate);

// entry [t][m] = ln(max(filter_m . power_spectrum(frame_t), 1e-10)).
FeatureMatrix ExtractFeatures(const AudioSignal& signal, int channel = 0);

// Copies of consecutive `length`-frame windows, advancing by `hop`.
std::vector<FeatureMatrix> SegmentWindows(const FeatureMatrix& features,
                                          Index length = 40, Index hop = 1);

// Feature dump: u32 LE T, u32 LE 80, then T*80 f32 LE row-major.
void WriteFeatureDump(const std::string& path, const FeatureMatrix& features);
FeatureMatrix ReadFeatureDump(const std::string& path);

}  // namespace pvt

#endif  // PVT_FRONTEND_H_
