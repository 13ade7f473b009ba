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

#include "pvt/frontend.h"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace pvt {

Index NumFrames(Index num_samples) {
  if (num_samples < kFrameLength) {
    throw Error(ErrorKind::kTooShort,
                "frontend: " + std::to_string(num_samples) +
                    " samples is shorter than one 400-sample frame");
  }
  return 1 + (num_samples - kFrameLength) / kFrameShift;
}

Index NumWindows(Index num_frames, Index length, Index hop) {
  if (length < 1 || hop < 1) {
    throw Error(ErrorKind::kInvalidArgument, "window length and hop must be >= 1");
  }
  if (num_frames < length) {
    throw Error(ErrorKind::kTooShort,
                std::to_string(num_frames) + " frames is shorter than the " +
                    std::to_string(length) + "-frame window");
  }
  return 1 + (num_frames - length) / hop;
}

Vector<double> HannWindow(int length) {
  Vector<double> w(length);
  for (int n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  }
  return w;
}

RowMatrix<double> FrameSignal(const AudioSignal& signal, int channel) {
  Validate(signal);
  if (channel < 0 || channel >= signal.channels()) {
    throw Error(ErrorKind::kInvalidArgument,
                "frontend: channel " + std::to_string(channel) +
                    " out of range for " + std::to_string(signal.channels()) +
                    "-channel audio");
  }
  const Index count = NumFrames(signal.num_samples());
  static const Vector<double> window = HannWindow();
  RowMatrix<double> frames(count, kFrameLength);
  const auto x = signal.channel(channel);
  for (Index t = 0; t < count; ++t) {
    frames.row(t) = x.segment(t * kFrameShift, kFrameLength)
                        .cast<double>()
                        .cwiseProduct(window)
                        .transpose();
  }
  return frames;
}

Vector<double> PowerSpectrum(const Eigen::Ref<const Vector<double>>& frame) {
  if (frame.size() > kFftSize) {
    throw Error(ErrorKind::kShapeMismatch, "frontend: frame longer than FFT");
  }
  thread_local Eigen::FFT<double> fft;
  Vector<double> padded = Vector<double>::Zero(kFftSize);
  padded.head(frame.size()) = frame;
  Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 1> spectrum;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  fft.fwd(spectrum, padded);
  return spectrum.head(kNumBins).cwiseAbs2();
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank MakeMelFilterbank(int num_filters, double fmin, double fmax,
                                int nfft, int sample_rate) {
  if (num_filters < 1 || nfft < 2 || !(fmin >= 0.0) || !(fmin < fmax) ||
      fmax > sample_rate / 2.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "mel filterbank: need 0 <= fmin < fmax <= sample_rate/2");
  }
  const int bins = nfft / 2 + 1;
  const double mel_lo = HzToMel(fmin);
  const double mel_hi = HzToMel(fmax);
  Vector<double> edges(num_filters + 2);
  for (int i = 0; i < num_filters + 2; ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (num_filters + 1));
  }
  const double bin_hz = static_cast<double>(sample_rate) / nfft;

  MelFilterbank fb;
  fb.fmin = fmin;
  fb.fmax = fmax;
  fb.weights = RowMatrix<double>::Zero(num_filters, bins);
  fb.center_bins.resize(num_filters);
  for (int m = 0; m < num_filters; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    fb.center_bins[m] = center / bin_hz;
    for (int k = 0; k < bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb.weights(m, k) = w;
    }
  }
  return fb;
}

FeatureMatrix ExtractFeatures(const AudioSignal& signal, int channel) {
  static const MelFilterbank fb = MakeMelFilterbank();
  const RowMatrix<double> frames = FrameSignal(signal, channel);
  RowMatrix<double> power(frames.rows(), kNumBins);
  for (Index t = 0; t < frames.rows(); ++t) {
    power.row(t) = PowerSpectrum(frames.row(t).transpose()).transpose();
  }
  const RowMatrix<double> energies = power * fb.weights.transpose();
  return energies.array().max(kLogFloor).log().cast<float>().matrix();
}

std::vector<FeatureMatrix> SegmentWindows(const FeatureMatrix& features,
                                          Index length, Index hop) {
  const Index count = NumWindows(features.rows(), length, hop);
  std::vector<FeatureMatrix> windows;
  windows.reserve(static_cast<size_t>(count));
  for (Index i = 0; i < count; ++i) {
    windows.emplace_back(features.middleRows(i * hop, length));
  }
  return windows;
}

namespace {

void PutU32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t GetU32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error(ErrorKind::kTruncated, "feature dump " + path + ": truncated");
  }
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void WriteFeatureDump(const std::string& path, const FeatureMatrix& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "feature dump " + path + ": cannot create");
  PutU32(out, static_cast<uint32_t>(features.rows()));
  PutU32(out, static_cast<uint32_t>(features.cols()));
  for (Index t = 0; t < features.rows(); ++t) {
    for (Index m = 0; m < features.cols(); ++m) {
      uint32_t bits;
      const float v = features(t, m);
      std::memcpy(&bits, &v, 4);
      PutU32(out, bits);
    }
  }
}

FeatureMatrix ReadFeatureDump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "feature dump " + path + ": cannot open");
  const uint32_t rows = GetU32(in, path);
  const uint32_t cols = GetU32(in, path);
  if (cols != kNumMel) {
    throw Error(ErrorKind::kFormat, "feature dump " + path + ": width " +
                                        std::to_string(cols) + " (expected 80)");
  }
  FeatureMatrix features(rows, cols);
  for (Index t = 0; t < features.rows(); ++t) {
    for (Index m = 0; m < features.cols(); ++m) {
      const uint32_t bits = GetU32(in, path);
      std::memcpy(&features(t, m), &bits, 4);
    }
  }
  return features;
}

}  // namespace pvt
