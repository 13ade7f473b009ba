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

#include "pvt/audio.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace pvt {

const char* ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kEmptyInput: return "empty input";
    case ErrorKind::kTooShort: return "input too short";
    case ErrorKind::kShapeMismatch: return "shape mismatch";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kUnsupportedVersion: return "unsupported version";
    case ErrorKind::kTruncated: return "truncated file";
    case ErrorKind::kMissingTensor: return "missing tensor";
    case ErrorKind::kNotNormalized: return "not normalized";
    case ErrorKind::kZeroNorm: return "zero norm";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kParse: return "parse error";
  }
  return "unknown";
}

AudioSignal AudioSignal::Mono(const Vector<float>& x, int sample_rate) {
  AudioSignal s;
  s.samples = x;
  s.sample_rate = sample_rate;
  return s;
}

void Validate(const AudioSignal& signal) {
  if (signal.sample_rate != kSampleRate) {
    throw Error(ErrorKind::kInvalidArgument,
                "audio: sample_rate " + std::to_string(signal.sample_rate) +
                    " (expected 16000)");
  }
  if (signal.channels() < 1) {
    throw Error(ErrorKind::kInvalidArgument, "audio: no channels");
  }
  if (signal.num_samples() == 0) {
    throw Error(ErrorKind::kEmptyInput, "audio: no samples");
  }
  if (!signal.samples.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "audio: non-finite sample");
  }
}

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t GetU16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
uint32_t GetU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}
void PutU16(std::ostream& out, uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(b, 2);
}
void PutU32(std::ostream& out, uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF),
                     static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF),
                     static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

[[noreturn]] void Fail(const std::string& name, const std::string& msg,
                       ErrorKind kind = ErrorKind::kFormat) {
  throw Error(kind, "wav " + name + ": " + msg);
}

struct WavHeader {
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint32_t data_bytes = 0;
};

// Reads chunks up to and including the start of "data"; leaves the stream
// positioned at the first sample.
WavHeader ReadHeader(std::istream& in, const std::string& name) {
  unsigned char riff[12];
  if (!in.read(reinterpret_cast<char*>(riff), 12)) {
    Fail(name, "file shorter than RIFF header", ErrorKind::kTruncated);
  }
  if (std::memcmp(riff, "RIFF", 4) != 0) Fail(name, "missing RIFF tag");
  if (std::memcmp(riff + 8, "WAVE", 4) != 0) Fail(name, "missing WAVE tag");

  WavHeader h;
  bool have_fmt = false;
  while (true) {
    unsigned char chunk[8];
    if (!in.read(reinterpret_cast<char*>(chunk), 8)) {
      Fail(name, have_fmt ? "no data chunk" : "no fmt chunk",
           ErrorKind::kTruncated);
    }
    const uint32_t size = GetU32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) Fail(name, "fmt chunk size " + std::to_string(size));
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size)) {
        Fail(name, "truncated fmt chunk", ErrorKind::kTruncated);
      }
      if (size & 1) in.ignore(1);
      uint16_t format = GetU16(fmt.data());
      if (format == kFormatExtensible && size >= 40) {
        format = GetU16(fmt.data() + 24);  // SubFormat GUID leading bytes
      }
      if (format != kFormatPcm) {
        Fail(name, "audio_format " + std::to_string(format) +
                       " unsupported (expected 1 = PCM)");
      }
      h.channels = GetU16(fmt.data() + 2);
      h.sample_rate = GetU32(fmt.data() + 4);
      const uint16_t block_align = GetU16(fmt.data() + 12);
      const uint16_t bits = GetU16(fmt.data() + 14);
      if (bits != 16) {
        Fail(name, "bits_per_sample " + std::to_string(bits) +
                       " unsupported (expected 16)");
      }
      if (h.channels < 1 || h.channels > kMaxChannels) {
        Fail(name, "num_channels " + std::to_string(h.channels) +
                       " unsupported (expected 1-6)");
      }
      if (h.sample_rate != kSampleRate) {
        Fail(name, "sample_rate " + std::to_string(h.sample_rate) +
                       " unsupported (expected 16000)");
      }
      if (block_align != h.channels * 2) {
        Fail(name, "block_align " + std::to_string(block_align) +
                       " inconsistent with num_channels");
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) Fail(name, "data chunk before fmt chunk");
      h.data_bytes = size;
      return h;
    } else {
      in.ignore(static_cast<std::streamsize>(size) + (size & 1));
      if (!in) Fail(name, "truncated chunk", ErrorKind::kTruncated);
    }
  }
}

}  // namespace

AudioSignal ReadWav(std::istream& in, const std::string& name) {
  const WavHeader h = ReadHeader(in, name);
  const uint32_t frame_bytes = 2u * h.channels;
  // Streamed WAVs sometimes carry a placeholder size; read until EOF then.
  const bool open_ended = h.data_bytes == 0 || h.data_bytes == 0xFFFFFFFFu;
  std::vector<char> bytes;
  if (open_ended) {
    bytes.assign(std::istreambuf_iterator<char>(in), {});
    bytes.resize(bytes.size() - bytes.size() % frame_bytes);
  } else {
    if (h.data_bytes % frame_bytes != 0) {
      Fail(name, "data size " + std::to_string(h.data_bytes) +
                     " not a multiple of block_align");
    }
    bytes.resize(h.data_bytes);
    if (!in.read(bytes.data(), h.data_bytes)) {
      Fail(name, "data chunk truncated", ErrorKind::kTruncated);
    }
  }
  const Index n = static_cast<Index>(bytes.size() / frame_bytes);
  if (n == 0) Fail(name, "no samples", ErrorKind::kEmptyInput);

  AudioSignal signal;
  signal.sample_rate = static_cast<int>(h.sample_rate);
  signal.samples.resize(n, h.channels);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (Index i = 0; i < n; ++i) {
    for (int c = 0; c < h.channels; ++c, p += 2) {
      const auto v = static_cast<int16_t>(GetU16(p));
      signal.samples(i, c) = static_cast<float>(v) / 32768.0f;
    }
  }
  return signal;
}

AudioSignal ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "wav " + path + ": cannot open");
  return ReadWav(in, path);
}

void WriteWav(std::ostream& out, const AudioSignal& signal) {
  const auto channels = static_cast<uint16_t>(signal.channels());
  const auto data_bytes =
      static_cast<uint32_t>(signal.num_samples() * channels * 2);
  out.write("RIFF", 4);
  PutU32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  PutU32(out, 16);
  PutU16(out, kFormatPcm);
  PutU16(out, channels);
  PutU32(out, static_cast<uint32_t>(signal.sample_rate));
  PutU32(out, static_cast<uint32_t>(signal.sample_rate) * channels * 2);
  PutU16(out, static_cast<uint16_t>(channels * 2));
  PutU16(out, 16);
  out.write("data", 4);
  PutU32(out, data_bytes);
  std::vector<char> buf(data_bytes);
  char* p = buf.data();
  for (Index i = 0; i < signal.num_samples(); ++i) {
    for (int c = 0; c < channels; ++c) {
      const double x = std::round(static_cast<double>(signal.samples(i, c)) *
                                  32768.0);
      const auto v = static_cast<int16_t>(std::clamp(x, -32768.0, 32767.0));
      const auto u = static_cast<uint16_t>(v);
      *p++ = static_cast<char>(u & 0xFF);
      *p++ = static_cast<char>(u >> 8);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void WriteWav(const std::string& path, const AudioSignal& signal) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "wav " + path + ": cannot create");
  WriteWav(out, signal);
  if (!out) throw Error(ErrorKind::kIo, "wav " + path + ": write failed");
}

double WavDurationSeconds(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "wav " + path + ": cannot open");
  const WavHeader h = ReadHeader(in, path);
  return static_cast<double>(h.data_bytes / (2u * h.channels)) /
         h.sample_rate;
}

}  // namespace pvt
