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

#include "pvt/weights.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace pvt {

size_t Tensor::num_elements() const {
  return std::accumulate(shape.begin(), shape.end(), size_t{1},
                         [](size_t a, uint32_t b) { return a * b; });
}

std::string ShapeString(const std::vector<uint32_t>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

WeightBundle::WeightBundle(nlohmann::json config) {
  set_config(std::move(config));
}

void WeightBundle::set_config(nlohmann::json config) {
  config_ = std::move(config);
  config_text_ = config_.dump();
}

void WeightBundle::set_config_text(std::string text) {
  nlohmann::json config = nlohmann::json::parse(text, nullptr, false);
  if (config.is_discarded() || !config.is_object()) {
    throw Error(ErrorKind::kFormat, "weights: config is not a JSON object");
  }
  config_ = std::move(config);
  config_text_ = std::move(text);
}

bool WeightBundle::contains(const std::string& name) const {
  for (const auto& [n, t] : tensors_) {
    if (n == name) return true;
  }
  return false;
}

const Tensor& WeightBundle::at(const std::string& name) const {
  for (const auto& [n, t] : tensors_) {
    if (n == name) return t;
  }
  throw Error(ErrorKind::kMissingTensor, "weights: missing tensor '" + name + "'");
}

Tensor& WeightBundle::mutable_at(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).at(name));
}

void WeightBundle::add(std::string name, Tensor tensor) {
  if (name.empty() || name.size() > 0xFFFF) {
    throw Error(ErrorKind::kInvalidArgument, "weights: bad tensor name length");
  }
  if (contains(name)) {
    throw Error(ErrorKind::kInvalidArgument,
                "weights: duplicate tensor '" + name + "'");
  }
  if (tensor.shape.size() > 255 || tensor.num_elements() != tensor.data.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "weights: tensor '" + name + "' data does not match shape " +
                    ShapeString(tensor.shape));
  }
  tensors_.emplace_back(std::move(name), std::move(tensor));
}

namespace {

class Reader {
 public:
  Reader(std::istream& in, const std::string& name) : in_(in), name_(name) {}

  void Bytes(void* dst, size_t n, const char* what) {
    if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n))) {
      throw Error(ErrorKind::kTruncated,
                  "weights " + name_ + ": truncated while reading " + what);
    }
  }
  uint32_t U32(const char* what) {
    unsigned char b[4];
    Bytes(b, 4, what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
  }
  uint16_t U16(const char* what) {
    unsigned char b[2];
    Bytes(b, 2, what);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
  uint8_t U8(const char* what) {
    uint8_t b;
    Bytes(&b, 1, what);
    return b;
  }
  const std::string& name() const { return name_; }

 private:
  std::istream& in_;
  const std::string& name_;
};

void PutU32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void PutU16(std::ostream& out, uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

// Caps allocations driven by header fields of a damaged file.
constexpr uint64_t kMaxElements = uint64_t{1} << 28;

}  // namespace

WeightBundle ReadBundle(std::istream& in, const std::string& name) {
  Reader r(in, name);
  char magic[4];
  r.Bytes(magic, 4, "magic");
  if (std::memcmp(magic, "PVTW", 4) != 0) {
    throw Error(ErrorKind::kBadMagic,
                "weights " + name + ": bad magic (expected PVTW)");
  }
  WeightBundle bundle;
  const uint32_t version = r.U32("version");
  if (version != WeightBundle::kFormatVersion) {
    throw Error(ErrorKind::kUnsupportedVersion,
                "weights " + name + ": unsupported format version " +
                    std::to_string(version));
  }
  const uint32_t config_len = r.U32("config length");
  if (config_len > (1u << 24)) {
    throw Error(ErrorKind::kFormat, "weights " + name + ": config too large");
  }
  std::string config_text(config_len, '\0');
  r.Bytes(config_text.data(), config_len, "config");
  bundle.set_config_text(std::move(config_text));

  const uint32_t count = r.U32("tensor count");
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = r.U16("tensor name length");
    std::string tname(name_len, '\0');
    r.Bytes(tname.data(), name_len, "tensor name");
    const uint8_t rank = r.U8("tensor rank");
    Tensor t;
    uint64_t elements = 1;
    for (uint8_t d = 0; d < rank; ++d) {
      t.shape.push_back(r.U32("tensor dims"));
      elements *= t.shape.back();
      if (elements > kMaxElements) {
        throw Error(ErrorKind::kFormat, "weights " + name + ": tensor '" +
                                            tname + "' implausibly large");
      }
    }
    t.data.resize(elements);
    const std::string what = "tensor '" + tname + "' values";
    r.Bytes(t.data.data(), elements * 4, what.c_str());
    static_assert(sizeof(float) == 4);
    if constexpr (std::endian::native == std::endian::big) {
      for (float& v : t.data) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        bits = __builtin_bswap32(bits);
        std::memcpy(&v, &bits, 4);
      }
    }
    for (float v : t.data) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kFormat, "weights " + name + ": tensor '" +
                                            tname + "' has non-finite values");
      }
    }
    if (bundle.contains(tname)) {
      throw Error(ErrorKind::kFormat,
                  "weights " + name + ": duplicate tensor '" + tname + "'");
    }
    bundle.add(std::move(tname), std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::kFormat,
                "weights " + name + ": trailing bytes after last tensor");
  }
  return bundle;
}

void WriteBundle(std::ostream& out, const WeightBundle& bundle) {
  out.write("PVTW", 4);
  PutU32(out, bundle.format_version());
  PutU32(out, static_cast<uint32_t>(bundle.config_text().size()));
  out.write(bundle.config_text().data(),
            static_cast<std::streamsize>(bundle.config_text().size()));
  PutU32(out, static_cast<uint32_t>(bundle.tensors().size()));
  for (const auto& [name, t] : bundle.tensors()) {
    PutU16(out, static_cast<uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const auto rank = static_cast<uint8_t>(t.shape.size());
    out.write(reinterpret_cast<const char*>(&rank), 1);
    for (uint32_t d : t.shape) PutU32(out, d);
    for (float v : t.data) {
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      PutU32(out, bits);
    }
  }
}

void CheckTensors(const WeightBundle& bundle,
                  const std::vector<TensorSpec>& required) {
  for (const auto& spec : required) {
    if (!bundle.contains(spec.name)) {
      throw Error(ErrorKind::kMissingTensor,
                  "weights: missing tensor '" + spec.name + "' (expected shape " +
                      ShapeString(spec.shape) + ")");
    }
    const Tensor& t = bundle.at(spec.name);
    if (t.shape != spec.shape) {
      throw Error(ErrorKind::kShapeMismatch,
                  "weights: tensor '" + spec.name + "' has shape " +
                      ShapeString(t.shape) + ", expected " +
                      ShapeString(spec.shape));
    }
  }
}

void ValidateBundle(const WeightBundle& bundle) {
  CheckTensors(bundle, RequiredTensors(bundle.config()));
}

WeightBundle LoadWeights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "weights " + path + ": cannot open");
  WeightBundle bundle = ReadBundle(in, path);
  ValidateBundle(bundle);
  return bundle;
}

void SaveWeights(const std::string& path, const WeightBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "weights " + path + ": cannot create");
  WriteBundle(out, bundle);
  if (!out) throw Error(ErrorKind::kIo, "weights " + path + ": write failed");
}

}  // namespace pvt
