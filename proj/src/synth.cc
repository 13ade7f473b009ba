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

#include "pvt/synth.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include "pvt/trials.h"

namespace pvt::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxHarmonicHz = 6000.0;
constexpr int kMaxHarmonics = 24;
constexpr double kSpeechRms = 0.08;
constexpr double kRampSeconds = 0.015;

double Uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Index Samples(double seconds) {
  return static_cast<Index>(std::llround(seconds * kSampleRate));
}

// Raised-cosine fade in and out.
void ApplyRamps(Eigen::Ref<Vector<double>> x) {
  const Index ramp = std::min<Index>(Samples(kRampSeconds), x.size() / 2);
  for (Index i = 0; i < ramp; ++i) {
    const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * i / ramp);
    x[i] *= w;
    x[x.size() - 1 - i] *= w;
  }
}

void NormalizeRms(Eigen::Ref<Vector<double>> x, double rms) {
  const double current = std::sqrt(x.squaredNorm() / std::max<Index>(1, x.size()));
  if (current > 0.0) x *= rms / current;
}

// One 200 ms subword unit: harmonic complex on the unit's base frequency,
// shaped by the speaker envelope and amplitude-modulated at the speaker f0.
Vector<double> MakeUnit(const SyntheticSpeaker& spk, int unit, Rng& rng) {
  const Index n = Samples(kUnitSeconds);
  const double base = kUnitBaseHz[static_cast<size_t>(unit)] * Uniform(rng, 0.98, 1.02);
  Vector<double> x = Vector<double>::Zero(n);
  for (int h = 1; h <= kMaxHarmonics && h * base < kMaxHarmonicHz; ++h) {
    const double amp = spk.Gain(h * base);
    const double phase = Uniform(rng, 0.0, kTwoPi);
    const double w = kTwoPi * h * base / kSampleRate;
    for (Index i = 0; i < n; ++i) x[i] += amp * std::sin(w * i + phase);
  }
  const double am_phase = Uniform(rng, 0.0, kTwoPi);
  const double am = kTwoPi * spk.f0_hz / kSampleRate;
  for (Index i = 0; i < n; ++i) x[i] *= 1.0 + 0.3 * std::sin(am * i + am_phase);
  ApplyRamps(x);
  NormalizeRms(x, kSpeechRms);
  return x;
}

// Text-independent babble: harmonics of a wandering speaker pitch under a
// slowly varying noise envelope.
Vector<double> MakeFiller(const SyntheticSpeaker& spk, Index n, Rng& rng) {
  Vector<double> x = Vector<double>::Zero(n);
  if (n == 0) return x;
  int harmonics = 0;
  std::array<double, kMaxHarmonics> amp{};
  while (harmonics < kMaxHarmonics && (harmonics + 1) * spk.f0_hz < kMaxHarmonicHz) {
    amp[static_cast<size_t>(harmonics)] = spk.Gain((harmonics + 1) * spk.f0_hz);
    ++harmonics;
  }
  const double rate = Uniform(rng, 2.0, 5.0);
  const double vib_phase = Uniform(rng, 0.0, kTwoPi);
  const double depth = Uniform(rng, 0.05, 0.12);
  std::normal_distribution<double> gauss;
  // One-pole low-pass of |noise| gives a syllable-rate envelope.
  const double pole = std::exp(-kTwoPi * 6.0 / kSampleRate);
  double env = 0.0, theta = Uniform(rng, 0.0, kTwoPi);
  Vector<double> envelope(n);
  for (Index i = 0; i < n; ++i) {
    env = pole * env + (1.0 - pole) * std::abs(gauss(rng));
    envelope[i] = env;
  }
  envelope /= std::max(envelope.maxCoeff(), 1e-12);
  for (Index i = 0; i < n; ++i) {
    const double f = spk.f0_hz * (1.0 + depth * std::sin(kTwoPi * rate * i / kSampleRate + vib_phase));
    theta += kTwoPi * f / kSampleRate;
    if (theta > kTwoPi) theta -= kTwoPi;
    // sin(h theta) by the Chebyshev recurrence.
    const double s1 = std::sin(theta), c2 = 2.0 * std::cos(theta);
    double prev = 0.0, cur = s1, sum = 0.0;
    for (int h = 0; h < harmonics; ++h) {
      sum += amp[static_cast<size_t>(h)] * cur;
      const double next = c2 * cur - prev;
      prev = cur;
      cur = next;
    }
    x[i] = sum * envelope[i] * envelope[i];
  }
  ApplyRamps(x);
  NormalizeRms(x, kSpeechRms);
  return x;
}

}  // namespace

std::string SyntheticSpeaker::name() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "spk%04d", id);
  return buf;
}

double SyntheticSpeaker::Gain(double hz) const {
  double db = tilt_db_per_octave * std::log2(std::max(hz, 1.0) / 200.0);
  for (size_t j = 0; j < 3; ++j) {
    const double z = (hz - formant_hz[j]) / formant_bandwidth_hz[j];
    db += formant_gain_db[j] * std::exp(-0.5 * z * z);
  }
  return std::pow(10.0, db / 20.0);
}

nlohmann::json SyntheticSpeaker::ToJson() const {
  return {{"id", id},
          {"name", name()},
          {"f0_hz", f0_hz},
          {"tilt_db_per_octave", tilt_db_per_octave},
          {"formant_hz", formant_hz},
          {"formant_gain_db", formant_gain_db},
          {"formant_bandwidth_hz", formant_bandwidth_hz}};
}

SyntheticSpeaker MakeSpeaker(uint64_t corpus_seed, int id) {
  std::seed_seq seq{static_cast<uint32_t>(corpus_seed),
                    static_cast<uint32_t>(corpus_seed >> 32), 0x5350u,
                    static_cast<uint32_t>(id)};
  Rng rng(seq);
  SyntheticSpeaker s;
  s.id = id;
  s.f0_hz = Uniform(rng, 90.0, 280.0);
  s.tilt_db_per_octave = Uniform(rng, -8.0, -3.0);
  s.formant_hz = {Uniform(rng, 300.0, 800.0), Uniform(rng, 900.0, 2200.0),
                  Uniform(rng, 2300.0, 3400.0)};
  s.formant_gain_db = {Uniform(rng, 6.0, 20.0), Uniform(rng, 6.0, 20.0),
                       Uniform(rng, 6.0, 20.0)};
  s.formant_bandwidth_hz = {Uniform(rng, 80.0, 200.0), Uniform(rng, 100.0, 250.0),
                            Uniform(rng, 150.0, 350.0)};
  return s;
}

const char* ToString(Content c) {
  switch (c) {
    case Content::kKeyword: return "keyword";
    case Content::kConfusable: return "confusable";
    case Content::kFiller: return "filler";
    case Content::kMixed: return "mixed";
  }
  return "unknown";
}

AudioSignal MixNoise(const AudioSignal& signal, const Vector<float>& noise,
                     double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return signal;
  if (std::isnan(snr_db)) throw Error(ErrorKind::kInvalidArgument, "mix_noise: NaN SNR");
  if (signal.channels() != 1) {
    throw Error(ErrorKind::kInvalidArgument, "mix_noise: mono signals only");
  }
  const Index n = signal.num_samples();
  if (noise.size() < n) {
    throw Error(ErrorKind::kInvalidArgument, "mix_noise: noise shorter than signal");
  }
  const Vector<double> s = signal.samples.col(0).cast<double>();
  const Vector<double> v = noise.head(n).cast<double>();
  const double ps = s.squaredNorm() / n;
  const double pn = v.squaredNorm() / n;
  if (!(ps > 0.0)) throw Error(ErrorKind::kInvalidArgument, "mix_noise: zero-power signal");
  if (!(pn > 0.0)) throw Error(ErrorKind::kInvalidArgument, "mix_noise: zero-power noise");
  const double scale = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  constexpr double kMax = 32767.0 / 32768.0;
  AudioSignal out = signal;
  out.samples.col(0) = (s + scale * v).cwiseMax(-1.0).cwiseMin(kMax).cast<float>();
  return out;
}

SynthUtterance MakeUtterance(const SyntheticSpeaker& speaker,
                             const UtteranceRequest& req, Rng& rng) {
  const bool has_units = req.content != Content::kFiller;
  const double units_s = kNumUnits * kUnitSeconds;
  const double min_s = req.content == Content::kMixed ? units_s + 0.6
                       : has_units                  ? 1.2
                                                    : 0.3;
  if (!(req.duration_s >= min_s) || !std::isfinite(req.duration_s)) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("synth: duration too short for ") + ToString(req.content));
  }
  if (req.content == Content::kMixed && req.prefix_speaker == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, "synth: mixed content needs a prefix speaker");
  }
  const Index total = Samples(req.duration_s);
  Vector<double> x = Vector<double>::Zero(total);

  SynthUtterance u;
  u.speaker_id = speaker.id;
  u.content = req.content;
  u.snr_db = req.snr_db;

  const Index unit_len = Samples(kUnitSeconds);
  Index units_start = total;
  if (has_units) {
    u.unit_order = {0, 1, 2};
    if (req.content == Content::kConfusable) {
      // Any non-identity order breaks the keyword sequence.
      static constexpr std::array<std::array<int, 3>, 5> kOrders = {
          {{0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
      const auto& order = kOrders[std::uniform_int_distribution<size_t>(0, 4)(rng)];
      u.unit_order.assign(order.begin(), order.end());
    }
    units_start = total - kNumUnits * unit_len;
    for (int k = 0; k < kNumUnits; ++k) {
      x.segment(units_start + k * unit_len, unit_len) =
          MakeUnit(speaker, u.unit_order[static_cast<size_t>(k)], rng);
    }
    if (req.content != Content::kConfusable) {
      for (int k = 1; k <= kNumUnits; ++k) {
        u.subword_end_ms.push_back(1000.0 * (units_start + k * unit_len) / kSampleRate);
      }
    }
  }

  if (req.content == Content::kMixed) {
    u.prefix_speaker_id = req.prefix_speaker->id;
    const Index gap = Samples(Uniform(rng, 0.1, 0.3));
    const Index start = Samples(Uniform(rng, 0.05, 0.3));
    const Index len = std::max<Index>(0, units_start - gap - start);
    x.segment(start, len) = MakeFiller(*req.prefix_speaker, len, rng);
  } else if (req.content == Content::kFiller) {
    const Index start = Samples(Uniform(rng, 0.05, 0.3));
    const Index stop = total - Samples(Uniform(rng, 0.05, 0.3));
    const Index len = std::max<Index>(0, stop - start);
    x.segment(start, len) = MakeFiller(speaker, len, rng);
  }

  x *= req.gain;
  u.audio = AudioSignal::Mono(x.cast<float>());
  if (!(std::isinf(req.snr_db) && req.snr_db > 0)) {
    std::normal_distribution<float> gauss;
    Vector<float> noise(total);
    for (Index i = 0; i < total; ++i) noise[i] = gauss(rng);
    u.audio = MixNoise(u.audio, noise, req.snr_db);
  }
  return u;
}

std::array<int, 8> TrialsetConfig::SplitCounts(int positives, int negatives) {
  if (positives < 0 || negatives < 0) {
    throw Error(ErrorKind::kInvalidArgument, "synth: negative trial counts");
  }
  std::array<int, 8> counts{};
  for (int r = 0; r < 3; ++r) counts[r] = positives / 3 + (r < positives % 3 ? 1 : 0);
  for (int r = 0; r < 5; ++r) counts[3 + r] = negatives / 5 + (r < negatives % 5 ? 1 : 0);
  return counts;
}

nlohmann::json TrialsetConfig::ToJson() const {
  return {{"seed", seed},
          {"row_counts", row_counts},
          {"num_target_speakers", num_target_speakers},
          {"num_other_speakers", num_other_speakers},
          {"speaker_id_offset", speaker_id_offset},
          {"mean_duration_s", mean_duration_s},
          {"duration_spread_s", duration_spread_s},
          {"snr_min_db", snr_min_db},
          {"snr_max_db", snr_max_db},
          {"confusable_fraction", confusable_fraction},
          {"enroll_per_speaker", enroll_per_speaker}};
}

namespace {

struct Job {
  std::string utt_id;
  int row = -1;  // -1 for enrollment
  int target = 0;
  int enroll_index = 0;
};

Rng JobRng(uint64_t seed, size_t index) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    0x5554u, static_cast<uint32_t>(index)};
  return Rng(seq);
}

nlohmann::json NumberOrNull(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

TrialsetSummary BuildTrialset(const TrialsetConfig& config, const std::string& out_dir) {
  if (config.num_target_speakers < 1 || config.num_other_speakers < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "synth: need >= 1 target speaker and >= 2 other speakers");
  }
  if (config.enroll_per_speaker < 1 || config.enroll_per_speaker > 3) {
    throw Error(ErrorKind::kInvalidArgument, "synth: enrollment count must be 1-3");
  }
  if (config.mean_duration_s - config.duration_spread_s < 1.2 ||
      config.duration_spread_s < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "synth: utterances must be >= 1.2 s");
  }
  if (!(config.snr_min_db <= config.snr_max_db)) {
    throw Error(ErrorKind::kInvalidArgument, "synth: snr_min_db > snr_max_db");
  }
  for (int c : config.row_counts) {
    if (c < 0) throw Error(ErrorKind::kInvalidArgument, "synth: negative row count");
  }
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw Error(ErrorKind::kIo, "synth: cannot create " + out_dir);
  }

  std::vector<SyntheticSpeaker> targets, others;
  for (int i = 0; i < config.num_target_speakers; ++i) {
    targets.push_back(MakeSpeaker(config.seed, config.speaker_id_offset + i));
  }
  for (int i = 0; i < config.num_other_speakers; ++i) {
    others.push_back(MakeSpeaker(
        config.seed, config.speaker_id_offset + config.num_target_speakers + i));
  }
  for (const auto& s : targets) fs::create_directories(fs::path(out_dir) / s.name());
  for (const auto& s : others) fs::create_directories(fs::path(out_dir) / s.name());

  std::vector<Job> jobs;
  for (int t = 0; t < config.num_target_speakers; ++t) {
    for (int k = 0; k < config.enroll_per_speaker; ++k) {
      jobs.push_back({"enroll_" + std::to_string(k + 1), -1, t, k});
    }
  }
  int test_index = 0;
  for (int row = 0; row < 8; ++row) {
    for (int i = 0; i < config.row_counts[static_cast<size_t>(row)]; ++i, ++test_index) {
      char id[16];
      std::snprintf(id, sizeof id, "utt%06d", test_index);
      jobs.push_back({id, row, test_index % config.num_target_speakers, 0});
    }
  }

  std::vector<nlohmann::json> records(jobs.size());
  std::vector<Trial> trials;
  std::vector<std::string> enroll_paths(targets.size() * 3);

  auto run_job = [&](size_t j) {
    const Job& job = jobs[j];
    Rng rng = JobRng(config.seed, j);
    const SyntheticSpeaker& target = targets[static_cast<size_t>(job.target)];
    UtteranceRequest req;
    const SyntheticSpeaker* speaker = &target;
    auto pick_other = [&](int avoid) -> const SyntheticSpeaker* {
      std::uniform_int_distribution<int> d(0, config.num_other_speakers - 1);
      int i = d(rng);
      while (i == avoid) i = d(rng);
      return &others[static_cast<size_t>(i)];
    };
    if (job.row < 0) {
      req.content = Content::kKeyword;
      req.duration_s = Uniform(rng, 1.2, 1.6);
    } else {
      const TrialRow& row = kTrialRows[static_cast<size_t>(job.row)];
      req.duration_s = config.mean_duration_s +
                       Uniform(rng, -config.duration_spread_s, config.duration_spread_s);
      req.snr_db = Uniform(rng, config.snr_min_db, config.snr_max_db);
      req.gain = Uniform(rng, 0.6, 1.4);
      if (row.keyword) {
        if (!row.keyword_by_target) speaker = pick_other(-1);
        if (row.target_prefix) {
          req.content = Content::kMixed;
          req.prefix_speaker = &target;
        } else if (row.other_prefix) {
          req.content = Content::kMixed;
          req.prefix_speaker = pick_other(speaker == &target ? -1 : speaker->id -
                                                                  others.front().id);
        } else {
          req.content = Content::kKeyword;
        }
      } else {
        if (!row.target_prefix) speaker = pick_other(-1);
        req.content = Uniform(rng, 0.0, 1.0) < config.confusable_fraction
                          ? Content::kConfusable
                          : Content::kFiller;
      }
    }
    const SynthUtterance u = MakeUtterance(*speaker, req, rng);
    const std::string rel = speaker->name() + "/" + job.utt_id + ".wav";
    WriteWav((fs::path(out_dir) / rel).string(), u.audio);

    nlohmann::json rec = {
        {"utt_id", job.utt_id},
        {"path", rel},
        {"speaker", speaker->name()},
        {"role", job.row < 0 ? "enroll" : "test"},
        {"content", ToString(u.content)},
        {"unit_order", u.unit_order},
        {"subword_end_ms", u.subword_end_ms},
        {"snr_db", NumberOrNull(u.snr_db)},
        {"gain", req.gain},
        {"duration_s", u.audio.duration_seconds()},
        {"target_speaker", target.name()},
        {"prefix_speaker", u.prefix_speaker_id >= 0
                               ? nlohmann::json(MakeSpeaker(config.seed, u.prefix_speaker_id).name())
                               : nlohmann::json(nullptr)},
    };
    if (job.row >= 0) {
      rec["row"] = job.row + 1;
      rec["label"] = kTrialRows[static_cast<size_t>(job.row)].positive ? "positive" : "negative";
    }
    records[j] = std::move(rec);
  };

  const int workers = std::max(1, config.jobs);
  if (workers == 1) {
    for (size_t j = 0; j < jobs.size(); ++j) run_job(j);
  } else {
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t j = next++; j < jobs.size(); j = next++) {
          try {
            run_job(j);
          } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            if (!failure) failure = std::current_exception();
            next = jobs.size();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  TrialsetSummary summary;
  summary.row_counts = config.row_counts;
  for (size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    if (job.row < 0) continue;
    const SyntheticSpeaker& target = targets[static_cast<size_t>(job.target)];
    Trial t;
    for (int k = 0; k < 3; ++k) {
      // Fewer than three enrollment files repeat the last one.
      const int e = std::min(k, config.enroll_per_speaker - 1);
      t.enrollment[static_cast<size_t>(k)] =
          target.name() + "/enroll_" + std::to_string(e + 1) + ".wav";
    }
    t.test = records[j]["path"].get<std::string>();
    t.label = kTrialRows[static_cast<size_t>(job.row)].positive ? Label::kPositive
                                                                 : Label::kNegative;
    (t.label == Label::kPositive ? summary.positives : summary.negatives)++;
    trials.push_back(std::move(t));
  }

  summary.trials_path = (fs::path(out_dir) / "trials.txt").string();
  summary.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  {
    std::ofstream out(summary.trials_path);
    if (!out) throw Error(ErrorKind::kIo, "synth: cannot write " + summary.trials_path);
    WriteTrials(out, trials);
  }
  nlohmann::json speakers = nlohmann::json::array();
  for (const auto& s : targets) {
    auto j = s.ToJson();
    j["role"] = "target";
    speakers.push_back(j);
  }
  for (const auto& s : others) {
    auto j = s.ToJson();
    j["role"] = "other";
    speakers.push_back(j);
  }
  nlohmann::json manifest = {
      {"generator", "pvtrigger synth"},
      {"rng", "mt19937_64"},
      {"config", config.ToJson()},
      {"speakers", speakers},
      {"utterances", records},
  };
  std::ofstream out(summary.manifest_path);
  if (!out) throw Error(ErrorKind::kIo, "synth: cannot write " + summary.manifest_path);
  out << manifest.dump(1) << "\n";
  return summary;
}

}  // namespace pvt::synth
