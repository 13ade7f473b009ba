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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance <path-to-pvt-binary> <work-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "oracles.h"
#include "pvt/decoder.h"
#include "pvt/evaluation.h"
#include "pvt/frontend.h"
#include "pvt/metrics.h"
#include "pvt/model_config.h"
#include "pvt/nnet.h"
#include "pvt/pipeline.h"
#include "pvt/weights.h"

namespace fs = std::filesystem;

namespace pvt {
namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

Outcome Fail(const std::string& why) { return {false, why}; }

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Matrix<double> Uniform(std::mt19937_64& rng, Index r, Index c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix<double> m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Outcome ConfidenceOracle() {
  std::mt19937_64 rng(2024);
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = std::uniform_int_distribution<int>(1, 4)(rng);
    const Index t = std::uniform_int_distribution<Index>(m, 8)(rng);
    Matrix<double> p = Uniform(rng, t, m + 1, 0.0, 1.0);
    for (Index r = 0; r < t; ++r) p.row(r) /= p.row(r).sum();
    std::vector<int> sw(static_cast<size_t>(m));
    for (int& w : sw) w = std::uniform_int_distribution<int>(0, m)(rng);
    worst = std::max(worst, std::abs(Confidence(p, sw).value - oracle::BruteConfidence(p, sw)));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string detail = "max |diff| " + Fmt("%.3g", worst) + ", " + Fmt("%.3f", secs) + " s";
  if (!(worst < 1e-9)) return Fail(detail);
  if (!(secs < 5.0)) return Fail(detail);
  return {true, detail};
}

Outcome LstmOracle() {
  std::mt19937_64 rng(2025);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = std::uniform_int_distribution<Index>(1, 4)(rng);
    const Index h = std::uniform_int_distribution<Index>(1, 4)(rng);
    const Index t = std::uniform_int_distribution<Index>(1, 5)(rng);
    const nnet::LstmLayerParams<double> p{Uniform(rng, 4 * h, d, -1, 1),
                                          Uniform(rng, 4 * h, h, -1, 1),
                                          Uniform(rng, 4 * h, 1, -1, 1)};
    const Matrix<double> x = Uniform(rng, t, d, -2, 2);
    worst = std::max(worst,
                     (nnet::LstmForward<double>(p, x) - oracle::ScalarLstm(p, x)).cwiseAbs().maxCoeff());
  }
  const std::string detail = "max |diff| " + Fmt("%.3g", worst) + " over 100 instances";
  return worst < 1e-9 ? Outcome{true, detail} : Fail(detail);
}

Outcome AspOracle() {
  std::mt19937_64 rng(2026);
  double worst = 0.0, worst_uniform = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index t = std::uniform_int_distribution<Index>(1, 8)(rng);
    const Index d = std::uniform_int_distribution<Index>(1, 6)(rng);
    const Index a = std::uniform_int_distribution<Index>(1, 6)(rng);
    nnet::AttentivePoolingParams<double> p{Uniform(rng, a, d, -1, 1), Uniform(rng, a, 1, -1, 1),
                                           Uniform(rng, a, 1, -1, 1)};
    const Matrix<double> h = Uniform(rng, t, d, -3, 3);
    worst = std::max(worst,
                     (nnet::AspPool<double>(h, p) - oracle::AspMoments(h, p)).cwiseAbs().maxCoeff());
    // A single frame has zero spread; its sigma is sqrt(epsilon) by design.
    if (t < 2) continue;
    p.context.setZero();
    const Vector<double> out = nnet::AspPool<double>(h, p);
    const Eigen::RowVectorXd mean = h.colwise().mean();
    const Eigen::RowVectorXd sd = (h.rowwise() - mean).array().square().colwise().mean().sqrt();
    worst_uniform = std::max({worst_uniform, (out.head(d) - mean.transpose()).cwiseAbs().maxCoeff(),
                              (out.tail(d) - sd.transpose()).cwiseAbs().maxCoeff()});
  }
  const std::string detail = "weighted max |diff| " + Fmt("%.3g", worst) +
                             ", zero-context max |diff| " + Fmt("%.3g", worst_uniform);
  return worst < 1e-9 && worst_uniform < 1e-6 ? Outcome{true, detail} : Fail(detail);
}

Outcome MetricOracles() {
  std::mt19937_64 rng(2027);
  int mismatches = 0, transform_mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto draw = [&](double shift) {
      std::vector<double> s(std::uniform_int_distribution<size_t>(1, 50)(rng));
      std::normal_distribution<double> g(shift, 1.0);
      for (double& v : s) v = std::round(g(rng) * 8.0) / 8.0;  // ties on purpose
      return s;
    };
    const auto pos = draw(1.0), neg = draw(0.0);
    const EerResult e = ComputeEer(pos, neg), eo = oracle::Eer(pos, neg);
    const MinDcfResult m = ComputeMinDcf(pos, neg), mo = oracle::MinDcf(pos, neg);
    if (e.eer != eo.eer || e.threshold != eo.threshold || m.min_dcf != mo.min_dcf ||
        m.threshold != mo.threshold) {
      ++mismatches;
    }
    std::vector<double> tp = pos, tn = neg;
    for (double& v : tp) v = std::exp(2.0 * v) - 5.0;
    for (double& v : tn) v = std::exp(2.0 * v) - 5.0;
    if (ComputeEer(tp, tn).eer != e.eer) ++transform_mismatches;
  }
  const std::string detail = std::to_string(mismatches) + " oracle mismatches, " +
                             std::to_string(transform_mismatches) +
                             " monotone-transform mismatches over 200 sets";
  return mismatches == 0 && transform_mismatches == 0 ? Outcome{true, detail} : Fail(detail);
}

long long Micros(const std::string& json, const std::string& key) {
  const std::regex re("\"" + key + "\": ([0-9]+)\\.([0-9]{6})");
  std::smatch m;
  if (!std::regex_search(json, m, re)) return -1;
  return std::stoll(m[1]) * 1000000 + std::stoll(m[2]);
}

bool ScoreIsDecimalSum(const std::string& json) {
  const long long s = Micros(json, "score_wakeup");
  return s >= 0 && s == Micros(json, "miss_rate") + 19 * Micros(json, "fa_rate");
}

Outcome ScoreContract(const std::string& e2e_report) {
  if (ComputeScore(0.10, 0.05) != 1.05) return Fail("compute_score(0.10, 0.05) != 1.05");
  std::mt19937_64 rng(2028);
  int bad = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int pos = std::uniform_int_distribution<int>(1, 5000)(rng);
    const int neg = std::uniform_int_distribution<int>(1, 5000)(rng);
    const int miss = std::uniform_int_distribution<int>(0, pos)(rng);
    const int fa = std::uniform_int_distribution<int>(0, neg)(rng);
    std::vector<TrialOutcome> o;
    for (int i = 0; i < pos; ++i) o.push_back({Label::kPositive, 0.5, i >= miss, {}, i >= miss, 0});
    for (int i = 0; i < neg; ++i) o.push_back({Label::kNegative, 0.5, i < fa, {}, i < fa, 0});
    if (!ScoreIsDecimalSum(Summarize(o).ToJson())) ++bad;
  }
  if (!e2e_report.empty() && !ScoreIsDecimalSum(e2e_report)) {
    return Fail("end-to-end report.json breaks score_wakeup = miss + 19 fa");
  }
  const std::string detail = "1.05 exact; " + std::to_string(bad) +
                             " of 2000 random reports off" +
                             (e2e_report.empty() ? "" : "; end-to-end report consistent");
  return bad == 0 ? Outcome{true, detail} : Fail(detail);
}

Outcome GateLogic() {
  const std::vector<double> grid{-1.0, -0.5, 0.0, 0.25, 0.5, 0.5000001, 0.75, 1.0};
  int cases = 0, bad = 0;
  for (bool triggered : {false, true}) {
    for (double score : grid) {
      for (double threshold : grid) {
        KwsStageResult k;
        k.triggered = triggered;
        int calls = 0;
        const TriggerDecision d = ApplyGate(
            k,
            [&](const KwsStageResult&) {
              ++calls;
              return score;
            },
            threshold);
        ++cases;
        const bool expect_accept = triggered && score > threshold;
        if (d.accepted != expect_accept || calls != (triggered ? 1 : 0) ||
            d.sv_score.has_value() != triggered) {
          ++bad;
        }
      }
    }
  }
  // The real pipeline with an unreachable keyword threshold never embeds.
  PipelineConfig c;
  c.detector.threshold = 1.0;
  c.sv_threshold = -1.0;
  const VoiceTrigger vt(std::make_shared<const KwsNetwork<float>>(
                            KwsNetwork<float>::FromBundle(RandomKwsWeights(1))),
                        std::make_shared<const EmbeddingNetwork<float>>(
                            EmbeddingNetwork<float>::FromBundle(RandomEmbeddingWeights(2))),
                        c);
  std::mt19937_64 rng(2029);
  std::normal_distribution<float> g(0.0f, 0.1f);
  SpeakerProfile profile{"s", Vector<float>::Unit(128, 0), 1};
  for (int i = 0; i < 5; ++i) {
    Vector<float> x(32000);
    for (Index j = 0; j < x.size(); ++j) x[j] = g(rng);
    if (vt.Process(AudioSignal::Mono(x), profile).accepted) ++bad;
  }
  const std::string detail = std::to_string(cases) + " table cases, " + std::to_string(bad) +
                             " wrong; speaker stage runs after rejection: " +
                             std::to_string(vt.counters().sv_runs);
  return bad == 0 && vt.counters().sv_runs == 0 ? Outcome{true, detail} : Fail(detail);
}

Outcome Frontend() {
  std::mt19937_64 rng(2030);
  double worst_parseval = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Vector<double> x = Uniform(rng, kFrameLength, 1, -1, 1);
    const Vector<double> p = PowerSpectrum(x);
    const double full = p[0] + p[kNumBins - 1] + 2.0 * p.segment(1, kNumBins - 2).sum();
    worst_parseval = std::max(worst_parseval, std::abs(full / (kFftSize * x.squaredNorm()) - 1.0));
  }
  int count_errors = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = std::uniform_int_distribution<Index>(400, 500000)(rng);
    const Index frames = 1 + (n - 400) / 160;
    if (NumFrames(n) != frames) ++count_errors;
    if (frames >= 40 && NumWindows(frames) != frames - 39) ++count_errors;
  }
  // Actual feature matrices agree with the closed form too.
  for (Index n : {Index{400}, Index{16000}, Index{16159}, Index{16160}, Index{33333}}) {
    const AudioSignal a = AudioSignal::Mono(Vector<float>::Zero(n));
    const FeatureMatrix f = ExtractFeatures(a);
    if (f.rows() != 1 + (n - 400) / 160 || f.cols() != 80) ++count_errors;
  }
  const FeatureMatrix silence = ExtractFeatures(AudioSignal::Mono(Vector<float>::Zero(16000)));
  const bool floor_exact =
      (silence.array() == static_cast<float>(std::log(1e-10))).all() && silence.rows() == 98;
  const std::string detail = "Parseval max rel err " + Fmt("%.3g", worst_parseval) + ", " +
                             std::to_string(count_errors) + " count mismatches, silence " +
                             (floor_exact ? "= ln(1e-10)" : "!= ln(1e-10)");
  return worst_parseval < 1e-6 && count_errors == 0 && floor_exact ? Outcome{true, detail}
                                                                   : Fail(detail);
}

std::string Serialize(const WeightBundle& b) {
  std::ostringstream out;
  WriteBundle(out, b);
  return out.str();
}

Outcome WeightFormat(const fs::path& work) {
  int failures = 0;
  std::string notes;
  const WeightBundle kws = RandomKwsWeights(7), emb = RandomEmbeddingWeights(8);
  SaveWeights((work / "kws.pvtw").string(), kws);
  SaveWeights((work / "emb.pvtw").string(), emb);
  if (Serialize(LoadWeights((work / "kws.pvtw").string())) != Serialize(kws)) ++failures;
  if (Serialize(LoadWeights((work / "emb.pvtw").string())) != Serialize(emb)) ++failures;
  std::mt19937_64 rng(2031);
  const FeatureMatrix f = Uniform(rng, 80, 80, -8, 2).cast<float>();
  if (KwsNetwork<float>::FromBundle(kws).Posteriors(f).probs !=
      KwsNetwork<float>::FromBundle(LoadWeights((work / "kws.pvtw").string())).Posteriors(f).probs) {
    ++failures;
  }
  if (EmbeddingNetwork<float>::FromBundle(emb).Embed(f) !=
      EmbeddingNetwork<float>::FromBundle(LoadWeights((work / "emb.pvtw").string())).Embed(f)) {
    ++failures;
  }

  const std::string bytes = Serialize(kws);
  auto rejects = [&](const std::string& data, ErrorKind kind, const std::string& needle) {
    try {
      std::istringstream in(data);
      ValidateBundle(ReadBundle(in, "corrupt"));
    } catch (const Error& e) {
      if (e.kind() == kind && std::string(e.what()).find(needle) != std::string::npos) return;
      notes += std::string(" [") + e.what() + "]";
    }
    ++failures;
  };
  std::string magic = bytes;
  magic[1] = 'Q';
  rejects(magic, ErrorKind::kBadMagic, "magic");
  std::string version = bytes;
  version[4] = 9;
  rejects(version, ErrorKind::kUnsupportedVersion, "version 9");
  rejects(bytes.substr(0, bytes.size() - 3), ErrorKind::kTruncated, "fc.bias");
  WeightBundle wrong(kws.config());
  for (const auto& [n, t] : kws.tensors()) {
    if (n == "lstm1.input_weights") {
      wrong.add(n, {{512, 81}, std::vector<float>(512 * 81, 0.0f)});
    } else {
      wrong.add(n, t);
    }
  }
  rejects(Serialize(wrong), ErrorKind::kShapeMismatch, "lstm1.input_weights");
  WeightBundle missing(emb.config());
  for (const auto& [n, t] : emb.tensors()) {
    if (n != "pool.context") missing.add(n, t);
  }
  rejects(Serialize(missing), ErrorKind::kMissingTensor, "pool.context");
  const std::string detail = failures == 0 ? "round trip bit-identical; 5 corruptions rejected "
                                             "with named diagnostics"
                                           : std::to_string(failures) + " failures" + notes;
  return failures == 0 ? Outcome{true, detail} : Fail(detail);
}

int Shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome EndToEnd(const std::string& cli, const fs::path& work, std::string* report_text) {
  const fs::path corpus = work / "corpus", weights = work / "weights", out = work / "eval";
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  fs::create_directories(work);
  const std::string log = " > " + (work / "e2e.log").string() + " 2>&1";
  if (Shell(cli + " init-weights --seed 17 --out " + weights.string() + log) != 0) {
    return Fail("init-weights failed");
  }
  if (Shell(cli + " synth --seed 2026 --pos 200 --neg 1800 --jobs " + std::to_string(jobs) +
            " --out " + corpus.string() + log) != 0) {
    return Fail("synth failed; see " + (work / "e2e.log").string());
  }
  const auto start = std::chrono::steady_clock::now();
  if (Shell(cli + " evaluate --jobs 1 --kws-weights " + (weights / "kws.pvtw").string() +
            " --emb-weights " + (weights / "emb.pvtw").string() + " --trials " +
            (corpus / "trials.txt").string() + " --out " + out.string() + log) != 0) {
    return Fail("evaluate failed; see " + (work / "e2e.log").string());
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::ifstream in(out / "report.json");
  std::stringstream text;
  text << in.rdbuf();
  *report_text = text.str();
  nlohmann::json report;
  try {
    report = nlohmann::json::parse(*report_text);
  } catch (const std::exception& e) {
    return Fail(std::string("report.json does not parse: ") + e.what());
  }
  for (const char* key : {"num_pos", "num_neg", "miss_rate", "fa_rate", "score_wakeup", "eer",
                          "min_dcf", "fr_at_1fa_per_hour", "rtf"}) {
    if (!report.contains(key)) return Fail(std::string("report.json lacks ") + key);
  }
  if (report["num_pos"] != 200 || report["num_neg"] != 1800) {
    return Fail("report counts " + report["num_pos"].dump() + "/" + report["num_neg"].dump());
  }
  std::ifstream rtf_in(out / "rtf.json");
  const auto rtf = nlohmann::json::parse(rtf_in);
  if (!rtf["single_threaded"].get<bool>()) return Fail("evaluation was not single-threaded");
  const double factor = report["rtf"].get<double>();
  const std::string detail = "RTF " + Fmt("%.4f", factor) + " over " +
                             Fmt("%.0f", rtf["t_total_test"].get<double>()) +
                             " s of test audio, single-threaded on " +
                             rtf["hardware"].get<std::string>() + "; evaluate wall " +
                             Fmt("%.1f", wall) + " s; score_wakeup " +
                             report["score_wakeup"].dump();
  return factor < 1.0 ? Outcome{true, detail} : Fail(detail);
}

}  // namespace
}  // namespace pvt

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <pvt-binary> <work-dir>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path work = argv[2];
  std::error_code ec;
  fs::remove_all(work, ec);
  fs::create_directories(work);

  int failed = 0;
  auto report = [&](const char* name, const std::function<pvt::Outcome()>& check) {
    pvt::Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };

  std::string e2e_report;
  report("confidence_dp_matches_brute_force", pvt::ConfidenceOracle);
  report("lstm_matches_scalar_recurrence", pvt::LstmOracle);
  report("attentive_pooling_matches_weighted_moments", pvt::AspOracle);
  report("eer_mindcf_match_exhaustive_sweep", pvt::MetricOracles);
  report("gate_decision_table", pvt::GateLogic);
  report("frontend_parseval_counts_silence", pvt::Frontend);
  report("pvtw_round_trip_and_corruption", [&] { return pvt::WeightFormat(work); });
  report("end_to_end_synth_evaluate_rtf",
         [&] { return pvt::EndToEnd(cli, work / "e2e", &e2e_report); });
  report("wakeup_score_contract", [&] { return pvt::ScoreContract(e2e_report); });
  return failed == 0 ? 0 : 1;
}
