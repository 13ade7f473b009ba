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

// pvt: synthetic corpus generation, enrollment, detection, evaluation,
// calibration and benchmarking for the personalized voice trigger.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pvt/audio.h"
#include "pvt/evaluation.h"
#include "pvt/frontend.h"
#include "pvt/model_config.h"
#include "pvt/pipeline.h"
#include "pvt/synth.h"
#include "pvt/trials.h"
#include "pvt/verifier.h"
#include "pvt/weights.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CliConfig {
  std::string kws_weights;
  std::string emb_weights;
  std::string profile_dir = "profiles";
  std::string trials;
  std::string scores;
  std::string out;
  std::string speaker;
  std::vector<std::string> wavs;
  std::string wav;
  std::optional<double> kws_threshold;
  std::optional<double> sv_threshold;
  std::string threshold_set;
  std::string sv_point = "v2";
  uint64_t seed = 0;
  int jobs = 1;
  long long decision_window = 150;
  long long decision_hop = 10;
  long long refractory = 100;
  std::optional<double> neg_hours;
  int positives = 200;
  int negatives = 1800;
  int target_speakers = 10;
  int other_speakers = 20;
  double snr_min = 5.0;
  double snr_max = 20.0;
  double duration = 3.8;
  int channel = 0;
};

void AddModelFlags(CLI::App* cmd, CliConfig& c, bool needs_embedding = true) {
  cmd->add_option("--kws-weights", c.kws_weights, "KWS network weights (PVTW)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* emb = cmd->add_option("--emb-weights", c.emb_weights,
                              "Speaker embedding network weights (PVTW)");
  emb->check(CLI::ExistingFile);
  if (needs_embedding) emb->required();
}

void AddDecisionFlags(CLI::App* cmd, CliConfig& c) {
  cmd->add_option("--kws-threshold", c.kws_threshold,
                  "Keyword confidence threshold; fires when exceeded (default 0.5)")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--decision-window", c.decision_window,
                  "Decision window in posterior frames")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--decision-hop", c.decision_hop, "Decision hop in posterior frames")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--refractory", c.refractory,
                  "Frames after an event during which triggers are suppressed")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

void AddSvFlags(CLI::App* cmd, CliConfig& c) {
  cmd->add_option("--sv-threshold", c.sv_threshold,
                  "Speaker score threshold; accepts when exceeded")
      ->check(CLI::Range(-1.0, 1.0));
  cmd->add_option("--threshold-set", c.threshold_set,
                  "thresholds.json from calibrate; used when --sv-threshold is absent")
      ->check(CLI::ExistingFile);
  cmd->add_option("--sv-point", c.sv_point,
                  "Operating point taken from the threshold set: v1 (EER) or v2 (mean)")
      ->capture_default_str()
      ->check(CLI::IsMember({"v1", "v2"}));
}

void AddConfigFlag(CLI::App* cmd) {
  // Consumed before parsing; declared here for --help.
  cmd->add_option("--config", "JSON file of flag values; command-line flags win");
}

pvt::PipelineConfig MakePipelineConfig(const CliConfig& c) {
  pvt::PipelineConfig p;
  p.detector.threshold = c.kws_threshold.value_or(0.5);
  p.detector.window = c.decision_window;
  p.detector.hop = c.decision_hop;
  p.detector.refractory = c.refractory;
  pvt::Validate(p.detector);
  if (c.sv_threshold) {
    p.sv_threshold = *c.sv_threshold;
  } else if (!c.threshold_set.empty()) {
    std::ifstream in(c.threshold_set);
    const auto set = pvt::ThresholdSet::FromJson(json::parse(in));
    p.sv_threshold = pvt::SelectThreshold(set, pvt::ParseOperatingPoint(c.sv_point));
  }
  return p;
}

std::unique_ptr<pvt::VoiceTrigger> MakeTrigger(const CliConfig& c) {
  auto kws = std::make_shared<const pvt::KwsNetwork<float>>(
      pvt::KwsNetwork<float>::FromBundle(pvt::LoadWeights(c.kws_weights)));
  auto emb = std::make_shared<const pvt::EmbeddingNetwork<float>>(
      pvt::EmbeddingNetwork<float>::FromBundle(pvt::LoadWeights(c.emb_weights)));
  auto p = MakePipelineConfig(c);
  spdlog::debug("kws threshold {:.6f}, sv threshold {:.6f}", p.detector.threshold,
                p.sv_threshold);
  return std::make_unique<pvt::VoiceTrigger>(std::move(kws), std::move(emb), p);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw pvt::Error(pvt::ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw pvt::Error(pvt::ErrorKind::kIo, "write failed: " + path.string());
}

fs::path EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) {
    throw pvt::Error(pvt::ErrorKind::kIo, "cannot create directory " + dir);
  }
  return dir;
}

int RunSynth(const CliConfig& c) {
  pvt::synth::TrialsetConfig cfg;
  cfg.seed = c.seed;
  cfg.row_counts = pvt::synth::TrialsetConfig::SplitCounts(c.positives, c.negatives);
  cfg.num_target_speakers = c.target_speakers;
  cfg.num_other_speakers = c.other_speakers;
  cfg.snr_min_db = c.snr_min;
  cfg.snr_max_db = c.snr_max;
  cfg.mean_duration_s = c.duration;
  cfg.jobs = c.jobs;
  const auto summary = pvt::synth::BuildTrialset(cfg, c.out);
  spdlog::info("wrote {} positive and {} negative trials to {}", summary.positives,
               summary.negatives, summary.trials_path);
  return kExitOk;
}

int RunInitWeights(const CliConfig& c) {
  const fs::path dir = EnsureDir(c.out);
  pvt::SaveWeights((dir / "kws.pvtw").string(), pvt::RandomKwsWeights(c.seed));
  pvt::SaveWeights((dir / "emb.pvtw").string(), pvt::RandomEmbeddingWeights(c.seed + 1));
  spdlog::info("wrote {} and {}", (dir / "kws.pvtw").string(), (dir / "emb.pvtw").string());
  return kExitOk;
}

int RunEnroll(const CliConfig& c) {
  const auto trigger = MakeTrigger(c);
  std::vector<pvt::Embedding> embeddings;
  for (const auto& path : c.wavs) {
    embeddings.push_back(trigger->EnrollmentEmbedding(pvt::ReadWav(path)));
  }
  const auto profile = pvt::Enroll(c.speaker, embeddings);
  const std::string path = pvt::ProfilePath(c.profile_dir, c.speaker);
  if (fs::exists(path)) spdlog::warn("overwriting existing profile {}", path);
  EnsureDir(c.profile_dir);
  pvt::SaveProfile(c.profile_dir, profile);
  spdlog::info("enrolled {} from {} file(s) into {}", c.speaker, embeddings.size(), path);
  return kExitOk;
}

int RunDetect(const CliConfig& c) {
  const auto profile = pvt::LoadProfile(c.profile_dir, c.speaker);
  const auto trigger = MakeTrigger(c);
  const pvt::AudioSignal audio = c.wav == "-" ? pvt::ReadWav(std::cin) : pvt::ReadWav(c.wav);
  const auto decision = trigger->Process(audio, profile);
  std::cout << pvt::FormatResultLine(0, decision) << "\n";
  return kExitOk;
}

int RunEvaluateScores(const CliConfig& c) {
  const auto rows = pvt::ParseScoreTable(c.scores);
  const auto p = MakePipelineConfig(c);
  const auto report =
      pvt::EvaluateScores(rows, p.detector.threshold, p.sv_threshold, c.neg_hours);
  const std::string text = report.ToJson();
  if (!c.out.empty()) WriteText(EnsureDir(c.out) / "report.json", text);
  std::cout << text;
  return kExitOk;
}

int RunEvaluate(const CliConfig& c) {
  if (!c.scores.empty()) return RunEvaluateScores(c);
  const auto trials = pvt::ParseTrials(c.trials);
  const std::string base = fs::path(c.trials).parent_path().string();
  const auto trigger = MakeTrigger(c);
  pvt::EvalOptions options;
  options.jobs = c.jobs;
  const auto outcome = pvt::Evaluate(trials, base, *trigger, options);

  const fs::path dir = EnsureDir(c.out);
  WriteText(dir / "report.json", outcome.report.ToJson());
  std::ostringstream lines;
  for (size_t i = 0; i < outcome.decisions.size(); ++i) {
    lines << pvt::FormatResultLine(i, outcome.decisions[i]) << "\n";
  }
  WriteText(dir / "trials.tsv", lines.str());
  std::vector<pvt::ScoredTrial> rows;
  for (size_t i = 0; i < outcome.outcomes.size(); ++i) {
    const auto& o = outcome.outcomes[i];
    rows.push_back({o.label, o.kws_confidence, o.sv_score, trials[i].line});
  }
  std::ostringstream scores;
  pvt::WriteScoreTable(scores, rows);
  WriteText(dir / "scores.tsv", scores.str());
  WriteText(dir / "rtf.json", outcome.rtf.ToJson().dump(2) + "\n");
  std::cout << outcome.report.ToJson();
  spdlog::info("rtf {:.4f} over {} utterances ({})", outcome.rtf.factor,
               outcome.rtf.utterances,
               outcome.rtf.single_threaded ? "single-threaded" : "multi-threaded");
  return kExitOk;
}

int RunCalibrate(const CliConfig& c) {
  const auto rows = pvt::ParseScoreTable(c.scores);
  std::vector<double> pos, neg;
  for (const auto& r : rows) {
    if (!r.sv_score) continue;
    (r.label == pvt::Label::kPositive ? pos : neg).push_back(*r.sv_score);
  }
  if (pos.empty() || neg.empty()) {
    throw pvt::Error(pvt::ErrorKind::kEmptyInput,
                     "calibrate: need speaker scores for both labels in " + c.scores);
  }
  const auto set = pvt::Calibrate(pos, neg);
  const std::string text = set.ToJson().dump(2) + "\n";
  if (!c.out.empty()) WriteText(EnsureDir(c.out) / "thresholds.json", text);
  std::cout << text;
  return kExitOk;
}

int RunBench(const CliConfig& c) {
  if (c.jobs != 1) spdlog::warn("bench is single-threaded; ignoring --jobs {}", c.jobs);
  const auto trials = pvt::ParseTrials(c.trials);
  const std::string base = fs::path(c.trials).parent_path().string();
  const auto trigger = MakeTrigger(c);
  const auto report = pvt::MeasureRtf(trials, base, *trigger);
  const std::string text = report.ToJson().dump(2) + "\n";
  if (!c.out.empty()) WriteText(EnsureDir(c.out) / "rtf.json", text);
  std::cout << text;
  return kExitOk;
}

int RunFeatures(const CliConfig& c) {
  const auto audio = pvt::ReadWav(c.wav);
  if (c.channel < 0 || c.channel >= audio.channels()) {
    throw pvt::Error(pvt::ErrorKind::kInvalidArgument,
                     "features: channel " + std::to_string(c.channel) + " out of range");
  }
  pvt::WriteFeatureDump(c.out, pvt::ExtractFeatures(audio, c.channel));
  return kExitOk;
}

// Prepends the values of a --config JSON file to the subcommand's arguments,
// so explicitly given flags (parsed later, last value wins) override them.
std::vector<std::string> ExpandConfig(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  size_t config_at = args.size();
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      config_at = i;
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      config_at = i;
      break;
    }
  }
  if (config_path.empty()) return args;
  const size_t width = args[config_at] == "--config" ? 2 : 1;
  args.erase(args.begin() + static_cast<long>(config_at),
             args.begin() + static_cast<long>(config_at + width));

  std::ifstream in(config_path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + config_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw CLI::ValidationError("--config", config_path + ": " + e.what());
  }
  if (!j.is_object()) throw CLI::ValidationError("--config", "expected a JSON object");
  std::vector<std::string> injected;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    auto push = [&](const json& v) {
      injected.push_back(flag);
      injected.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    };
    if (value.is_array()) {
      for (const auto& v : value) push(v);
    } else if (value.is_object() || value.is_null()) {
      throw CLI::ValidationError("--config", "unsupported value for " + key);
    } else {
      push(value);
    }
  }
  // Insert right after the subcommand name.
  const auto at = args.empty() ? args.begin() : args.begin() + 1;
  args.insert(at, injected.begin(), injected.end());
  return args;
}

void ConfigureLogging() {
  auto logger = spdlog::stderr_color_mt("pvt");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("VT_LOG")) spdlog::cfg::helpers::load_levels(level);
}

}  // namespace

int main(int argc, char** argv) {
  ConfigureLogging();
  CliConfig c;
  CLI::App app{"Personalized voice trigger: keyword spotting gated by speaker verification"};
  app.set_version_flag("--version", std::string(pvt::EngineVersion()));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic trial set");
  synth->add_option("--out", c.out, "Output directory")->required();
  synth->add_option("--seed", c.seed, "Corpus seed")->capture_default_str();
  synth->add_option("--pos", c.positives, "Positive trials")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--neg", c.negatives, "Negative trials")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--target-speakers", c.target_speakers, "Enrolled speakers")
      ->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--other-speakers", c.other_speakers, "Non-target speakers")
      ->capture_default_str()->check(CLI::Range(2, 100000));
  synth->add_option("--snr-min", c.snr_min, "Minimum SNR in dB")->capture_default_str();
  synth->add_option("--snr-max", c.snr_max, "Maximum SNR in dB")->capture_default_str();
  synth->add_option("--duration", c.duration, "Mean test utterance seconds")
      ->capture_default_str()->check(CLI::Range(2.2, 600.0));
  synth->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str()
      ->check(CLI::PositiveNumber);
  AddConfigFlag(synth);

  auto* init = app.add_subcommand("init-weights",
                                  "Write seeded random kws.pvtw and emb.pvtw");
  init->add_option("--out", c.out, "Output directory")->required();
  init->add_option("--seed", c.seed, "Weight seed")->capture_default_str();
  AddConfigFlag(init);

  auto* enroll = app.add_subcommand("enroll", "Enroll a speaker from 1-3 keyword recordings");
  AddModelFlags(enroll, c);
  enroll->add_option("--speaker", c.speaker, "Speaker id")->required();
  auto* wavs = enroll->add_option("--wav", c.wavs, "Enrollment WAV (repeat up to 3 times)")
                   ->required()
                   ->check(CLI::ExistingFile);
  wavs->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  enroll->add_option("--profile-dir", c.profile_dir, "Profile directory")
      ->capture_default_str();
  AddConfigFlag(enroll);

  auto* detect = app.add_subcommand("detect", "Run the trigger on one recording");
  AddModelFlags(detect, c);
  detect->add_option("--speaker", c.speaker, "Enrolled speaker id")->required();
  detect->add_option("--wav", c.wav, "WAV file, or - for standard input")->required();
  detect->add_option("--profile-dir", c.profile_dir, "Profile directory")
      ->capture_default_str();
  AddDecisionFlags(detect, c);
  AddSvFlags(detect, c);
  AddConfigFlag(detect);

  auto* evaluate = app.add_subcommand("evaluate", "Score a trial list or a score table");
  evaluate->add_option("--kws-weights", c.kws_weights, "KWS network weights (PVTW)")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--emb-weights", c.emb_weights,
                       "Speaker embedding network weights (PVTW)")
      ->check(CLI::ExistingFile);
  auto* eval_trials = evaluate->add_option("--trials", c.trials, "Trial list")
                          ->check(CLI::ExistingFile);
  auto* eval_scores =
      evaluate->add_option("--scores", c.scores,
                           "Score table (label kws_confidence sv_score) instead of audio")
          ->check(CLI::ExistingFile);
  eval_trials->excludes(eval_scores);
  evaluate->add_option("--neg-hours", c.neg_hours,
                       "Hours of negative audio behind a score table (enables FR@FA)")
      ->check(CLI::PositiveNumber)
      ->needs(eval_scores);
  evaluate->add_option("--out", c.out, "Output directory (required with --trials)");
  evaluate->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str()
      ->check(CLI::PositiveNumber);
  AddDecisionFlags(evaluate, c);
  AddSvFlags(evaluate, c);
  AddConfigFlag(evaluate);

  auto* calibrate = app.add_subcommand("calibrate",
                                       "Derive speaker thresholds from dev scores");
  calibrate->add_option("--scores", c.scores, "Dev score table")->required()
      ->check(CLI::ExistingFile);
  calibrate->add_option("--out", c.out, "Directory for thresholds.json");
  AddConfigFlag(calibrate);

  auto* bench = app.add_subcommand("bench", "Single-threaded real-time factor");
  AddModelFlags(bench, c);
  bench->add_option("--trials", c.trials, "Trial list")->required()
      ->check(CLI::ExistingFile);
  bench->add_option("--out", c.out, "Directory for rtf.json");
  bench->add_option("--jobs", c.jobs, "Ignored; bench always uses one thread");
  AddDecisionFlags(bench, c);
  AddSvFlags(bench, c);
  AddConfigFlag(bench);

  auto* features = app.add_subcommand("features", "Dump log-mel features of a WAV");
  features->add_option("--wav", c.wav, "Input WAV")->required()->check(CLI::ExistingFile);
  features->add_option("--out", c.out, "Output feature dump")->required();
  features->add_option("--channel", c.channel, "Channel index")->capture_default_str();
  AddConfigFlag(features);

  try {
    auto args = ExpandConfig(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (enroll->parsed() && c.wavs.size() > static_cast<size_t>(pvt::kMaxEnrollment)) {
      throw CLI::ValidationError("--wav", "at most 3 enrollment files");
    }
    if (evaluate->parsed()) {
      if (c.trials.empty() && c.scores.empty()) {
        throw CLI::RequiredError("--trials or --scores");
      }
      if (!c.trials.empty() &&
          (c.kws_weights.empty() || c.emb_weights.empty() || c.out.empty())) {
        throw CLI::RequiredError("--kws-weights, --emb-weights and --out with --trials");
      }
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return RunSynth(c);
    if (init->parsed()) return RunInitWeights(c);
    if (enroll->parsed()) return RunEnroll(c);
    if (detect->parsed()) return RunDetect(c);
    if (evaluate->parsed()) return RunEvaluate(c);
    if (calibrate->parsed()) return RunCalibrate(c);
    if (bench->parsed()) return RunBench(c);
    if (features->parsed()) return RunFeatures(c);
  } catch (const pvt::Error& e) {
    spdlog::error("{} ({})", e.what(), pvt::ToString(e.kind()));
    return kExitRuntime;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
