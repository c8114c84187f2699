// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// arnse: mix, train, enhance, evaluate, features, score-wer, synth.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 data error,
// 3 numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "arnse/arn.hpp"
#include "arnse/audio_io.hpp"
#include "arnse/checkpoint.hpp"
#include "arnse/dsp.hpp"
#include "arnse/error.hpp"
#include "arnse/metrics.hpp"
#include "arnse/mixer.hpp"
#include "arnse/random.hpp"
#include "arnse/trainer.hpp"

namespace fs = std::filesystem;
using namespace arnse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct MixArgs {
  std::string clean_dir, noise_dir, out;
  int count = 0;
  std::uint64_t seed = 0;
  double snr_fixed = 0.0;
  bool two_ranges = false;
  double target_rms = 0.05;
  bool no_loop = false;
};

struct EnhanceArgs {
  std::string checkpoint, in, out, select;
};

struct EvaluateArgs {
  std::string clean, processed, manifest, out;
};

struct SynthArgs {
  std::string out;
  int count = 8;
  int noise_count = 2;
  double seconds = 4.0;
  double noise_seconds = 10.0;
  std::uint64_t seed = 0;
};

int RunMix(const MixArgs& a, bool fixed_given) {
  CorpusOptions opts;
  opts.clean_dir = a.clean_dir;
  opts.noise_dir = a.noise_dir;
  opts.out_dir = a.out;
  opts.count = a.count;
  opts.seed = a.seed;
  opts.target_rms = a.target_rms;
  opts.loop_noise = !a.no_loop;
  if (fixed_given) {
    opts.policy.kind = SnrPolicy::Kind::kFixed;
    opts.policy.fixed_db = a.snr_fixed;
  }
  const CorpusManifest m = BuildCorpus(opts);
  std::cout << "wrote " << m.entries.size() << " mixtures to " << a.out << "\n";
  return kExitOk;
}

int RunTrain(const std::string& config, const std::string& out) {
  const TrainConfig cfg = TrainConfig::Load(config);
  Train(cfg, out, &std::cout);
  return kExitOk;
}

Checkpoint LoadForEnhance(const EnhanceArgs& a) {
  if (a.select.empty()) {
    if (fs::is_directory(a.checkpoint)) throw ConfigError("--checkpoint is a directory; pass --select");
    return LoadCheckpoint(a.checkpoint);
  }
  const Criterion c = ParseCriterion(a.select);
  const fs::path dir = fs::is_directory(a.checkpoint) ? fs::path(a.checkpoint)
                                                      : fs::path(a.checkpoint).parent_path();
  const int epoch = SelectCheckpoint(LoadLog(dir / kLogFile), c);
  Checkpoint ckpt = LoadCheckpoint(dir / CheckpointFile(c));
  if (static_cast<int>(ckpt.meta.epoch) != epoch) {
    throw DataError("checkpoint " + CheckpointFile(c) + " holds epoch " +
                    std::to_string(ckpt.meta.epoch) + " but the log selects epoch " +
                    std::to_string(epoch));
  }
  std::cout << "selected criterion=" << CriterionName(c) << " epoch=" << epoch << "\n";
  return ckpt;
}

int RunEnhance(const EnhanceArgs& a) {
  const Checkpoint ckpt = LoadForEnhance(a);
  const ParamSet<double> params = FromFloatParams<double>(ckpt.params);
  if (fs::is_directory(a.in)) {
    fs::create_directories(a.out);
    for (const fs::path& f : ListWavs(a.in)) {
      WriteWav(Enhance(ReadWav(f), params, ckpt.config), fs::path(a.out) / f.filename());
    }
  } else {
    WriteWav(Enhance(ReadWav(a.in), params, ckpt.config), a.out);
  }
  return kExitOk;
}

int RunEvaluate(const EvaluateArgs& a) {
  std::map<std::string, double> snr_by_id;
  if (!a.manifest.empty()) {
    for (const ManifestEntry& e : CorpusManifest::Load(a.manifest).entries) snr_by_id[e.id] = e.snr_db;
  }
  MetricsReport report;
  const auto files = ListWavs(a.clean);
  if (files.empty()) throw DataError("no WAV files in " + a.clean);
  for (const fs::path& f : files) {
    const fs::path processed = fs::path(a.processed) / f.filename();
    if (!fs::exists(processed)) throw DataError("missing processed file " + processed.string());
    const AudioBuffer s = ReadWav(f);
    const AudioBuffer p = ReadWav(processed);
    UtteranceMetrics u;
    u.id = f.stem().string();
    if (auto it = snr_by_id.find(u.id); it != snr_by_id.end()) u.snr_bin_db = it->second;
    u.stoi = Stoi(s, p);
    u.snr_out_db = SnrDb(s, p);
    report.utterances.push_back(u);
  }
  std::ofstream out(a.out, std::ios::trunc);
  if (!out) throw DataError("cannot write report " + a.out);
  out << report.ToText();
  const BinSummary all = report.Overall();
  std::cout.precision(17);
  std::cout << "overall count=" << all.count << " stoi=" << all.mean_stoi << "\n";
  return kExitOk;
}

int RunFeatures(const std::string& in, const std::string& out) {
  const FeatureMatrix f = LogMelFeatures(ReadWav(in));
  WriteFeatures(f.values, out);
  std::cout << "frames=" << f.values.rows() << " dims=" << f.values.cols() << "\n";
  return kExitOk;
}

std::map<std::string, std::vector<std::string>> ReadTranscripts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open transcript " + path);
  std::map<std::string, std::vector<std::string>> out;
  for (std::string line; std::getline(in, line);) {
    auto words = SplitWords(line);
    if (words.empty()) continue;
    const std::string id = words.front();
    words.erase(words.begin());
    if (!out.emplace(id, std::move(words)).second) throw DataError("duplicate utterance id " + id);
  }
  return out;
}

int RunScoreWer(const std::string& ref_path, const std::string& hyp_path) {
  const auto ref = ReadTranscripts(ref_path);
  const auto hyp = ReadTranscripts(hyp_path);
  EditCounts total;
  long ref_words = 0;
  for (const auto& [id, words] : ref) {
    auto it = hyp.find(id);
    const std::vector<std::string> empty;
    const EditCounts e = AlignWords(words, it == hyp.end() ? empty : it->second);
    total.substitutions += e.substitutions;
    total.deletions += e.deletions;
    total.insertions += e.insertions;
    ref_words += static_cast<long>(words.size());
  }
  for (const auto& [id, words] : hyp) {
    if (!ref.contains(id)) throw DataError("hypothesis id " + id + " has no reference");
  }
  if (ref_words == 0) throw DataError("reference transcripts contain no words");
  const double wer =
      static_cast<double>(total.substitutions + total.deletions + total.insertions) / ref_words;
  std::cout.precision(17);
  std::cout << "wer=" << wer << " ref_words=" << ref_words << " sub=" << total.substitutions
            << " del=" << total.deletions << " ins=" << total.insertions << "\n";
  return kExitOk;
}

int RunSynth(const SynthArgs& a) {
  const fs::path out(a.out);
  fs::create_directories(out / "clean");
  fs::create_directories(out / "noise");
  char name[32];
  for (int i = 0; i < a.count; ++i) {
    std::snprintf(name, sizeof(name), "utt_%04d.wav", i);
    WriteWav(SynthSpeechLike(DeriveSeed(a.seed, i), a.seconds), out / "clean" / name);
  }
  for (int j = 0; j < a.noise_count; ++j) {
    std::snprintf(name, sizeof(name), "noise_%02d.wav", j);
    const NoiseKind kind = j % 2 == 0 ? NoiseKind::kPink : NoiseKind::kWhite;
    WriteWav(SynthNoise(DeriveSeed(a.seed, 100000 + j), a.noise_seconds, 16000, kind),
             out / "noise" / name);
  }
  std::cout << "wrote " << a.count << " utterances and " << a.noise_count << " noises to " << a.out
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arnse: time-domain speech enhancement toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  MixArgs mix;
  auto* mix_cmd = app.add_subcommand("mix", "Mix clean speech with noise into a corpus");
  mix_cmd->add_option("--clean-dir", mix.clean_dir, "Directory of clean WAV files")->required();
  mix_cmd->add_option("--noise-dir", mix.noise_dir, "Directory of noise WAV files")->required();
  mix_cmd->add_option("--count", mix.count, "Number of mixtures")->required()->check(CLI::NonNegativeNumber);
  mix_cmd->add_option("--seed", mix.seed, "Random seed")->required();
  mix_cmd->add_option("--out", mix.out, "Output directory")->required();
  auto* fixed_opt = mix_cmd->add_option("--snr-fixed", mix.snr_fixed, "Mix every pair at this SNR (dB)");
  auto* ranges_opt = mix_cmd->add_flag("--snr-paper-ranges", mix.two_ranges,
                                       "Draw SNR from U[-7,0) or U[0,10] with equal odds (default)");
  fixed_opt->excludes(ranges_opt);
  ranges_opt->excludes(fixed_opt);
  mix_cmd->add_option("--target-rms", mix.target_rms, "RMS of every mixture")->capture_default_str();
  mix_cmd->add_flag("--no-loop", mix.no_loop, "Do not loop noise shorter than the utterance");

  std::string train_config, train_out;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("--config", train_config, "Config file (key = value lines)")->required();
  train_cmd->add_option("--out", train_out, "Output directory for log and checkpoints")->required();

  EnhanceArgs enh;
  auto* enh_cmd = app.add_subcommand("enhance", "Enhance a WAV file or directory");
  enh_cmd->add_option("--checkpoint", enh.checkpoint, "Checkpoint file, or training directory with --select")
      ->required();
  enh_cmd->add_option("--in", enh.in, "Input WAV file or directory")->required();
  enh_cmd->add_option("--out", enh.out, "Output WAV file or directory")->required();
  enh_cmd->add_option("--select", enh.select, "Pick the best checkpoint by min-pcm or max-stoi")
      ->check(CLI::IsMember({"min-pcm", "max-stoi"}));

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score processed audio against clean references");
  ev_cmd->add_option("--clean", ev.clean, "Directory of clean WAV files")->required();
  ev_cmd->add_option("--processed", ev.processed, "Directory of processed WAV files (same names)")
      ->required();
  ev_cmd->add_option("--manifest", ev.manifest, "Corpus manifest giving input SNR per id");
  ev_cmd->add_option("--out", ev.out, "Report file")->required();

  std::string feat_in, feat_out;
  auto* feat_cmd = app.add_subcommand("features", "Write 240-dim log-Mel features of a WAV file");
  feat_cmd->add_option("--in", feat_in, "Input WAV file")->required();
  feat_cmd->add_option("--out", feat_out, "Output feature file")->required();

  std::string wer_ref, wer_hyp;
  auto* wer_cmd = app.add_subcommand("score-wer", "Word error rate of hypothesis transcripts");
  wer_cmd->add_option("--ref", wer_ref, "Reference transcripts (id words...)")->required();
  wer_cmd->add_option("--hyp", wer_hyp, "Hypothesis transcripts (id words...)")->required();

  SynthArgs syn;
  auto* syn_cmd = app.add_subcommand("synth", "Write synthetic speech-like and noise WAV files");
  syn_cmd->add_option("--out", syn.out, "Output directory (clean/ and noise/)")->required();
  syn_cmd->add_option("--seed", syn.seed, "Random seed")->required();
  syn_cmd->add_option("--count", syn.count, "Number of utterances")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  syn_cmd->add_option("--seconds", syn.seconds, "Utterance length in seconds")->capture_default_str()
      ->check(CLI::PositiveNumber);
  syn_cmd->add_option("--noise-count", syn.noise_count, "Number of noise files")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  syn_cmd->add_option("--noise-seconds", syn.noise_seconds, "Noise length in seconds")
      ->capture_default_str()->check(CLI::PositiveNumber);

  if (argc > 1 && argv[1][0] != '-') {
    bool known = false;
    for (const CLI::App* sub : app.get_subcommands({})) known = known || sub->check_name(argv[1]);
    if (!known) {
      std::cerr << "error: unknown subcommand '" << argv[1] << "'\n\n" << app.help() << std::flush;
      return kExitUsage;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
    return kExitUsage;
  }

  try {
    if (*mix_cmd) return RunMix(mix, fixed_opt->count() > 0);
    if (*train_cmd) return RunTrain(train_config, train_out);
    if (*enh_cmd) return RunEnhance(enh);
    if (*ev_cmd) return RunEvaluate(ev);
    if (*feat_cmd) return RunFeatures(feat_in, feat_out);
    if (*wer_cmd) return RunScoreWer(wer_ref, wer_hyp);
    if (*syn_cmd) return RunSynth(syn);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
