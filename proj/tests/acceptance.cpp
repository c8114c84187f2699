// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Usage: acceptance [criterion ids...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "arnse/arn.hpp"
#include "arnse/audio_io.hpp"
#include "arnse/autodiff.hpp"
#include "arnse/checkpoint.hpp"
#include "arnse/dsp.hpp"
#include "arnse/error.hpp"
#include "arnse/metrics.hpp"
#include "arnse/mixer.hpp"
#include "arnse/objective.hpp"
#include "arnse/random.hpp"
#include "arnse/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/run_cli.hpp"
#include "support/test_util.hpp"
#include "support/wer_oracle.hpp"

using namespace arnse;
using arnse::testing::CheckGradients;
using arnse::testing::RandomMatrix;
using arnse::testing::RandomSignal;
using arnse::testing::TempDir;
using V = ad::Var<double>;
using Vars = std::vector<V>;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a check; the first failure is flagged in the detail text.
  void Expect(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "FAILED: ";
      detail << what << "; ";
      pass = false;
    }
  }
};

struct Check {
  int id;
  std::string name;
  double budget_s;  // wall-clock limit that is part of the criterion; 0 for none
  std::function<void(Outcome&)> run;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string Fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

void Reconstruction(Outcome& o) {
  std::mt19937_64 rng(101);
  double ola = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int l = 1 + static_cast<int>(UniformIndex(rng, 512));
    const int h = 1 + static_cast<int>(UniformIndex(rng, l));
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(UniformIndex(rng, 4000));
    const Eigen::VectorXd x = RandomSignal(rng, m);
    ola = std::max(ola, (OverlapAdd(FrameSignal(x, l, h), h, m) - x).cwiseAbs().maxCoeff());
  }
  double inv = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    StftConfig cfg;
    cfg.fft_size = 1 << (4 + UniformIndex(rng, 6));
    cfg.frame_len = trial % 2 == 0 ? 0 : cfg.fft_size / 2 + 1;
    cfg.hop = 1 + static_cast<int>(UniformIndex(rng, cfg.FrameLength()));
    cfg.window = trial % 3 == 0 ? Window::kRectangular : Window::kHammingPeriodic;
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(UniformIndex(rng, 4000));
    const Eigen::VectorXd x = RandomSignal(rng, m);
    inv = std::max(inv, (Istft(Stft(x, cfg), m, 16000).samples - x).cwiseAbs().maxCoeff());
  }
  o.detail << "ola_max_err=" << Fmt(ola) << " istft_max_err=" << Fmt(inv) << "; ";
  o.Expect(ola <= 1e-12, "frame/overlap-add error above 1e-12");
  o.Expect(inv <= 1e-10, "istft(stft(x)) error above 1e-10");
}

// ---------------------------------------------------------------------------

void Gradients(Outcome& o) {
  std::mt19937_64 rng(202);
  const auto a = RandomMatrix(rng, 3, 4), b = RandomMatrix(rng, 3, 4), c = RandomMatrix(rng, 4, 2);
  const auto row = RandomMatrix(rng, 1, 4), pos = RandomMatrix(rng, 3, 4, 0.2, 2.0);
  Eigen::MatrixXd away = a;
  for (Eigen::Index i = 0; i < away.size(); ++i) {
    if (std::abs(away.data()[i]) < 0.05) away.data()[i] = 0.3;
  }
  const auto tall = RandomMatrix(rng, 5, 3), wide = RandomMatrix(rng, 5, 2), flat = RandomMatrix(rng, 2, 3);
  const auto gain = RandomMatrix(rng, 1, 3, 0.5, 1.5), bias = RandomMatrix(rng, 1, 3);
  const auto pre = RandomMatrix(rng, 6, 12), whh = RandomMatrix(rng, 3, 12);
  const auto q = RandomMatrix(rng, 5, 4), k = RandomMatrix(rng, 5, 4), v = RandomMatrix(rng, 5, 3);

  struct Case {
    std::string name;
    std::vector<Eigen::MatrixXd> inputs;
    arnse::testing::Builder build;
  };
  const std::vector<Case> cases = {
      {"matmul", {a, c}, [](auto&, const Vars& x) { return ad::MatMul(x[0], x[1]); }},
      {"add", {a, b}, [](auto&, const Vars& x) { return ad::Add(x[0], x[1]); }},
      {"sub", {a, b}, [](auto&, const Vars& x) { return ad::Sub(x[0], x[1]); }},
      {"mul", {a, b}, [](auto&, const Vars& x) { return ad::Mul(x[0], x[1]); }},
      {"scale", {a}, [](auto&, const Vars& x) { return ad::Scale(x[0], -2.5); }},
      {"add_rowwise", {a, row}, [](auto&, const Vars& x) { return ad::AddRowwise(x[0], x[1]); }},
      {"transpose", {a}, [](auto&, const Vars& x) { return ad::Transpose(x[0]); }},
      {"tanh", {a}, [](auto&, const Vars& x) { return ad::Tanh(x[0]); }},
      {"sigmoid", {a}, [](auto&, const Vars& x) { return ad::Sigmoid(x[0]); }},
      {"exp", {a}, [](auto&, const Vars& x) { return ad::Exp(x[0]); }},
      {"log", {pos}, [](auto&, const Vars& x) { return ad::Log(x[0]); }},
      {"sqrt", {pos}, [](auto&, const Vars& x) { return ad::Sqrt(x[0]); }},
      {"abs", {away}, [](auto&, const Vars& x) { return ad::Abs(x[0]); }},
      {"sum", {a}, [](auto&, const Vars& x) { return ad::Sum(x[0]); }},
      {"mean", {a}, [](auto&, const Vars& x) { return ad::Mean(x[0]); }},
      {"softmax_rows",
       {RandomMatrix(rng, 4, 6, -3.0, 3.0)},
       [](auto&, const Vars& x) { return ad::SoftmaxRows(x[0]); }},
      {"layer_norm", {tall, gain, bias}, [](auto&, const Vars& x) { return ad::LayerNorm(x[0], x[1], x[2]); }},
      {"concat_cols", {tall, wide}, [](auto&, const Vars& x) { return ad::ConcatCols<double>({x[0], x[1]}); }},
      {"concat_rows", {tall, flat}, [](auto&, const Vars& x) { return ad::ConcatRows<double>({x[0], x[1]}); }},
      {"slice_rows", {tall}, [](auto&, const Vars& x) { return ad::SliceRows(x[0], 1, 3); }},
      {"slice_cols", {tall}, [](auto&, const Vars& x) { return ad::SliceCols(x[0], 1, 2); }},
      {"dropout", {a}, [](auto&, const Vars& x) { return ad::Dropout(x[0], 0.3, true); }},
      {"frame", {RandomMatrix(rng, 23, 1)}, [](auto&, const Vars& x) { return ad::Frame(x[0], 8, 3); }},
      {"overlap_add",
       {RandomMatrix(rng, 6, 8)},
       [](auto&, const Vars& x) { return ad::OverlapAddFrames(x[0], 3, 21); }},
      {"lstm_forward", {pre, whh}, [](auto&, const Vars& x) { return ad::LstmRecurrence(x[0], x[1], false); }},
      {"lstm_reverse", {pre, whh}, [](auto&, const Vars& x) { return ad::LstmRecurrence(x[0], x[1], true); }},
      {"attention", {q, k, v}, [](auto&, const Vars& x) { return ad::Attention(x[0], x[1], x[2], 0.5); }},
  };
  double worst = 0.0;
  for (const Case& cs : cases) {
    const auto r = CheckGradients(cs.inputs, cs.build);
    worst = std::max(worst, r.max_error);
    o.Expect(r.checked > 0 && r.max_error <= 1e-4, cs.name + " err=" + Fmt(r.max_error));
  }
  o.detail << cases.size() << " primitives max_err=" << Fmt(worst) << "; ";

  // End to end: toy network plus PCM loss, every parameter entry.
  const ArnConfig cfg = ArnConfig::Toy();
  const auto params = InitParams<double>(cfg, 202);
  const Eigen::Index m = 64;
  const Eigen::MatrixXd s = RandomSignal(rng, m);
  const Eigen::MatrixXd y = s + RandomSignal(rng, m, 0.3);
  LossConfig loss;
  loss.fft_size = 32;
  loss.hop = 16;
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> inputs;
  std::size_t total = 0;
  for (const auto& [name, value] : params) {
    names.push_back(name);
    inputs.push_back(value);
    total += static_cast<std::size_t>(value.size());
  }
  const auto r = CheckGradients(inputs, [&](ad::Tape<double>& tape, const Vars& vars) {
    std::map<std::string, V> bound;
    for (std::size_t i = 0; i < names.size(); ++i) bound.emplace(names[i], vars[i]);
    ArnGraph<double> graph(&tape, std::move(bound));
    return PcmLoss<double>(ArnForward(tape.Constant(y), graph, cfg, /*train=*/true), s, y, loss);
  });
  o.detail << "toy_arn+pcm params=" << r.checked << " max_err=" << Fmt(r.max_error) << "; ";
  o.Expect(r.checked == total, "end-to-end check skipped parameters");
  o.Expect(r.max_error <= 1e-4, "end-to-end error at " + names[r.input]);
}

// ---------------------------------------------------------------------------

// One 0 dB pair: 1000 samples of synthetic speech in white noise. Dropout is
// off so the fit is a plain optimization of a fixed function.
void Overfit(Outcome& o) {
  TrainConfig cfg = TrainConfig::Desk();
  cfg.model.dropout = 0.0;
  const AudioBuffer s = SynthSpeechLike(11, 0.0625);
  const AudioBuffer n = SynthNoise(12, 0.0625, 16000, NoiseKind::kWhite);
  const MixturePair p = MixAtSnr(s, n, 0.0, cfg.target_rms);
  const std::vector<TrainingPair> batch{{p.clean, p.mixture}};
  auto params = InitParams<double>(cfg.model, 1);
  AdamState<double> adam;
  auto loss_now = [&] { return PcmLoss(Enhance(p.mixture, params, cfg.model), p.clean, p.mixture, cfg.loss); };
  const double initial = loss_now();
  for (int step = 0; step < 500; ++step) TrainStep(&params, &adam, batch, cfg, 1e-3, step);
  const double final_loss = loss_now();
  const double snr_in = SnrDb(p.clean, p.mixture);
  const double snr_out = SnrDb(p.clean, Enhance(p.mixture, params, cfg.model));
  o.detail << "loss " << Fmt(initial) << " -> " << Fmt(final_loss) << " (ratio " << Fmt(final_loss / initial)
           << ") snr " << Fmt(snr_in) << " -> " << Fmt(snr_out) << " dB; ";
  o.Expect(final_loss <= 0.1 * initial, "loss ratio above 0.1");
  o.Expect(snr_out - snr_in >= 5.0, "SNR gain below 5 dB");
}

// ---------------------------------------------------------------------------

// Desk-scale run shared by the direction check and the selection check.
struct DeskRun {
  TempDir dir{"acceptance_desk"};
  TrainConfig cfg;
  TrainResult result;
};

DeskRun& SharedDeskRun() {
  static std::optional<DeskRun> run;
  if (!run) {
    run.emplace();
    run->cfg = TrainConfig::Desk();
    run->cfg.seed = 7;
    std::ostringstream progress;
    run->result = Train(run->cfg, run->dir.path(), &progress);
  }
  return *run;
}

void DeskDirection(Outcome& o) {
  DeskRun& run = SharedDeskRun();
  const auto params = RoundToStored(run.result.params);
  const std::vector<double> grid = {-6, -3, 0, 3, 6, 9};
  const int count = 4;
  const double seconds = 1.5;
  std::vector<double> mix(grid.size(), 0.0), enh(grid.size(), 0.0);
  for (int i = 0; i < count; ++i) {
    const AudioBuffer s = SynthSpeechLike(DeriveSeed(99, i), seconds);
    const AudioBuffer n =
        SynthNoise(DeriveSeed(98, i), seconds, 16000, i % 2 ? NoiseKind::kWhite : NoiseKind::kPink);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const MixturePair p = MixAtSnr(s, n, grid[g], run.cfg.target_rms);
      mix[g] += Stoi(p.clean, p.mixture) / count;
      enh[g] += Stoi(p.clean, Enhance(p.mixture, params, run.cfg.model)) / count;
    }
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    o.detail << "snr " << grid[g] << ": mix " << Fmt(mix[g], 3) << " enh " << Fmt(enh[g], 3) << "; ";
    o.Expect(enh[g] >= mix[g], "enhanced below mixture at " + Fmt(grid[g]) + " dB");
    if (g > 0) o.Expect(mix[g] > mix[g - 1], "mixture STOI not increasing at " + Fmt(grid[g]) + " dB");
  }
}

// ---------------------------------------------------------------------------

void Schedule(Outcome& o) {
  const TrainConfig cfg = TrainConfig::Full();
  bool flat = true;
  for (int e = 1; e <= 33; ++e) flat = flat && LearningRate(e, cfg) == 2e-4;
  const double last = LearningRate(100, cfg);
  const double e34 = LearningRate(34, cfg);
  const double closed = 2e-4 * std::pow(0.1, 1.0 / 67.0);
  o.detail << "lr(100)=" << Fmt(last, 17) << " lr(34)=" << Fmt(e34, 17) << " closed=" << Fmt(closed, 17) << "; ";
  o.Expect(flat, "epochs 1..33 not exactly 2e-4");
  o.Expect(std::abs(last - 2e-5) <= 1e-12 * 2e-5, "lr(100) off");
  o.Expect(std::abs(e34 - closed) <= 1e-12 * closed, "lr(34) off the closed form");
}

// ---------------------------------------------------------------------------

double EnergyRatioDb(const Eigen::VectorXd& s, const Eigen::VectorXd& n) {
  return 10.0 * std::log10(s.squaredNorm() / n.squaredNorm());
}

void Mixer(Outcome& o) {
  std::mt19937_64 rng(606);
  TempDir dir("acceptance_mixer");
  double pre = 0.0, post = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const double seconds = Uniform(rng, 0.5, 2.0);
    const AudioBuffer s = SynthSpeechLike(DeriveSeed(606, trial), seconds);
    const AudioBuffer n = SynthNoise(DeriveSeed(607, trial), seconds, 16000,
                                     trial % 2 ? NoiseKind::kWhite : NoiseKind::kPink);
    const double snr = SampleSnrDb(rng);
    const MixturePair p = MixAtSnr(s, n, snr, 0.05);
    pre = std::max(pre, std::abs(EnergyRatioDb(p.clean.samples, p.noise.samples) - snr));
    WriteWav(p.clean, dir / "s.wav");
    WriteWav(p.noise, dir / "n.wav");
    const double back = EnergyRatioDb(ReadWav(dir / "s.wav").samples, ReadWav(dir / "n.wav").samples);
    post = std::max(post, std::abs(back - snr));
  }
  const int draws = 100000;
  int low = 0;
  for (int i = 0; i < draws; ++i) low += SampleSnrDb(rng) < 0.0;
  const double frac = static_cast<double>(low) / draws;
  o.detail << "pre_err=" << Fmt(pre) << " dB wav_err=" << Fmt(post) << " dB low_range_frac=" << Fmt(frac) << "; ";
  o.Expect(pre <= 1e-9, "pre-quantization SNR error above 1e-9 dB");
  o.Expect(post <= 0.01, "WAV round-trip SNR error above 0.01 dB");
  o.Expect(std::abs(frac - 0.5) <= 0.01, "range frequency outside 0.5 +- 0.01");
}

// ---------------------------------------------------------------------------

void Metrics(Outcome& o) {
  double identity = 0.0, scale = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const AudioBuffer s = SynthSpeechLike(seed, 3.0);
    identity = std::max(identity, std::abs(Stoi(s, s) - 1.0));
    const AudioBuffer y = MixAtSnr(s, SynthNoise(seed + 10, 3.0), 0.0, 0.05).mixture;
    const double base = Stoi(s, y);
    for (double k : {0.01, 3.7, 250.0}) {
      scale = std::max(scale, std::abs(Stoi(s, AudioBuffer(k * y.samples, 16000)) - base));
      scale = std::max(scale, std::abs(Stoi(AudioBuffer(k * s.samples, 16000), y) - base));
    }
  }
  const auto seqs = arnse::testing::AllSequences("abc", 6);
  std::vector<std::vector<std::string>> words;
  for (const auto& sq : seqs) words.push_back(arnse::testing::ToWords(sq));
  long pairs = 0, mismatches = 0;
  for (std::size_t r = 0; r < seqs.size(); ++r) {
    if (seqs[r].empty()) continue;
    for (std::size_t h = 0; h < seqs.size(); ++h) {
      const int oracle = arnse::testing::MemoEdits(seqs[r], seqs[h]);
      const double expected = static_cast<double>(oracle) / static_cast<double>(seqs[r].size());
      mismatches += Wer(words[r], words[h]) != expected;
      ++pairs;
    }
  }
  o.detail << "stoi_identity_err=" << Fmt(identity) << " scale_err=" << Fmt(scale) << " wer_pairs=" << pairs
           << " mismatches=" << mismatches << "; ";
  o.Expect(identity <= 1e-9, "stoi(x, x) off 1");
  o.Expect(scale <= 1e-9, "STOI not scale invariant");
  o.Expect(mismatches == 0, "WER disagrees with the alignment oracle");
}

// ---------------------------------------------------------------------------

std::string Quote(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

void Selection(Outcome& o) {
  DeskRun& run = SharedDeskRun();
  const auto dir = run.dir.path();
  const auto log = LoadLog(dir / kLogFile);
  const int pcm_epoch = SelectCheckpoint(log, Criterion::kMinPcm);
  const int stoi_epoch = SelectCheckpoint(log, Criterion::kMaxStoi);
  o.detail << "min-pcm epoch=" << pcm_epoch << " max-stoi epoch=" << stoi_epoch << "; ";
  o.Expect(pcm_epoch != stoi_epoch, "both criteria chose the same epoch");
  o.Expect(arnse::testing::ReadBytes(dir / kBestPcmFile) != arnse::testing::ReadBytes(dir / kBestStoiFile),
           "best checkpoints are identical");

  const auto input = ListWavs(dir / kValidationDir / "noisy").front();
  for (Criterion c : {Criterion::kMinPcm, Criterion::kMaxStoi}) {
    const std::string name = CriterionName(c);
    const int expected = c == Criterion::kMinPcm ? pcm_epoch : stoi_epoch;
    const Checkpoint ckpt = LoadCheckpoint(dir / CheckpointFile(c));
    o.Expect(static_cast<int>(ckpt.meta.epoch) == expected, name + " footer epoch mismatch");
    const auto out = dir / ("enh_" + name + ".wav");
    const auto r = arnse::testing::RunCli("enhance --checkpoint " + Quote(dir) + " --select " + name + " --in " +
                                          Quote(input) + " --out " + Quote(out));
    o.Expect(r.exit_code == 0, name + " enhance exit " + std::to_string(r.exit_code));
    o.Expect(r.out.find("epoch=" + std::to_string(expected)) != std::string::npos,
             name + " enhance reported the wrong epoch");
    const AudioBuffer want = QuantizePcm16(
        Enhance(ReadWav(input), FromFloatParams<double>(ckpt.params), ckpt.config));
    o.Expect(std::filesystem::exists(out) && ReadWav(out).samples == want.samples,
             name + " enhance output differs from its checkpoint");
  }
}

// ---------------------------------------------------------------------------

void RoundTrips(Outcome& o) {
  TempDir dir("acceptance_files");
  Checkpoint c;
  c.config = ArnConfig::Toy();
  c.params = ToFloatParams(InitParams<double>(c.config, 909));
  c.meta = {5, 0.125, 0.75};
  SaveCheckpoint(c, dir / "a.arnc");
  const Checkpoint back = LoadCheckpoint(dir / "a.arnc");
  SaveCheckpoint(back, dir / "b.arnc");
  ArnConfig stored = c.config;
  stored.dropout = static_cast<float>(stored.dropout);  // kept as f32 on disk
  o.Expect(back.params == c.params && back.meta.epoch == 5 && back.meta.val_pcm == 0.125 &&
               back.meta.val_stoi == 0.75 && back.config == stored,
           "checkpoint contents changed");
  o.Expect(arnse::testing::ReadBytes(dir / "a.arnc") == arnse::testing::ReadBytes(dir / "b.arnc"),
           "checkpoint bytes changed on rewrite");

  double worst_mean = 0.0;
  Eigen::Index width = 0;
  bool files_ok = true;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const FeatureMatrix f = LogMelFeatures(SynthSpeechLike(DeriveSeed(909, seed), 2.0));
    width = f.values.cols();
    worst_mean = std::max(worst_mean, f.values.leftCols(80).colwise().mean().cwiseAbs().maxCoeff());
    WriteFeatures(f.values, dir / "a.feat");
    const Eigen::MatrixXf loaded = ReadFeatures(dir / "a.feat");
    WriteFeatures(loaded.cast<double>(), dir / "b.feat");
    files_ok = files_ok && loaded == f.values.cast<float>() &&
               arnse::testing::ReadBytes(dir / "a.feat") == arnse::testing::ReadBytes(dir / "b.feat");
  }
  o.detail << "feature_width=" << width << " static_mean_max=" << Fmt(worst_mean) << "; ";
  o.Expect(files_ok, "feature file round trip not bit-exact");
  o.Expect(width == 240, "feature width not 240");
  o.Expect(worst_mean <= 1e-10, "static features not zero mean");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Check> all = {
      {1, "reconstruction identities", 10, Reconstruction},
      {2, "gradient checks", 120, Gradients},
      {3, "toy overfit", 300, Overfit},
      {4, "desk-scale direction", 900, DeskDirection},
      {5, "learning-rate schedule", 0, Schedule},
      {6, "mixer SNR accuracy", 0, Mixer},
      {7, "metric oracles", 0, Metrics},
      {8, "dual-criterion selection", 0, Selection},
      {9, "file round trips and features", 0, RoundTrips},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const Check& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.Expect(false, std::string("exception: ") + e.what());
    }
    const double elapsed = Seconds(start);
    o.Expect(c.budget_s == 0 || elapsed < c.budget_s, "over the " + Fmt(c.budget_s) + " s budget");
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ") " << o.detail.str()
              << "time=" << Fmt(elapsed, 3) << " s" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
