// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "arnse/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "arnse/dsp.hpp"
#include "arnse/metrics.hpp"
#include "arnse/mixer.hpp"
#include "arnse/random.hpp"

namespace arnse {

// ---------------------------------------------------------------------------
// Configuration.
// ---------------------------------------------------------------------------

void TrainConfig::Validate() const {
  model.Validate();
  loss.Validate();
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (lr_fixed_epochs < 0 || lr_fixed_epochs >= epochs) {
    throw ConfigError("lr_fixed_epochs must be in [0, epochs)");
  }
  if (!(lr_init > 0.0 && lr_final > 0.0)) throw ConfigError("learning rates must be positive");
  if (utterances_per_epoch <= 0 || batch_size <= 0) {
    throw ConfigError("utterances_per_epoch and batch_size must be positive");
  }
  if (utterance_len < model.frame_len) throw ConfigError("utterance_len shorter than one frame");
  if (!(target_rms > 0.0)) throw ConfigError("target_rms must be positive");
  if (validation_count <= 0) throw ConfigError("validation_count must be positive");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be non-negative");
  if (clean_dir.empty() != noise_dir.empty()) {
    throw ConfigError("clean_dir and noise_dir must be given together");
  }
  if (validation_clean_dir.empty() != validation_noise_dir.empty()) {
    throw ConfigError("validation_clean_dir and validation_noise_dir must be given together");
  }
}

TrainConfig TrainConfig::Full() { return TrainConfig{}; }

TrainConfig TrainConfig::Desk() {
  TrainConfig cfg;
  cfg.model = ArnConfig::Toy();
  cfg.epochs = 10;
  cfg.lr_fixed_epochs = 4;
  cfg.lr_init = 2e-3;
  cfg.lr_final = 2e-4;
  cfg.batch_size = 4;
  cfg.utterance_len = 2000;
  cfg.utterances_per_epoch = 400;
  cfg.validation_count = 4;
  cfg.validation_seconds = 1.0;
  cfg.synthetic_seconds = 60.0;
  cfg.synthetic_utterance_seconds = 4.0;
  return cfg;
}

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> ParseKeyValues(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    kv[Trim(line.substr(0, eq))] = Trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace

TrainConfig TrainConfig::FromText(const std::string& text) {
  auto kv = ParseKeyValues(text);
  TrainConfig cfg;
  if (auto it = kv.find("preset"); it != kv.end()) {
    if (it->second == "full") cfg = Full();
    else if (it->second == "desk") cfg = Desk();
    else throw ConfigError("unknown preset " + it->second);
    kv.erase(it);
  }
  auto as_int = [](const std::string& v) { return std::stoi(v); };
  auto as_double = [](const std::string& v) { return std::stod(v); };
  const std::map<std::string, std::function<void(const std::string&)>> setters = {
      {"epochs", [&](const std::string& v) { cfg.epochs = as_int(v); }},
      {"utterances_per_epoch", [&](const std::string& v) { cfg.utterances_per_epoch = as_int(v); }},
      {"batch_size", [&](const std::string& v) { cfg.batch_size = as_int(v); }},
      {"utterance_len", [&](const std::string& v) { cfg.utterance_len = as_int(v); }},
      {"lr_init", [&](const std::string& v) { cfg.lr_init = as_double(v); }},
      {"lr_final", [&](const std::string& v) { cfg.lr_final = as_double(v); }},
      {"lr_fixed_epochs", [&](const std::string& v) { cfg.lr_fixed_epochs = as_int(v); }},
      {"clip_norm", [&](const std::string& v) { cfg.clip_norm = as_double(v); }},
      {"seed", [&](const std::string& v) { cfg.seed = std::stoull(v); }},
      {"adam_beta1", [&](const std::string& v) { cfg.adam.beta1 = as_double(v); }},
      {"adam_beta2", [&](const std::string& v) { cfg.adam.beta2 = as_double(v); }},
      {"adam_eps", [&](const std::string& v) { cfg.adam.eps = as_double(v); }},
      {"target_rms", [&](const std::string& v) { cfg.target_rms = as_double(v); }},
      {"validation_snr_db", [&](const std::string& v) { cfg.validation_snr_db = as_double(v); }},
      {"validation_count", [&](const std::string& v) { cfg.validation_count = as_int(v); }},
      {"validation_seconds", [&](const std::string& v) { cfg.validation_seconds = as_double(v); }},
      {"clean_dir", [&](const std::string& v) { cfg.clean_dir = v; }},
      {"noise_dir", [&](const std::string& v) { cfg.noise_dir = v; }},
      {"validation_clean_dir", [&](const std::string& v) { cfg.validation_clean_dir = v; }},
      {"validation_noise_dir", [&](const std::string& v) { cfg.validation_noise_dir = v; }},
      {"synthetic_seconds", [&](const std::string& v) { cfg.synthetic_seconds = as_double(v); }},
      {"synthetic_utterance_seconds",
       [&](const std::string& v) { cfg.synthetic_utterance_seconds = as_double(v); }},
      {"model_frame_len", [&](const std::string& v) { cfg.model.frame_len = as_int(v); }},
      {"model_hop", [&](const std::string& v) { cfg.model.hop = as_int(v); }},
      {"model_latent", [&](const std::string& v) { cfg.model.latent = as_int(v); }},
      {"model_blocks", [&](const std::string& v) { cfg.model.num_blocks = as_int(v); }},
      {"model_heads", [&](const std::string& v) { cfg.model.heads = as_int(v); }},
      {"model_ffn_expansion", [&](const std::string& v) { cfg.model.ffn_expansion = as_int(v); }},
      {"model_dropout", [&](const std::string& v) { cfg.model.dropout = as_double(v); }},
      {"loss_fft_size", [&](const std::string& v) { cfg.loss.fft_size = as_int(v); }},
      {"loss_hop", [&](const std::string& v) { cfg.loss.hop = as_int(v); }},
      {"loss_kind",
       [&](const std::string& v) {
         if (v == "pcm") cfg.loss.kind = LossKind::kPcm;
         else if (v == "magnitude") cfg.loss.kind = LossKind::kMagnitude;
         else throw ConfigError("unknown loss_kind " + v);
       }},
      {"loss_reduce",
       [&](const std::string& v) {
         if (v == "mean") cfg.loss.mean_reduce = true;
         else if (v == "sum") cfg.loss.mean_reduce = false;
         else throw ConfigError("unknown loss_reduce " + v);
       }},
      {"keep_epoch_checkpoints",
       [&](const std::string& v) { cfg.keep_epoch_checkpoints = as_int(v) != 0; }},
  };
  for (const auto& [key, value] : kv) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key " + key);
    try {
      it->second(value);
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ConfigError*>(&e) != nullptr) throw;
      throw ConfigError("bad value for " + key + ": " + value);
    }
  }
  cfg.Validate();
  return cfg;
}

TrainConfig TrainConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return FromText(ss.str());
}

std::string TrainConfig::ToText() const {
  std::ostringstream out;
  out.precision(17);
  out << "epochs = " << epochs << "\n"
      << "utterances_per_epoch = " << utterances_per_epoch << "\n"
      << "batch_size = " << batch_size << "\n"
      << "utterance_len = " << utterance_len << "\n"
      << "lr_init = " << lr_init << "\n"
      << "lr_final = " << lr_final << "\n"
      << "lr_fixed_epochs = " << lr_fixed_epochs << "\n"
      << "clip_norm = " << clip_norm << "\n"
      << "seed = " << seed << "\n"
      << "adam_beta1 = " << adam.beta1 << "\n"
      << "adam_beta2 = " << adam.beta2 << "\n"
      << "adam_eps = " << adam.eps << "\n"
      << "target_rms = " << target_rms << "\n"
      << "validation_snr_db = " << validation_snr_db << "\n"
      << "validation_count = " << validation_count << "\n"
      << "validation_seconds = " << validation_seconds << "\n";
  if (!clean_dir.empty()) out << "clean_dir = " << clean_dir << "\nnoise_dir = " << noise_dir << "\n";
  if (!validation_clean_dir.empty()) {
    out << "validation_clean_dir = " << validation_clean_dir << "\n"
        << "validation_noise_dir = " << validation_noise_dir << "\n";
  }
  out << "synthetic_seconds = " << synthetic_seconds << "\n"
      << "synthetic_utterance_seconds = " << synthetic_utterance_seconds << "\n"
      << "model_frame_len = " << model.frame_len << "\n"
      << "model_hop = " << model.hop << "\n"
      << "model_latent = " << model.latent << "\n"
      << "model_blocks = " << model.num_blocks << "\n"
      << "model_heads = " << model.heads << "\n"
      << "model_ffn_expansion = " << model.ffn_expansion << "\n"
      << "model_dropout = " << model.dropout << "\n"
      << "loss_fft_size = " << loss.fft_size << "\n"
      << "loss_hop = " << loss.hop << "\n"
      << "loss_kind = " << (loss.kind == LossKind::kPcm ? "pcm" : "magnitude") << "\n"
      << "loss_reduce = " << (loss.mean_reduce ? "mean" : "sum") << "\n"
      << "keep_epoch_checkpoints = " << (keep_epoch_checkpoints ? 1 : 0) << "\n";
  return out.str();
}

double LearningRate(int epoch, const TrainConfig& cfg) {
  if (epoch < 1 || epoch > cfg.epochs) throw ConfigError("epoch out of range");
  if (epoch <= cfg.lr_fixed_epochs) return cfg.lr_init;
  const double span = static_cast<double>(cfg.epochs - cfg.lr_fixed_epochs);
  if (epoch == cfg.epochs) return cfg.lr_final;
  const double progress = static_cast<double>(epoch - cfg.lr_fixed_epochs) / span;
  return cfg.lr_init * std::pow(cfg.lr_final / cfg.lr_init, progress);
}

// ---------------------------------------------------------------------------
// Log and selection.
// ---------------------------------------------------------------------------

std::string FormatRecord(const EpochRecord& rec) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch=" << rec.epoch << " train_loss=" << rec.train_loss << " val_pcm=" << rec.val_pcm
      << " val_stoi=" << rec.val_stoi << " lr=" << rec.lr << " wall_s=" << rec.wall_s;
  return out.str();
}

EpochRecord ParseRecord(const std::string& line) {
  EpochRecord rec;
  std::istringstream in(line);
  int seen = 0;
  try {
    for (std::string kv; in >> kv;) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw DataError("bad log field " + kv);
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "epoch") rec.epoch = std::stoi(value);
      else if (key == "train_loss") rec.train_loss = std::stod(value);
      else if (key == "val_pcm") rec.val_pcm = std::stod(value);
      else if (key == "val_stoi") rec.val_stoi = std::stod(value);
      else if (key == "lr") rec.lr = std::stod(value);
      else if (key == "wall_s") rec.wall_s = std::stod(value);
      else throw DataError("unknown log field " + key);
      ++seen;
    }
  } catch (const std::logic_error&) {
    throw DataError("malformed log line: " + line);
  }
  if (seen != 6) throw DataError("incomplete log line: " + line);
  return rec;
}

std::vector<EpochRecord> LoadLog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open log " + path.string());
  std::vector<EpochRecord> log;
  for (std::string line; std::getline(in, line);) {
    line = Trim(line);
    if (line.empty() || line[0] == '#') continue;
    log.push_back(ParseRecord(line));
  }
  return log;
}

Criterion ParseCriterion(const std::string& name) {
  if (name == "min-pcm" || name == "min_pcm") return Criterion::kMinPcm;
  if (name == "max-stoi" || name == "max_stoi") return Criterion::kMaxStoi;
  throw ConfigError("unknown selection criterion " + name);
}

std::string CriterionName(Criterion c) { return c == Criterion::kMinPcm ? "min-pcm" : "max-stoi"; }

std::string CheckpointFile(Criterion c) {
  return c == Criterion::kMinPcm ? kBestPcmFile : kBestStoiFile;
}

int SelectCheckpoint(const std::vector<EpochRecord>& log, Criterion criterion) {
  if (log.empty()) throw DataError("cannot select from an empty log");
  const EpochRecord* best = &log.front();
  for (const EpochRecord& rec : log) {
    const bool better = criterion == Criterion::kMinPcm ? rec.val_pcm <= best->val_pcm
                                                        : rec.val_stoi >= best->val_stoi;
    if (better) best = &rec;
  }
  return best->epoch;
}

// ---------------------------------------------------------------------------
// Data.
// ---------------------------------------------------------------------------

CorpusSource CorpusSource::FromDirs(const std::string& clean_dir, const std::string& noise_dir) {
  CorpusSource src;
  for (const auto& f : ListWavs(clean_dir)) src.clean.push_back(ReadWav(f));
  for (const auto& f : ListWavs(noise_dir)) src.noise.push_back(ReadWav(f));
  if (src.clean.empty() || src.noise.empty()) throw DataError("corpus directories are empty");
  return src;
}

CorpusSource CorpusSource::Synthetic(std::uint64_t seed, double total_seconds,
                                     double utterance_seconds, int sample_rate) {
  if (!(total_seconds > 0.0 && utterance_seconds > 0.0)) {
    throw ConfigError("synthetic corpus durations must be positive");
  }
  CorpusSource src;
  double remaining = total_seconds;
  for (int i = 0; remaining > 1e-9; ++i) {
    const double dur = std::min(utterance_seconds, remaining);
    src.clean.push_back(SynthSpeechLike(DeriveSeed(seed, 1000 + i), dur, sample_rate));
    remaining -= dur;
  }
  for (int j = 0; j < 4; ++j) {
    const NoiseKind kind = j % 2 == 0 ? NoiseKind::kWhite : NoiseKind::kPink;
    src.noise.push_back(SynthNoise(DeriveSeed(seed, 5000 + j), 10.0, sample_rate, kind));
  }
  return src;
}

TrainingPair DrawTrainingPair(const CorpusSource& corpus, int utterance_len, double target_rms,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const AudioBuffer& utt = corpus.clean[UniformIndex(rng, corpus.clean.size())];
    Eigen::VectorXd segment = Eigen::VectorXd::Zero(utterance_len);
    if (utt.size() >= utterance_len) {
      const auto offset = UniformIndex(rng, static_cast<std::uint64_t>(utt.size() - utterance_len + 1));
      segment = utt.samples.segment(static_cast<Eigen::Index>(offset), utterance_len);
    } else {
      segment.head(utt.size()) = utt.samples;
    }
    const AudioBuffer& noise_src = corpus.noise[UniformIndex(rng, corpus.noise.size())];
    const Eigen::Index offset = SampleNoiseOffset(rng, noise_src.size(), utterance_len, true);
    const double snr = SampleSnrDb(rng);
    if (Rms(segment) < 1e-4) continue;  // landed in a pause
    const AudioBuffer noise = CropNoise(noise_src, offset, utterance_len, true);
    if (Rms(noise.samples) == 0.0) continue;
    MixturePair pair = MixAtSnr(AudioBuffer(segment, utt.sample_rate), noise, snr, target_rms);
    return {std::move(pair.clean), std::move(pair.mixture)};
  }
  throw DataError("could not draw a non-silent training segment");
}

std::vector<TrainingPair> BuildValidationSet(const TrainConfig& cfg) {
  std::vector<AudioBuffer> clean;
  AudioBuffer noise;
  const std::uint64_t base = DeriveSeed(cfg.seed, 0x7a11d);
  if (!cfg.validation_clean_dir.empty()) {
    auto files = ListWavs(cfg.validation_clean_dir);
    if (files.size() > static_cast<std::size_t>(cfg.validation_count)) files.resize(cfg.validation_count);
    for (const auto& f : files) clean.push_back(ReadWav(f));
    const auto noise_files = ListWavs(cfg.validation_noise_dir);
    if (clean.empty() || noise_files.empty()) throw DataError("validation directories are empty");
    noise = ReadWav(noise_files.front());
  } else {
    for (int i = 0; i < cfg.validation_count; ++i) {
      clean.push_back(SynthSpeechLike(DeriveSeed(base, i), cfg.validation_seconds));
    }
    noise = SynthNoise(DeriveSeed(base, 9999), 10.0, 16000, NoiseKind::kPink);
  }
  std::vector<TrainingPair> set;
  std::mt19937_64 rng(DeriveSeed(base, 4242));
  for (const AudioBuffer& s : clean) {
    const Eigen::Index offset = SampleNoiseOffset(rng, noise.size(), s.size(), true);
    const AudioBuffer n = CropNoise(noise, offset, s.size(), true);
    MixturePair pair = MixAtSnr(s, n, cfg.validation_snr_db, cfg.target_rms);
    set.push_back({QuantizePcm16(pair.clean), QuantizePcm16(pair.mixture)});
  }
  return set;
}

ValidationScores Validate(const std::vector<TrainingPair>& set, const ParamSet<double>& params,
                          const ArnConfig& model, const LossConfig& loss) {
  if (set.empty()) throw DataError("empty validation set");
  ValidationScores scores;
  for (const TrainingPair& pair : set) {
    const AudioBuffer enhanced = Enhance(pair.noisy, params, model);
    scores.pcm += PcmLoss(enhanced, pair.clean, pair.noisy, loss);
    scores.stoi += Stoi(pair.clean, QuantizePcm16(enhanced));
  }
  scores.pcm /= static_cast<double>(set.size());
  scores.stoi /= static_cast<double>(set.size());
  return scores;
}

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------

double TrainStep(ParamSet<double>* params, AdamState<double>* adam,
                 const std::vector<TrainingPair>& batch, const TrainConfig& cfg, double lr,
                 std::uint64_t dropout_seed) {
  if (batch.empty()) throw DataError("empty batch");
  const DftBasis<double> basis(cfg.loss);
  GradSet<double> total;
  double loss_sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    ad::Tape<double> tape(/*record=*/true, DeriveSeed(dropout_seed, b));
    ArnGraph<double> graph(&tape, *params);
    auto noisy = tape.Constant(batch[b].noisy.samples);
    auto estimate = ArnForward(noisy, graph, cfg.model, /*train=*/true);
    auto loss = PcmLoss<double>(estimate, batch[b].clean.samples, batch[b].noisy.samples,
                                cfg.loss, basis);
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value)) throw NumericError("non-finite training loss");
    loss_sum += value;
    tape.Backward(loss);
    GradSet<double> grads = graph.Grads();
    if (total.empty()) {
      total = std::move(grads);
    } else {
      for (auto& [name, g] : grads) total[name] += g;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& [name, g] : total) g *= inv;
  if (cfg.clip_norm > 0.0) ClipByGlobalNorm(&total, cfg.clip_norm);
  AdamStep(params, total, adam, lr, cfg.adam);
  return loss_sum * inv;
}

TrainResult Train(const TrainConfig& cfg, const std::filesystem::path& out_dir,
                  std::ostream* progress) {
  cfg.Validate();
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream cfg_out(out_dir / "train_config.txt", std::ios::trunc);
    cfg_out << cfg.ToText();
  }

  const CorpusSource corpus =
      cfg.clean_dir.empty()
          ? CorpusSource::Synthetic(cfg.seed, cfg.synthetic_seconds, cfg.synthetic_utterance_seconds)
          : CorpusSource::FromDirs(cfg.clean_dir, cfg.noise_dir);
  const std::vector<TrainingPair> validation = BuildValidationSet(cfg);
  const auto val_dir = out_dir / kValidationDir;
  std::filesystem::create_directories(val_dir / "clean");
  std::filesystem::create_directories(val_dir / "noisy");
  for (std::size_t i = 0; i < validation.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "val_%04zu.wav", i);
    WriteWav(validation[i].clean, val_dir / "clean" / name);
    WriteWav(validation[i].noisy, val_dir / "noisy" / name);
  }

  TrainResult result;
  result.params = InitParams<double>(cfg.model, cfg.seed);
  AdamState<double> adam;
  std::ofstream log(out_dir / kLogFile, std::ios::trunc);
  if (!log) throw DataError("cannot write training log");

  const int steps = (cfg.utterances_per_epoch + cfg.batch_size - 1) / cfg.batch_size;
  std::uint64_t item = 0;
  std::uint64_t step_index = 0;
  double best_pcm = 0.0, best_stoi = 0.0;
  const std::uint64_t data_seed = DeriveSeed(cfg.seed, 0xda7a);
  const std::uint64_t dropout_seed = DeriveSeed(cfg.seed, 0xd209);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double lr = LearningRate(epoch, cfg);
    double loss_sum = 0.0;
    for (int s = 0; s < steps; ++s, ++step_index) {
      const int remaining = cfg.utterances_per_epoch - s * cfg.batch_size;
      const int size = std::min(cfg.batch_size, remaining);
      std::vector<TrainingPair> batch;
      batch.reserve(size);
      for (int b = 0; b < size; ++b, ++item) {
        batch.push_back(DrawTrainingPair(corpus, cfg.utterance_len, cfg.target_rms,
                                         DeriveSeed(data_seed, item)));
      }
      loss_sum += TrainStep(&result.params, &adam, batch, cfg, lr,
                            DeriveSeed(dropout_seed, step_index));
    }

    const ParamSet<double> stored = RoundToStored(result.params);
    const ValidationScores scores = Validate(validation, stored, cfg.model, cfg.loss);
    if (!std::isfinite(scores.pcm) || !std::isfinite(scores.stoi)) {
      throw NumericError("non-finite validation score at epoch " + std::to_string(epoch));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / steps;
    rec.val_pcm = scores.pcm;
    rec.val_stoi = scores.stoi;
    rec.lr = lr;
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    Checkpoint ckpt{cfg.model, ToFloatParams(result.params),
                    {static_cast<std::uint32_t>(epoch), scores.pcm, scores.stoi}};
    SaveCheckpoint(ckpt, out_dir / kLastFile);
    if (epoch == 1 || scores.pcm <= best_pcm) {
      best_pcm = scores.pcm;
      SaveCheckpoint(ckpt, out_dir / kBestPcmFile);
    }
    if (epoch == 1 || scores.stoi >= best_stoi) {
      best_stoi = scores.stoi;
      SaveCheckpoint(ckpt, out_dir / kBestStoiFile);
    }
    if (cfg.keep_epoch_checkpoints) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.arnc", epoch);
      SaveCheckpoint(ckpt, out_dir / name);
    }
    log << FormatRecord(rec) << "\n";
    log.flush();
    if (progress != nullptr) *progress << FormatRecord(rec) << std::endl;
    result.log.push_back(rec);
  }
  return result;
}

}  // namespace arnse
