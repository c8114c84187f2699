// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ARNSE_TRAINER_HPP_
#define ARNSE_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "arnse/adam.hpp"
#include "arnse/arn.hpp"
#include "arnse/audio_io.hpp"
#include "arnse/checkpoint.hpp"
#include "arnse/objective.hpp"

namespace arnse {

/**
 * Training configuration. The plain-text form is one `key = value` per line,
 * `#` starts a comment, and an optional first key `preset = full|desk`
 * selects the defaults the remaining keys override. Recognized keys:
 *
 *   epochs utterances_per_epoch batch_size utterance_len
 *   lr_init lr_final lr_fixed_epochs clip_norm seed
 *   adam_beta1 adam_beta2 adam_eps
 *   target_rms validation_snr_db validation_count validation_seconds
 *   clean_dir noise_dir validation_clean_dir validation_noise_dir
 *   synthetic_seconds synthetic_utterance_seconds
 *   model_frame_len model_hop model_latent model_blocks model_heads
 *   model_ffn_expansion model_dropout
 *   loss_fft_size loss_hop loss_kind (pcm|magnitude) loss_reduce (mean|sum)
 *   keep_epoch_checkpoints
 *
 * With empty clean_dir/noise_dir the corpus is synthesized: speech-like
 * utterances totalling synthetic_seconds, and white plus pink noise.
 */
struct TrainConfig {
  int epochs = 100;
  int utterances_per_epoch = 157036;
  int batch_size = 16;
  int utterance_len = 64000;
  double lr_init = 2e-4;
  double lr_final = 2e-5;
  int lr_fixed_epochs = 33;
  double clip_norm = 0.0;  // 0 disables clipping
  std::uint64_t seed = 0;
  AdamConfig adam;

  double target_rms = 0.05;
  double validation_snr_db = -6.0;
  int validation_count = 409;
  double validation_seconds = 4.0;  // synthetic validation utterances only

  std::string clean_dir;
  std::string noise_dir;
  std::string validation_clean_dir;
  std::string validation_noise_dir;
  double synthetic_seconds = 60.0;
  double synthetic_utterance_seconds = 4.0;

  ArnConfig model;
  LossConfig loss;
  bool keep_epoch_checkpoints = false;

  void Validate() const;

  static TrainConfig Full();
  // Toy network on a 60 s synthetic corpus; minutes on one CPU core.
  static TrainConfig Desk();

  static TrainConfig FromText(const std::string& text);
  static TrainConfig Load(const std::filesystem::path& path);
  std::string ToText() const;
};

// Constant for the first lr_fixed_epochs epochs, then geometric decay that
// lands exactly on lr_final at the last epoch. Epochs are 1-based.
double LearningRate(int epoch, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_pcm = 0.0;
  double val_stoi = 0.0;
  double lr = 0.0;
  double wall_s = 0.0;

  // Equality on everything except wall-clock time.
  bool SameResults(const EpochRecord& o) const {
    return epoch == o.epoch && train_loss == o.train_loss && val_pcm == o.val_pcm &&
           val_stoi == o.val_stoi && lr == o.lr;
  }
};

// One line per epoch:
//   epoch=3 train_loss=... val_pcm=... val_stoi=... lr=... wall_s=...
std::string FormatRecord(const EpochRecord& rec);
EpochRecord ParseRecord(const std::string& line);
std::vector<EpochRecord> LoadLog(const std::filesystem::path& path);

enum class Criterion { kMinPcm, kMaxStoi };
Criterion ParseCriterion(const std::string& name);
std::string CriterionName(Criterion c);

// Epoch with the lowest validation PCM loss or highest validation STOI; ties
// go to the later epoch.
int SelectCheckpoint(const std::vector<EpochRecord>& log, Criterion criterion);

// File names inside a training output directory.
inline constexpr const char* kLogFile = "train_log.txt";
inline constexpr const char* kBestPcmFile = "best_pcm.arnc";
inline constexpr const char* kBestStoiFile = "best_stoi.arnc";
inline constexpr const char* kLastFile = "last.arnc";
inline constexpr const char* kValidationDir = "validation";
std::string CheckpointFile(Criterion c);

struct TrainingPair {
  AudioBuffer clean;
  AudioBuffer noisy;
};

// Clean/noise material the trainer mixes from.
struct CorpusSource {
  std::vector<AudioBuffer> clean;
  std::vector<AudioBuffer> noise;

  static CorpusSource FromDirs(const std::string& clean_dir, const std::string& noise_dir);
  static CorpusSource Synthetic(std::uint64_t seed, double total_seconds, double utterance_seconds,
                                int sample_rate = 16000);
};

// Fresh batch item: random clean segment, random noise segment, SNR from the
// two-range policy. Deterministic in `seed`.
TrainingPair DrawTrainingPair(const CorpusSource& corpus, int utterance_len, double target_rms,
                              std::uint64_t seed);

// Fixed validation set mixed at one SNR and quantized to 16-bit, i.e. exactly
// what the WAV files under <out>/validation contain.
std::vector<TrainingPair> BuildValidationSet(const TrainConfig& cfg);

struct ValidationScores {
  double pcm = 0.0;
  double stoi = 0.0;
};

// Mean PCM loss and mean STOI of the enhanced validation set. STOI is taken on
// the 16-bit quantized enhancement, matching what `enhance` writes.
ValidationScores Validate(const std::vector<TrainingPair>& set, const ParamSet<double>& params,
                          const ArnConfig& model, const LossConfig& loss);

struct TrainResult {
  std::vector<EpochRecord> log;
  ParamSet<double> params;
};

// Runs the full schedule, writing the log, validation set and checkpoints into
// `out_dir`. A non-finite loss or gradient throws NumericError after the
// checkpoints of the last completed epoch are on disk.
TrainResult Train(const TrainConfig& cfg, const std::filesystem::path& out_dir,
                  std::ostream* progress = nullptr);

// One optimizer step on a batch; returns the mean loss.
double TrainStep(ParamSet<double>* params, AdamState<double>* adam,
                 const std::vector<TrainingPair>& batch, const TrainConfig& cfg, double lr,
                 std::uint64_t dropout_seed);

}  // namespace arnse

#endif  // ARNSE_TRAINER_HPP_
