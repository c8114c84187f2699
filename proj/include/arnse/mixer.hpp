// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ARNSE_MIXER_HPP_
#define ARNSE_MIXER_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "arnse/audio_io.hpp"
#include "arnse/error.hpp"

namespace arnse {

// Either a fixed SNR or the two-range training distribution: a fair coin picks
// [-7, 0) dB or [0, 10] dB, then the SNR is uniform within the range.
struct SnrPolicy {
  enum class Kind { kTwoRanges, kFixed };
  Kind kind = Kind::kTwoRanges;
  double fixed_db = -6.0;

  static SnrPolicy TwoRanges() { return {}; }
  static SnrPolicy Fixed(double db) { return {Kind::kFixed, db}; }

  double Sample(std::mt19937_64& rng) const;
  std::string ToText() const;
  static SnrPolicy FromText(const std::string& text);
};

double SampleSnrDb(std::mt19937_64& rng);

// y = s + n, sample for sample.
struct MixturePair {
  AudioBuffer clean;
  AudioBuffer noise;
  AudioBuffer mixture;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

// Scales speech to `snr_db` against the noise, then rescales the whole triple
// so the mixture has RMS `target_rms`.
MixturePair MixAtSnr(const AudioBuffer& clean, const AudioBuffer& noise, double snr_db,
                     double target_rms);

// `length` samples of `noise` starting at `offset`; wraps around when looping.
AudioBuffer CropNoise(const AudioBuffer& noise, Eigen::Index offset, Eigen::Index length,
                      bool loop);

// Offset for a random crop (noise longer than the utterance) or a random loop
// phase (noise shorter).
Eigen::Index SampleNoiseOffset(std::mt19937_64& rng, Eigen::Index noise_len,
                               Eigen::Index utterance_len, bool loop);

// ---------------------------------------------------------------------------
// Synthetic material for self-contained runs.
// ---------------------------------------------------------------------------

// Voiced "words" (3-8 harmonics of a drifting 90-300 Hz fundamental,
// amplitude-modulated at 2-8 Hz, with a little aspiration noise) separated by
// silent pauses. Peak amplitude 0.5.
AudioBuffer SynthSpeechLike(std::uint64_t seed, double duration_s, int sample_rate = 16000);

enum class NoiseKind { kWhite, kPink };

// Gaussian noise with RMS 0.1.
AudioBuffer SynthNoise(std::uint64_t seed, double duration_s, int sample_rate = 16000,
                       NoiseKind kind = NoiseKind::kWhite);

// ---------------------------------------------------------------------------
// Corpus manifests.
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string id;
  std::string clean_path;
  std::string noise_path;
  Eigen::Index noise_offset = 0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  Eigen::Index length = 0;
};

/**
 * Plain-text manifest:
 *
 *   # arnse corpus manifest v1
 *   seed = 7
 *   target_rms = 0.05
 *   snr_policy = two_ranges        (or fixed:-6)
 *   loop_noise = 1
 *   count = 2
 *   entry id=mix_00000 clean=a.wav noise=b.wav noise_offset=10 snr_db=-3.2 seed=99 length=32000
 *   ...
 *
 * Paths may not contain whitespace. Doubles are written with 17 significant
 * digits so a manifest regenerates bit-identical mixtures.
 */
struct CorpusManifest {
  std::uint64_t seed = 0;
  double target_rms = 0.05;
  SnrPolicy policy;
  bool loop_noise = true;
  std::vector<ManifestEntry> entries;

  std::string ToText() const;
  static CorpusManifest FromText(const std::string& text);
  void Save(const std::filesystem::path& path) const;
  static CorpusManifest Load(const std::filesystem::path& path);
};

// Reads the entry's sources and remixes it.
MixturePair RealizeEntry(const ManifestEntry& entry, double target_rms, bool loop_noise);

struct CorpusOptions {
  std::filesystem::path clean_dir;
  std::filesystem::path noise_dir;
  std::filesystem::path out_dir;
  int count = 0;
  std::uint64_t seed = 0;
  SnrPolicy policy;
  double target_rms = 0.05;
  bool loop_noise = true;
};

// Sorted list of *.wav files in a directory.
std::vector<std::filesystem::path> ListWavs(const std::filesystem::path& dir);

/**
 * Draws `count` mixtures and writes out_dir/{clean,noise,mix}/<id>.wav plus
 * out_dir/manifest.txt. Entry i uses its own generator seeded from
 * (seed, i), so the output does not depend on generation order.
 */
CorpusManifest BuildCorpus(const CorpusOptions& opts);

}  // namespace arnse

#endif  // ARNSE_MIXER_HPP_
