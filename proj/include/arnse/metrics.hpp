// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ARNSE_METRICS_HPP_
#define ARNSE_METRICS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arnse/audio_io.hpp"
#include "arnse/error.hpp"

namespace arnse {

// STOI constants, all in one place so they can be audited.
namespace stoi_constants {
inline constexpr int kSampleRate = 10000;      // internal processing rate
inline constexpr int kFrameLen = 256;          // Hanning analysis frame
inline constexpr int kHop = 128;
inline constexpr int kFftSize = 512;
inline constexpr int kNumBands = 15;           // one-third octave bands
inline constexpr double kMinCenterHz = 150.0;  // lowest band centre
inline constexpr int kSegmentFrames = 30;      // 384 ms envelope segment
inline constexpr double kSdrLowerBoundDb = -15.0;
inline constexpr double kDynamicRangeDb = 40.0;  // silent-frame threshold
}  // namespace stoi_constants

// Windowed-sinc polyphase resampler (Kaiser window, beta 14.77, cutoff at
// 0.9 of the lower Nyquist frequency).
Eigen::VectorXd Resample(const Eigen::VectorXd& x, int from_rate, int to_rate);

// 15 x (kFftSize / 2 + 1) one-third octave band matrix and the band centres.
Eigen::MatrixXd ThirdOctaveBands(Eigen::VectorXd* centers = nullptr);

// Short-time objective intelligibility of `processed` against `clean`.
double Stoi(const AudioBuffer& clean, const AudioBuffer& processed);

// 10 log10(sum ref^2 / sum (ref - est)^2); +infinity when est == ref.
double SnrDb(const AudioBuffer& ref, const AudioBuffer& est);

struct EditCounts {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int Total() const { return substitutions + deletions + insertions; }
};

// Levenshtein alignment with unit costs. Backtrace prefers substitution, then
// insertion, then deletion when paths tie.
EditCounts AlignWords(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

// (S + D + I) / |ref|.
double Wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

std::vector<std::string> SplitWords(const std::string& line);

struct UtteranceMetrics {
  std::string id;
  std::optional<double> snr_bin_db;  // absent when the input SNR is unknown
  double stoi = 0.0;
  double snr_out_db = 0.0;
};

struct BinSummary {
  int count = 0;
  double mean_stoi = 0.0;
  double mean_snr_out_db = 0.0;
};

struct MetricsReport {
  std::vector<UtteranceMetrics> utterances;

  // Keyed by rounded input SNR; utterances without a bin only enter Overall().
  std::map<long, BinSummary> ByBin() const;
  BinSummary Overall() const;

  std::string ToText() const;
};

}  // namespace arnse

#endif  // ARNSE_METRICS_HPP_
