// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ARNSE_DSP_HPP_
#define ARNSE_DSP_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "arnse/audio_io.hpp"
#include "arnse/error.hpp"
#include "arnse/types.hpp"

namespace arnse {

// ---------------------------------------------------------------------------
// Framing and overlap-add.
//
// A signal of M samples is zero-padded at the tail to
//   M_padded = (T - 1) * H + L,   T = max(1, ceil((M - L) / H) + 1),
// and frame t covers padded samples [t*H, t*H + L).
// ---------------------------------------------------------------------------

Eigen::Index FrameCount(Eigen::Index num_samples, int frame_len, int hop);

inline Eigen::Index PaddedLength(Eigen::Index num_samples, int frame_len, int hop) {
  return (FrameCount(num_samples, frame_len, hop) - 1) * hop + frame_len;
}

void CheckFraming(Eigen::Index num_samples, int frame_len, int hop);

// T x L matrix of frames cut from a column vector.
template <typename Derived>
MatrixX<typename Derived::Scalar> FrameSignal(const Eigen::MatrixBase<Derived>& x, int frame_len,
                                              int hop) {
  using Scalar = typename Derived::Scalar;
  CheckFraming(x.size(), frame_len, hop);
  const Eigen::Index n = x.size();
  const Eigen::Index frames = FrameCount(n, frame_len, hop);
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(frames, frame_len);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::Index start = t * hop;
    const Eigen::Index avail = std::min<Eigen::Index>(frame_len, n - start);
    if (avail > 0) out.row(t).head(avail) = x.segment(start, avail).transpose();
  }
  return out;
}

// Number of frames covering each of the first `num_samples` padded samples.
Eigen::VectorXd OverlapCounts(Eigen::Index num_frames, int frame_len, int hop,
                              Eigen::Index num_samples);

// Sums overlapping frames, divides each sample by its overlap count and
// truncates to `num_samples`.
template <typename Derived>
VectorX<typename Derived::Scalar> OverlapAdd(const Eigen::MatrixBase<Derived>& frames, int hop,
                                             Eigen::Index num_samples) {
  using Scalar = typename Derived::Scalar;
  const int frame_len = static_cast<int>(frames.cols());
  const Eigen::Index padded = (frames.rows() - 1) * hop + frame_len;
  if (num_samples > padded) throw DataError("overlap_add: requested length exceeds framed span");
  VectorX<Scalar> acc = VectorX<Scalar>::Zero(padded);
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    acc.segment(t * hop, frame_len) += frames.row(t).transpose();
  }
  Eigen::VectorXd counts = OverlapCounts(frames.rows(), frame_len, hop, num_samples);
  return acc.head(num_samples).cwiseQuotient(counts.cast<Scalar>());
}

struct FrameMatrix {
  Eigen::MatrixXd frames;
  int frame_len = 0;
  int hop = 0;
  Eigen::Index orig_len = 0;
};

FrameMatrix FrameSignal(const AudioBuffer& x, int frame_len, int hop);
AudioBuffer OverlapAdd(const FrameMatrix& fm, int sample_rate);

// ---------------------------------------------------------------------------
// STFT.
// ---------------------------------------------------------------------------

enum class Window { kHammingPeriodic, kRectangular, kHann };

Eigen::VectorXd MakeWindow(Window window, int length);
Window ParseWindow(const std::string& name);
std::string WindowName(Window window);

struct StftConfig {
  int fft_size = 512;
  int frame_len = 0;  // 0 means fft_size; shorter frames are zero-padded
  int hop = 256;
  Window window = Window::kHammingPeriodic;

  int FrameLength() const { return frame_len > 0 ? frame_len : fft_size; }
  int NumBins() const { return fft_size / 2 + 1; }
  void Validate() const;
};

struct Spectrogram {
  Eigen::MatrixXd real_part;  // T x F
  Eigen::MatrixXd imag_part;  // T x F
  StftConfig config;

  Eigen::Index NumFrames() const { return real_part.rows(); }
  Eigen::Index NumBins() const { return real_part.cols(); }
  Eigen::MatrixXd Power() const {
    return real_part.cwiseAbs2() + imag_part.cwiseAbs2();
  }
};

Spectrogram Stft(const AudioBuffer& x, const StftConfig& cfg);
Spectrogram Stft(const Eigen::VectorXd& x, const StftConfig& cfg);

// Weighted overlap-add inverse: inverse DFT, window again, sum, divide by the
// per-sample sum of squared windows.
AudioBuffer Istft(const Spectrogram& spec, Eigen::Index orig_len, int sample_rate);

// ---------------------------------------------------------------------------
// Log-Mel features.
// ---------------------------------------------------------------------------

double HzToMel(double hz);
double MelToHz(double mel);

// num_mel x (fft_size / 2 + 1) triangular filters on the HTK mel scale.
Eigen::MatrixXd MelFilterbank(int num_mel, int fft_size, int sample_rate, double fmin,
                              double fmax);

struct FeatureConfig {
  int frame_len = 400;
  int hop = 160;
  int fft_size = 512;
  int num_mel = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 4.248354255291589e-18;  // e^-40
  int delta_window = 2;
  bool normalize_deltas = false;  // mean-normalize delta blocks as well
};

struct FeatureMatrix {
  Eigen::MatrixXd values;  // T x (3 * num_mel)
  bool mean_normalized = false;
};

// T x num_mel natural-log Mel energies, before mean normalization.
Eigen::MatrixXd LogMelSpectrum(const AudioBuffer& x, const FeatureConfig& cfg = {});

// Regression deltas over +-window frames with edge replication.
Eigen::MatrixXd Deltas(const Eigen::MatrixXd& feats, int window = 2);

// Mean-normalized statics followed by delta and delta-delta blocks.
FeatureMatrix LogMelFeatures(const AudioBuffer& x, const FeatureConfig& cfg = {});

// Feature file: "ARNF", u32 T, u32 D, T*D little-endian f32, row-major.
void WriteFeatures(const Eigen::MatrixXd& values, const std::filesystem::path& path);
Eigen::MatrixXf ReadFeatures(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Level.
// ---------------------------------------------------------------------------

double Rms(const Eigen::VectorXd& x);
AudioBuffer RmsNormalize(const AudioBuffer& x, double target_rms);

}  // namespace arnse

#endif  // ARNSE_DSP_HPP_
