// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

/**
 * Phase-constrained magnitude (PCM) loss.
 *
 * With n = y - s and n_hat = y - s_hat,
 *
 *   loss = 1/2 * Lsm(s, s_hat) + 1/2 * Lsm(n, n_hat)
 *   Lsm(a, a_hat) = 1/(T F) * sum_{t,f} | |A_r| - |Ahat_r| | + | |A_i| - |Ahat_i| |
 *
 * where A_r, A_i are the real and imaginary parts of the one-sided STFT. The
 * DFT is a constant matrix product (window folded into the basis), so the
 * loss differentiates through plain matmuls.
 */
#ifndef ARNSE_OBJECTIVE_HPP_
#define ARNSE_OBJECTIVE_HPP_

#include <cmath>
#include <numbers>

#include "arnse/audio_io.hpp"
#include "arnse/autodiff.hpp"
#include "arnse/dsp.hpp"
#include "arnse/error.hpp"
#include "arnse/types.hpp"

namespace arnse {

enum class LossKind {
  kPcm,        // L1 on |real| and |imag|, speech and noise terms
  kMagnitude,  // L1 on magnitude, speech and noise terms (ablation)
};

struct LossConfig {
  int fft_size = 512;
  int hop = 256;
  Window window = Window::kHammingPeriodic;
  LossKind kind = LossKind::kPcm;
  bool mean_reduce = true;  // divide by T * F; otherwise sum
  double magnitude_floor = 1e-12;  // kMagnitude only: sqrt(re^2 + im^2 + floor)

  void Validate() const {
    StftConfig s;
    s.fft_size = fft_size;
    s.hop = hop;
    s.Validate();
  }
};

// Windowed real-DFT bases, fft_size x (fft_size / 2 + 1):
//   X_r = frames * real,  X_i = frames * imag.
template <typename Scalar>
struct DftBasis {
  MatrixX<Scalar> real;
  MatrixX<Scalar> imag;

  explicit DftBasis(const LossConfig& cfg) {
    cfg.Validate();
    const int n = cfg.fft_size;
    const int bins = n / 2 + 1;
    const Eigen::VectorXd w = MakeWindow(cfg.window, n);
    real.resize(n, bins);
    imag.resize(n, bins);
    for (int t = 0; t < n; ++t) {
      for (int k = 0; k < bins; ++k) {
        // Reduce the phase index exactly before converting to an angle.
        const long idx = (static_cast<long>(t) * k) % n;
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(idx) / n;
        real(t, k) = static_cast<Scalar>(w[t] * std::cos(angle));
        imag(t, k) = static_cast<Scalar>(-w[t] * std::sin(angle));
      }
    }
  }
};

namespace detail {

template <typename Scalar>
ad::Var<Scalar> Reduce(ad::Var<Scalar> x, bool mean) {
  return mean ? ad::Mean(x) : ad::Sum(x);
}

// Spectral distance between a fixed reference signal and an estimate on the tape.
template <typename Scalar>
ad::Var<Scalar> SpectralTerm(const MatrixX<Scalar>& reference, ad::Var<Scalar> estimate,
                             const DftBasis<Scalar>& basis, const LossConfig& cfg) {
  ad::Tape<Scalar>* tape = estimate.tape;
  const MatrixX<Scalar> ref_frames = FrameSignal(reference.col(0), cfg.fft_size, cfg.hop);
  const MatrixX<Scalar> ref_r = ref_frames * basis.real;
  const MatrixX<Scalar> ref_i = ref_frames * basis.imag;
  auto frames = ad::Frame(estimate, cfg.fft_size, cfg.hop);
  auto est_r = ad::MatMul(frames, tape->Constant(basis.real));
  auto est_i = ad::MatMul(frames, tape->Constant(basis.imag));
  if (cfg.kind == LossKind::kPcm) {
    auto dr = ad::Abs(ad::Sub(tape->Constant(ref_r.cwiseAbs()), ad::Abs(est_r)));
    auto di = ad::Abs(ad::Sub(tape->Constant(ref_i.cwiseAbs()), ad::Abs(est_i)));
    return ad::Add(Reduce(dr, cfg.mean_reduce), Reduce(di, cfg.mean_reduce));
  }
  const Scalar floor = static_cast<Scalar>(cfg.magnitude_floor);
  MatrixX<Scalar> ref_mag =
      (ref_r.array().square() + ref_i.array().square() + floor).sqrt().matrix();
  auto power = ad::Add(ad::Mul(est_r, est_r), ad::Mul(est_i, est_i));
  auto floored = ad::Add(power, tape->Constant(MatrixX<Scalar>::Constant(
                                    power.rows(), power.cols(), floor)));
  auto dm = ad::Abs(ad::Sub(tape->Constant(ref_mag), ad::Sqrt(floored)));
  return Reduce(dm, cfg.mean_reduce);
}

}  // namespace detail

// Loss on the tape; `clean` and `noisy` are M x 1 constants.
template <typename Scalar>
ad::Var<Scalar> PcmLoss(ad::Var<Scalar> estimate, const MatrixX<Scalar>& clean,
                        const MatrixX<Scalar>& noisy, const LossConfig& cfg,
                        const DftBasis<Scalar>& basis) {
  if (estimate.cols() != 1 || clean.cols() != 1 || noisy.cols() != 1) {
    throw DataError("pcm_loss: signals must be column vectors");
  }
  if (estimate.rows() != clean.rows() || clean.rows() != noisy.rows()) {
    throw DataError("pcm_loss: length mismatch");
  }
  ad::Tape<Scalar>* tape = estimate.tape;
  const MatrixX<Scalar> noise = noisy - clean;
  auto noise_estimate = ad::Sub(tape->Constant(noisy), estimate);
  auto speech_term = detail::SpectralTerm(clean, estimate, basis, cfg);
  auto noise_term = detail::SpectralTerm(noise, noise_estimate, basis, cfg);
  return ad::Scale(ad::Add(speech_term, noise_term), Scalar(0.5));
}

template <typename Scalar>
ad::Var<Scalar> PcmLoss(ad::Var<Scalar> estimate, const MatrixX<Scalar>& clean,
                        const MatrixX<Scalar>& noisy, const LossConfig& cfg) {
  return PcmLoss(estimate, clean, noisy, cfg, DftBasis<Scalar>(cfg));
}

// Loss value for three aligned waveforms.
inline double PcmLoss(const AudioBuffer& estimate, const AudioBuffer& clean,
                      const AudioBuffer& noisy, const LossConfig& cfg = {}) {
  if (estimate.size() != clean.size() || clean.size() != noisy.size()) {
    throw DataError("pcm_loss: length mismatch");
  }
  ad::Tape<double> tape(/*record=*/false);
  auto est = tape.Constant(estimate.samples);
  return PcmLoss<double>(est, clean.samples, noisy.samples, cfg).value()(0, 0);
}

}  // namespace arnse

#endif  // ARNSE_OBJECTIVE_HPP_
