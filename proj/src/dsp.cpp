// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "arnse/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace arnse {

Eigen::Index FrameCount(Eigen::Index num_samples, int frame_len, int hop) {
  if (num_samples <= frame_len) return 1;
  return (num_samples - frame_len + hop - 1) / hop + 1;
}

void CheckFraming(Eigen::Index num_samples, int frame_len, int hop) {
  if (frame_len <= 0) throw ConfigError("frame length must be positive");
  if (hop <= 0) throw ConfigError("hop must be positive");
  if (hop > frame_len) throw ConfigError("hop must not exceed frame length");
  if (num_samples == 0) throw DataError("cannot frame an empty signal");
}

Eigen::VectorXd OverlapCounts(Eigen::Index num_frames, int frame_len, int hop,
                              Eigen::Index num_samples) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_samples);
  for (Eigen::Index t = 0; t < num_frames; ++t) {
    const Eigen::Index start = t * hop;
    if (start >= num_samples) break;
    const Eigen::Index len = std::min<Eigen::Index>(frame_len, num_samples - start);
    counts.segment(start, len).array() += 1.0;
  }
  return counts;
}

FrameMatrix FrameSignal(const AudioBuffer& x, int frame_len, int hop) {
  FrameMatrix fm;
  fm.frames = FrameSignal(x.samples, frame_len, hop);
  fm.frame_len = frame_len;
  fm.hop = hop;
  fm.orig_len = x.size();
  return fm;
}

AudioBuffer OverlapAdd(const FrameMatrix& fm, int sample_rate) {
  if (fm.frames.cols() != fm.frame_len) throw DataError("frame matrix width mismatch");
  CheckFraming(fm.orig_len, fm.frame_len, fm.hop);
  if (fm.frames.rows() != FrameCount(fm.orig_len, fm.frame_len, fm.hop)) {
    throw DataError("frame count does not match original length");
  }
  return AudioBuffer(OverlapAdd(fm.frames, fm.hop, fm.orig_len), sample_rate);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd MakeWindow(Window window, int length) {
  Eigen::VectorXd w(length);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int n = 0; n < length; ++n) {
    switch (window) {
      case Window::kHammingPeriodic:
        w[n] = 0.54 - 0.46 * std::cos(two_pi * n / length);
        break;
      case Window::kRectangular:
        w[n] = 1.0;
        break;
      case Window::kHann:
        w[n] = 0.5 - 0.5 * std::cos(two_pi * n / length);
        break;
    }
  }
  return w;
}

Window ParseWindow(const std::string& name) {
  if (name == "hamming_periodic" || name == "hamming") return Window::kHammingPeriodic;
  if (name == "rectangular" || name == "rect") return Window::kRectangular;
  if (name == "hann") return Window::kHann;
  throw ConfigError("unknown window: " + name);
}

std::string WindowName(Window window) {
  switch (window) {
    case Window::kHammingPeriodic: return "hamming_periodic";
    case Window::kRectangular: return "rectangular";
    case Window::kHann: return "hann";
  }
  return "unknown";
}

void StftConfig::Validate() const {
  if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0) {
    throw ConfigError("fft_size must be a power of two");
  }
  if (FrameLength() > fft_size) throw ConfigError("frame length exceeds fft_size");
  if (hop <= 0 || hop > FrameLength()) throw ConfigError("hop must be in (0, frame length]");
}

Spectrogram Stft(const Eigen::VectorXd& x, const StftConfig& cfg) {
  cfg.Validate();
  const int frame_len = cfg.FrameLength();
  Eigen::MatrixXd frames = FrameSignal(x, frame_len, cfg.hop);
  const Eigen::VectorXd window = MakeWindow(cfg.window, frame_len);
  const int bins = cfg.NumBins();

  Spectrogram spec;
  spec.config = cfg;
  spec.real_part.resize(frames.rows(), bins);
  spec.imag_part.resize(frames.rows(), bins);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(cfg.fft_size, 0.0);
  std::vector<std::complex<double>> out;
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int n = 0; n < frame_len; ++n) buf[n] = frames(t, n) * window[n];
    fft.fwd(out, buf);
    for (int k = 0; k < bins; ++k) {
      spec.real_part(t, k) = out[k].real();
      spec.imag_part(t, k) = out[k].imag();
    }
  }
  return spec;
}

Spectrogram Stft(const AudioBuffer& x, const StftConfig& cfg) { return Stft(x.samples, cfg); }

AudioBuffer Istft(const Spectrogram& spec, Eigen::Index orig_len, int sample_rate) {
  const StftConfig& cfg = spec.config;
  cfg.Validate();
  const int frame_len = cfg.FrameLength();
  const int bins = cfg.NumBins();
  if (spec.real_part.cols() != bins || spec.imag_part.cols() != bins ||
      spec.real_part.rows() != spec.imag_part.rows()) {
    throw DataError("spectrogram shape does not match its configuration");
  }
  const Eigen::Index frames = spec.NumFrames();
  if (frames != FrameCount(orig_len, frame_len, cfg.hop)) {
    throw DataError("spectrogram frame count does not match original length");
  }
  const Eigen::VectorXd window = MakeWindow(cfg.window, frame_len);
  const Eigen::Index padded = (frames - 1) * cfg.hop + frame_len;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(padded);
  Eigen::VectorXd wsum = Eigen::VectorXd::Zero(padded);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> half(bins);
  std::vector<double> time;
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int k = 0; k < bins; ++k) half[k] = {spec.real_part(t, k), spec.imag_part(t, k)};
    fft.inv(time, half, cfg.fft_size);
    for (int n = 0; n < frame_len; ++n) {
      acc[t * cfg.hop + n] += time[n] * window[n];
      wsum[t * cfg.hop + n] += window[n] * window[n];
    }
  }
  for (Eigen::Index i = 0; i < orig_len; ++i) {
    if (wsum[i] < 1e-8) throw DataError("non-invertible framing");
  }
  return AudioBuffer(acc.head(orig_len).cwiseQuotient(wsum.head(orig_len)), sample_rate);
}

// ---------------------------------------------------------------------------

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd MelFilterbank(int num_mel, int fft_size, int sample_rate, double fmin,
                              double fmax) {
  if (num_mel <= 0) throw ConfigError("num_mel must be positive");
  if (!(fmin >= 0.0 && fmax > fmin && fmax <= sample_rate / 2.0)) {
    throw ConfigError("mel range must satisfy 0 <= fmin < fmax <= Nyquist");
  }
  const int bins = fft_size / 2 + 1;
  const double mel_lo = HzToMel(fmin);
  const double mel_hi = HzToMel(fmax);
  std::vector<double> edges(num_mel + 2);
  for (int i = 0; i < num_mel + 2; ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (num_mel + 1));
  }
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(num_mel, bins);
  for (int m = 0; m < num_mel; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      if (f > lo && f < hi) {
        fb(m, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      }
    }
  }
  return fb;
}

Eigen::MatrixXd LogMelSpectrum(const AudioBuffer& x, const FeatureConfig& cfg) {
  if (x.size() < cfg.frame_len) throw DataError("utterance shorter than one feature frame");
  StftConfig stft_cfg;
  stft_cfg.fft_size = cfg.fft_size;
  stft_cfg.frame_len = cfg.frame_len;
  stft_cfg.hop = cfg.hop;
  stft_cfg.window = Window::kHammingPeriodic;
  const Spectrogram spec = Stft(x, stft_cfg);
  const Eigen::MatrixXd fb =
      MelFilterbank(cfg.num_mel, cfg.fft_size, x.sample_rate, cfg.fmin, cfg.fmax);
  Eigen::MatrixXd mel = spec.Power() * fb.transpose();
  return (mel.array() + cfg.log_floor).log().matrix();
}

Eigen::MatrixXd Deltas(const Eigen::MatrixXd& feats, int window) {
  const Eigen::Index frames = feats.rows();
  double denom = 0.0;
  for (int k = 1; k <= window; ++k) denom += 2.0 * k * k;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(frames, feats.cols());
  auto clamp_row = [frames](Eigen::Index t) {
    return std::clamp<Eigen::Index>(t, 0, frames - 1);
  };
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int k = 1; k <= window; ++k) {
      out.row(t) += k * (feats.row(clamp_row(t + k)) - feats.row(clamp_row(t - k)));
    }
  }
  return out / denom;
}

FeatureMatrix LogMelFeatures(const AudioBuffer& x, const FeatureConfig& cfg) {
  Eigen::MatrixXd statics = LogMelSpectrum(x, cfg);
  statics.rowwise() -= statics.colwise().mean();
  Eigen::MatrixXd delta = Deltas(statics, cfg.delta_window);
  Eigen::MatrixXd delta2 = Deltas(delta, cfg.delta_window);
  if (cfg.normalize_deltas) {
    delta.rowwise() -= delta.colwise().mean();
    delta2.rowwise() -= delta2.colwise().mean();
  }
  FeatureMatrix out;
  out.values.resize(statics.rows(), 3 * statics.cols());
  out.values << statics, delta, delta2;
  out.mean_normalized = true;
  return out;
}

namespace {

void PutU32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t GetU32(const std::vector<unsigned char>& bytes, std::size_t pos) {
  return static_cast<std::uint32_t>(bytes[pos]) | (static_cast<std::uint32_t>(bytes[pos + 1]) << 8) |
         (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
         (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
}

}  // namespace

void WriteFeatures(const Eigen::MatrixXd& values, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write("ARNF", 4);
  PutU32(out, static_cast<std::uint32_t>(values.rows()));
  PutU32(out, static_cast<std::uint32_t>(values.cols()));
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    for (Eigen::Index d = 0; d < values.cols(); ++d) {
      const float f = static_cast<float>(values(t, d));
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      PutU32(out, bits);
    }
  }
  if (!out) throw DataError("write failed for " + path.string());
}

Eigen::MatrixXf ReadFeatures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "ARNF", 4) != 0) {
    throw DataError("not a feature file: " + path.string());
  }
  const std::uint32_t rows = GetU32(bytes, 4);
  const std::uint32_t cols = GetU32(bytes, 8);
  if (bytes.size() != 12 + 4ull * rows * cols) throw DataError("feature file size mismatch");
  Eigen::MatrixXf values(rows, cols);
  std::size_t pos = 12;
  for (std::uint32_t t = 0; t < rows; ++t) {
    for (std::uint32_t d = 0; d < cols; ++d, pos += 4) {
      const std::uint32_t bits = GetU32(bytes, pos);
      std::memcpy(&values(t, d), &bits, 4);
    }
  }
  return values;
}

// ---------------------------------------------------------------------------

double Rms(const Eigen::VectorXd& x) {
  if (x.size() == 0) return 0.0;
  return std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
}

AudioBuffer RmsNormalize(const AudioBuffer& x, double target_rms) {
  const double level = Rms(x.samples);
  if (level == 0.0) throw DataError("zero-energy signal");
  return AudioBuffer(x.samples * (target_rms / level), x.sample_rate);
}

}  // namespace arnse
