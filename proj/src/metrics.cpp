// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "arnse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "arnse/dsp.hpp"

namespace arnse {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kKaiserBeta = 14.77;

// Zeroth-order modified Bessel function of the first kind (power series).
double BesselI0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Symmetric Hanning window of `len` points without the zero end points.
Eigen::VectorXd HanningInterior(int len) {
  Eigen::VectorXd w(len);
  const int m = len + 2;
  for (int n = 0; n < len; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (n + 1) / (m - 1));
  }
  return w;
}

// Drops frames of `clean` more than `range_db` below its loudest frame and
// rebuilds both signals from the retained frames.
void RemoveSilentFrames(const Eigen::VectorXd& clean, const Eigen::VectorXd& processed,
                        Eigen::VectorXd* clean_out, Eigen::VectorXd* processed_out) {
  using namespace stoi_constants;
  const Eigen::VectorXd w = HanningInterior(kFrameLen);
  std::vector<Eigen::Index> starts;
  for (Eigen::Index i = 0; i + kFrameLen <= clean.size(); i += kHop) starts.push_back(i);
  if (starts.empty()) throw DataError("signal too short for STOI");
  std::vector<double> energy(starts.size());
  for (std::size_t f = 0; f < starts.size(); ++f) {
    energy[f] = 20.0 * std::log10(
                           clean.segment(starts[f], kFrameLen).cwiseProduct(w).norm() + kEps);
  }
  const double peak = *std::max_element(energy.begin(), energy.end());
  std::vector<Eigen::Index> kept;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    if (energy[f] > peak - kDynamicRangeDb) kept.push_back(starts[f]);
  }
  const Eigen::Index out_len = (static_cast<Eigen::Index>(kept.size()) - 1) * kHop + kFrameLen;
  *clean_out = Eigen::VectorXd::Zero(out_len);
  *processed_out = Eigen::VectorXd::Zero(out_len);
  for (std::size_t f = 0; f < kept.size(); ++f) {
    const Eigen::Index pos = static_cast<Eigen::Index>(f) * kHop;
    clean_out->segment(pos, kFrameLen) += clean.segment(kept[f], kFrameLen).cwiseProduct(w);
    processed_out->segment(pos, kFrameLen) += processed.segment(kept[f], kFrameLen).cwiseProduct(w);
  }
}

// Band envelopes: kNumBands x frames.
Eigen::MatrixXd BandEnvelopes(const Eigen::VectorXd& x, const Eigen::MatrixXd& bands) {
  using namespace stoi_constants;
  const Eigen::VectorXd w = HanningInterior(kFrameLen);
  std::vector<Eigen::Index> starts;
  for (Eigen::Index i = 0; i + kFrameLen < x.size(); i += kHop) starts.push_back(i);
  const int bins = kFftSize / 2 + 1;
  Eigen::MatrixXd power(bins, static_cast<Eigen::Index>(starts.size()));
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(kFftSize);
  std::vector<std::complex<double>> spec;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int n = 0; n < kFrameLen; ++n) buf[n] = x[starts[f] + n] * w[n];
    fft.fwd(spec, buf);
    for (int k = 0; k < bins; ++k) power(k, static_cast<Eigen::Index>(f)) = std::norm(spec[k]);
  }
  return (bands * power).cwiseSqrt();
}

}  // namespace

Eigen::VectorXd Resample(const Eigen::VectorXd& x, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw ConfigError("sample rates must be positive");
  if (from_rate == to_rate) return x;
  const int g = std::gcd(from_rate, to_rate);
  const long up = to_rate / g;
  const long down = from_rate / g;
  const double up_rate = static_cast<double>(from_rate) * up;
  const double cutoff_hz = 0.9 * std::min(from_rate, to_rate) / 2.0;
  const double transition_hz = 0.1 * std::min(from_rate, to_rate) / 2.0;

  // Kaiser design: attenuation implied by beta, length from the transition width.
  const double atten = kKaiserBeta / 0.1102 + 8.7;
  const double dw = 2.0 * std::numbers::pi * transition_hz / up_rate;
  const long half = static_cast<long>(std::ceil((atten - 8.0) / (2.285 * dw) / 2.0));
  const long taps = 2 * half + 1;
  Eigen::VectorXd h(taps);
  const double fc = cutoff_hz / up_rate;  // cycles per sample at the upsampled rate
  const double i0_beta = BesselI0(kKaiserBeta);
  for (long k = 0; k < taps; ++k) {
    const double n = static_cast<double>(k - half);
    const double sinc = n == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * n) / (std::numbers::pi * n);
    const double r = n / static_cast<double>(half);
    const double win = BesselI0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[k] = sinc * win * static_cast<double>(up);
  }

  const long in_len = static_cast<long>(x.size());
  const long out_len = (in_len * up + down - 1) / down;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(out_len);
  for (long m = 0; m < out_len; ++m) {
    const long center = m * down + half;  // index into the upsampled, delayed stream
    long n_lo = center - (taps - 1);
    n_lo = n_lo <= 0 ? 0 : (n_lo + up - 1) / up;
    const long n_hi = std::min(in_len - 1, center / up);
    double acc = 0.0;
    for (long n = n_lo; n <= n_hi; ++n) acc += x[n] * h[center - n * up];
    y[m] = acc;
  }
  return y;
}

Eigen::MatrixXd ThirdOctaveBands(Eigen::VectorXd* centers) {
  using namespace stoi_constants;
  const int bins = kFftSize / 2 + 1;
  Eigen::VectorXd freqs(bins);
  for (int k = 0; k < bins; ++k) freqs[k] = static_cast<double>(k) * kSampleRate / kFftSize;
  Eigen::MatrixXd obm = Eigen::MatrixXd::Zero(kNumBands, bins);
  if (centers != nullptr) centers->resize(kNumBands);
  auto nearest = [&freqs](double f) {
    Eigen::Index idx;
    (freqs.array() - f).square().minCoeff(&idx);
    return idx;
  };
  for (int b = 0; b < kNumBands; ++b) {
    const double lo = kMinCenterHz * std::pow(2.0, (2.0 * b - 1.0) / 6.0);
    const double hi = kMinCenterHz * std::pow(2.0, (2.0 * b + 1.0) / 6.0);
    if (centers != nullptr) (*centers)[b] = kMinCenterHz * std::pow(2.0, b / 3.0);
    const Eigen::Index lo_bin = nearest(lo);
    const Eigen::Index hi_bin = nearest(hi);
    for (Eigen::Index k = lo_bin; k < hi_bin; ++k) obm(b, k) = 1.0;
  }
  return obm;
}

double Stoi(const AudioBuffer& clean, const AudioBuffer& processed) {
  using namespace stoi_constants;
  if (clean.size() != processed.size()) throw DataError("stoi: length mismatch");
  if (clean.sample_rate != processed.sample_rate) throw DataError("stoi: sample rate mismatch");
  if (clean.sample_rate < kSampleRate) throw DataError("stoi: sample rate below 10 kHz");
  if (!clean.samples.allFinite() || !processed.samples.allFinite()) {
    throw NumericError("stoi: non-finite samples");
  }

  const Eigen::VectorXd x = Resample(clean.samples, clean.sample_rate, kSampleRate);
  const Eigen::VectorXd y = Resample(processed.samples, processed.sample_rate, kSampleRate);
  Eigen::VectorXd xs, ys;
  RemoveSilentFrames(x, y, &xs, &ys);

  const Eigen::MatrixXd bands = ThirdOctaveBands();
  const Eigen::MatrixXd x_env = BandEnvelopes(xs, bands);
  const Eigen::MatrixXd y_env = BandEnvelopes(ys, bands);
  const Eigen::Index frames = x_env.cols();
  if (frames < kSegmentFrames) throw DataError("signal too short for STOI");

  const double clip = 1.0 + std::pow(10.0, -kSdrLowerBoundDb / 20.0);
  double total = 0.0;
  Eigen::Index segments = 0;
  for (Eigen::Index m = kSegmentFrames; m <= frames; ++m, ++segments) {
    const Eigen::MatrixXd xseg = x_env.middleCols(m - kSegmentFrames, kSegmentFrames);
    const Eigen::MatrixXd yseg = y_env.middleCols(m - kSegmentFrames, kSegmentFrames);
    for (int b = 0; b < kNumBands; ++b) {
      const Eigen::RowVectorXd xr = xseg.row(b);
      Eigen::RowVectorXd yr = yseg.row(b) * (xr.norm() / (yseg.row(b).norm() + kEps));
      yr = yr.cwiseMin(xr * clip);
      Eigen::RowVectorXd xc = xr.array() - xr.mean();
      Eigen::RowVectorXd yc = yr.array() - yr.mean();
      xc /= xc.norm() + kEps;
      yc /= yc.norm() + kEps;
      total += xc.dot(yc);
    }
  }
  return total / static_cast<double>(kNumBands * segments);
}

double SnrDb(const AudioBuffer& ref, const AudioBuffer& est) {
  if (ref.size() != est.size()) throw DataError("snr: length mismatch");
  const double signal = ref.samples.squaredNorm();
  if (signal == 0.0) throw DataError("snr: zero-energy reference");
  const double noise = (ref.samples - est.samples).squaredNorm();
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

EditCounts AlignWords(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  const std::size_t r = ref.size(), h = hyp.size();
  std::vector<std::vector<int>> cost(r + 1, std::vector<int>(h + 1, 0));
  for (std::size_t i = 0; i <= r; ++i) cost[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= h; ++j) cost[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= r; ++i) {
    for (std::size_t j = 1; j <= h; ++j) {
      const int diag = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cost[i][j] = std::min({diag, cost[i][j - 1] + 1, cost[i - 1][j] + 1});
    }
  }
  EditCounts counts;
  std::size_t i = r, j = h;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool match = ref[i - 1] == hyp[j - 1];
      if (cost[i][j] == cost[i - 1][j - 1] + (match ? 0 : 1)) {
        if (!match) ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && cost[i][j] == cost[i][j - 1] + 1) {
      ++counts.insertions;
      --j;
    } else {
      ++counts.deletions;
      --i;
    }
  }
  return counts;
}

double Wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  if (ref.empty()) throw DataError("wer: empty reference");
  return static_cast<double>(AlignWords(ref, hyp).Total()) / static_cast<double>(ref.size());
}

std::vector<std::string> SplitWords(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

std::map<long, BinSummary> MetricsReport::ByBin() const {
  std::map<long, BinSummary> bins;
  for (const auto& u : utterances) {
    if (!u.snr_bin_db) continue;
    BinSummary& b = bins[std::lround(*u.snr_bin_db)];
    b.count += 1;
    b.mean_stoi += u.stoi;
    b.mean_snr_out_db += u.snr_out_db;
  }
  for (auto& [key, b] : bins) {
    b.mean_stoi /= b.count;
    b.mean_snr_out_db /= b.count;
  }
  return bins;
}

BinSummary MetricsReport::Overall() const {
  BinSummary all;
  for (const auto& u : utterances) {
    all.count += 1;
    all.mean_stoi += u.stoi;
    all.mean_snr_out_db += u.snr_out_db;
  }
  if (all.count > 0) {
    all.mean_stoi /= all.count;
    all.mean_snr_out_db /= all.count;
  }
  return all;
}

std::string MetricsReport::ToText() const {
  std::ostringstream out;
  out.precision(17);
  out << "# arnse metrics report\n";
  for (const auto& u : utterances) {
    out << "utterance id=" << u.id << " snr_bin=";
    if (u.snr_bin_db) {
      out << *u.snr_bin_db;
    } else {
      out << "na";
    }
    out << " stoi=" << u.stoi << " snr_out=" << u.snr_out_db << "\n";
  }
  const auto bins = ByBin();
  for (const auto& [key, b] : bins) {
    out << "bin snr=" << key << " count=" << b.count << " stoi=" << b.mean_stoi
        << " snr_out=" << b.mean_snr_out_db << "\n";
  }
  const BinSummary all = Overall();
  out << "overall count=" << all.count << " stoi=" << all.mean_stoi
      << " snr_out=" << all.mean_snr_out_db << "\n";

  // Human-readable row: STOI in percent per input-SNR bin plus the average.
  std::ostringstream table;
  table.setf(std::ios::fixed);
  table.precision(2);
  table << "# STOI(%)";
  for (const auto& [key, b] : bins) table << " | " << key << " dB";
  table << " | Avg.\n# STOI(%)";
  for (const auto& [key, b] : bins) table << " | " << 100.0 * b.mean_stoi;
  table << " | " << 100.0 * all.mean_stoi << "\n";
  out << table.str();
  return out.str();
}

}  // namespace arnse
