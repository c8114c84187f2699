// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "arnse/objective.hpp"
#include "support/gradcheck.hpp"
#include "support/test_util.hpp"

using namespace arnse;
using arnse::testing::RandomSignal;

namespace {

// Loss computed frame by frame with an explicit DFT sum.
double OracleLoss(const Eigen::VectorXd& est, const Eigen::VectorXd& clean, const Eigen::VectorXd& noisy,
                  int n_fft, int hop, bool magnitude) {
  const int bins = n_fft / 2 + 1;
  const Eigen::VectorXd win = MakeWindow(Window::kHammingPeriodic, n_fft);
  auto term = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::MatrixXd fa = FrameSignal(a, n_fft, hop);
    const Eigen::MatrixXd fb = FrameSignal(b, n_fft, hop);
    double total = 0.0;
    for (Eigen::Index t = 0; t < fa.rows(); ++t) {
      for (int k = 0; k < bins; ++k) {
        double ar = 0, ai = 0, br = 0, bi = 0;
        for (int n = 0; n < n_fft; ++n) {
          const double ph = 2.0 * std::numbers::pi * k * n / n_fft;
          ar += win[n] * fa(t, n) * std::cos(ph);
          ai -= win[n] * fa(t, n) * std::sin(ph);
          br += win[n] * fb(t, n) * std::cos(ph);
          bi -= win[n] * fb(t, n) * std::sin(ph);
        }
        if (magnitude) {
          total += std::abs(std::sqrt(ar * ar + ai * ai + 1e-12) - std::sqrt(br * br + bi * bi + 1e-12));
        } else {
          total += std::abs(std::abs(ar) - std::abs(br)) + std::abs(std::abs(ai) - std::abs(bi));
        }
      }
    }
    return total / (static_cast<double>(fa.rows()) * bins);
  };
  return 0.5 * term(clean, est) + 0.5 * term(noisy - clean, noisy - est);
}

LossConfig Small(LossKind kind = LossKind::kPcm) {
  LossConfig cfg;
  cfg.fft_size = 32;
  cfg.hop = 16;
  cfg.kind = kind;
  return cfg;
}

}  // namespace

TEST_CASE("loss equals the explicit DFT oracle") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index m = 100 + 41 * trial;
    const Eigen::VectorXd s = RandomSignal(rng, m), y = s + RandomSignal(rng, m, 0.2);
    const Eigen::VectorXd est = RandomSignal(rng, m);
    for (LossKind kind : {LossKind::kPcm, LossKind::kMagnitude}) {
      const double got = PcmLoss(AudioBuffer(est, 16000), AudioBuffer(s, 16000), AudioBuffer(y, 16000), Small(kind));
      const double want = OracleLoss(est, s, y, 32, 16, kind == LossKind::kMagnitude);
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("default configuration uses 512-point frames") {
  std::mt19937_64 rng(32);
  const Eigen::VectorXd s = RandomSignal(rng, 1500), y = s + RandomSignal(rng, 1500, 0.1);
  const Eigen::VectorXd est = 0.5 * (s + y);
  const double got = PcmLoss(AudioBuffer(est, 16000), AudioBuffer(s, 16000), AudioBuffer(y, 16000));
  CHECK(got == doctest::Approx(OracleLoss(est, s, y, 512, 256, false)).epsilon(1e-11));
}

TEST_CASE("loss properties") {
  std::mt19937_64 rng(33);
  const Eigen::VectorXd s = RandomSignal(rng, 900), y = s + RandomSignal(rng, 900, 0.3);
  const AudioBuffer clean(s, 16000), noisy(y, 16000);
  CHECK(PcmLoss(clean, clean, noisy) == 0.0);
  CHECK(PcmLoss(AudioBuffer(-s, 16000), clean, noisy) >= 0.0);
  // Sign flips inside a frame spectrum are invisible to the loss, so a
  // sign-flipped clean signal with a sign-flipped mixture scores zero.
  CHECK(PcmLoss(AudioBuffer(-s, 16000), AudioBuffer(-s, 16000), AudioBuffer(-y, 16000)) == 0.0);
  const double loss_y = PcmLoss(noisy, clean, noisy);
  const double loss_half = PcmLoss(AudioBuffer(0.5 * (s + y), 16000), clean, noisy);
  CHECK(loss_y > loss_half);
  LossConfig sum = LossConfig{};
  sum.mean_reduce = false;
  const Eigen::Index frames = FrameCount(900, 512, 256);
  CHECK(PcmLoss(noisy, clean, noisy, sum) == doctest::Approx(loss_y * frames * 257));
  CHECK_THROWS_AS(PcmLoss(AudioBuffer(s.head(10), 16000), clean, noisy), DataError);
}

TEST_CASE("loss gradient matches finite differences") {
  std::mt19937_64 rng(34);
  const Eigen::Index m = 80;
  const Eigen::MatrixXd s = RandomSignal(rng, m), y = s + RandomSignal(rng, m, 0.3);
  const Eigen::MatrixXd est = RandomSignal(rng, m);
  for (LossKind kind : {LossKind::kPcm, LossKind::kMagnitude}) {
    const LossConfig cfg = Small(kind);
    const auto r = arnse::testing::CheckGradients({est}, [&](ad::Tape<double>&, const std::vector<ad::Var<double>>& v) {
      return PcmLoss<double>(v[0], s, y, cfg);
    });
    CHECK(r.max_error <= 1e-4);
  }
}

TEST_CASE("basis reproduces the STFT") {
  std::mt19937_64 rng(35);
  const Eigen::VectorXd x = RandomSignal(rng, 2000);
  const LossConfig cfg;
  const DftBasis<double> basis(cfg);
  const Eigen::MatrixXd frames = FrameSignal(x, 512, 256);
  StftConfig sc;
  const Spectrogram spec = Stft(x, sc);
  CHECK((frames * basis.real - spec.real_part).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((frames * basis.imag - spec.imag_part).cwiseAbs().maxCoeff() < 1e-10);
}
