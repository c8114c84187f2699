// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <random>

#include "arnse/arn.hpp"
#include "arnse/objective.hpp"
#include "support/gradcheck.hpp"
#include "support/test_util.hpp"

using namespace arnse;

namespace {

ArnConfig Tiny() {
  ArnConfig cfg;
  cfg.frame_len = 8;
  cfg.hop = 4;
  cfg.latent = 4;
  cfg.num_blocks = 1;
  cfg.heads = 2;
  cfg.ffn_expansion = 2;
  cfg.dropout = 0.1;
  return cfg;
}

long CountParams(const ArnConfig& cfg) {
  long total = 0;
  for (const auto& s : ArnParamShapes(cfg)) total += static_cast<long>(s.rows * s.cols);
  return total;
}

}  // namespace

TEST_CASE("parameter inventory follows the block structure") {
  const ArnConfig cfg;
  const long n = 1024, l = 256, h = 512, f = 4096;
  const long lstm = 2 * (n * 4 * h + h * 4 * h + 4 * h);
  const long attn = 4 * n * n + 2 * n;
  const long ffn = n * f + f * n + 2 * n;
  CHECK(CountParams(cfg) == (l * n + n) + 4 * (lstm + attn + ffn) + (n * l + l));
  CHECK(ArnParamShapes(cfg).size() == 4 + 4 * 16);
}

TEST_CASE("configuration validation") {
  ArnConfig cfg = ArnConfig::Toy();
  CHECK_NOTHROW(cfg.Validate());
  cfg.heads = 3;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = ArnConfig::Toy();
  cfg.hop = 17;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = ArnConfig::Toy();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
}

TEST_CASE("initialization is seeded and respects bounds") {
  const ArnConfig cfg = ArnConfig::Toy();
  const auto a = InitParams<double>(cfg, 5);
  const auto b = InitParams<double>(cfg, 5);
  const auto c = InitParams<double>(cfg, 6);
  CHECK(a == b);
  CHECK(a != c);
  for (const ParamShape& s : ArnParamShapes(cfg)) {
    const Eigen::MatrixXd& m = a.at(s.name);
    if (s.constant_init) {
      CHECK(m.isConstant(s.init_offset));
    } else if (s.name.ends_with("lstm_fwd.bias") || s.name.ends_with("lstm_bwd.bias")) {
      const Eigen::Index h = m.cols() / 4;
      CHECK((m.middleCols(h, h).array() - 1.0).abs().maxCoeff() <= s.init_bound);
      CHECK(m.leftCols(h).cwiseAbs().maxCoeff() <= s.init_bound);
    } else {
      CHECK(m.cwiseAbs().maxCoeff() <= s.init_bound);
    }
  }
  CHECK_NOTHROW(CheckParams(cfg, a));
  auto broken = a;
  broken.erase("decoder.bias");
  CHECK_THROWS_AS(CheckParams(cfg, broken), DataError);
}

TEST_CASE("forward pass preserves signal length") {
  const ArnConfig cfg = ArnConfig::Toy();
  const auto params = InitParams<double>(cfg, 1);
  std::mt19937_64 rng(41);
  for (Eigen::Index m : {16, 17, 100, 333}) {
    const AudioBuffer x(arnse::testing::RandomSignal(rng, m), 16000);
    const AudioBuffer y = Enhance(x, params, cfg);
    CHECK(y.size() == m);
    CHECK(y.samples.allFinite());
  }
  CHECK_THROWS_AS(Enhance(AudioBuffer(Eigen::VectorXd::Zero(15), 16000), params, cfg), DataError);
}

TEST_CASE("inference and recorded eval-mode passes agree") {
  const ArnConfig cfg = ArnConfig::Toy();
  const auto params = InitParams<double>(cfg, 2);
  std::mt19937_64 rng(42);
  const Eigen::VectorXd x = arnse::testing::RandomSignal(rng, 1200);
  ad::Tape<double> tape(true);
  ArnGraph<double> graph(&tape, params);
  const auto y = ArnForward(tape.Constant(x), graph, cfg, false);
  const AudioBuffer z = Enhance(AudioBuffer(x, 16000), params, cfg);
  CHECK((y.value().col(0) - z.samples).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("training-mode dropout is reproducible from the tape seed") {
  const ArnConfig cfg = ArnConfig::Toy();
  const auto params = InitParams<double>(cfg, 3);
  std::mt19937_64 rng(43);
  const Eigen::VectorXd x = arnse::testing::RandomSignal(rng, 200);
  auto run = [&](std::uint64_t seed) {
    ad::Tape<double> tape(true, seed);
    ArnGraph<double> graph(&tape, params);
    return Eigen::MatrixXd(ArnForward(tape.Constant(x), graph, cfg, true).value());
  };
  CHECK(run(1) == run(1));
  CHECK(run(1) != run(2));
}

TEST_CASE("single and double precision agree closely") {
  const ArnConfig cfg = ArnConfig::Toy();
  const auto pd = InitParams<double>(cfg, 4);
  ParamSet<float> pf;
  for (const auto& [k, v] : pd) pf.emplace(k, v.cast<float>());
  std::mt19937_64 rng(44);
  const AudioBuffer x(arnse::testing::RandomSignal(rng, 400), 16000);
  const AudioBuffer a = Enhance(x, pd, cfg);
  const AudioBuffer b = Enhance(x, pf, cfg);
  CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("network plus loss matches finite differences in every parameter") {
  const ArnConfig cfg = Tiny();
  const auto params = InitParams<double>(cfg, 7);
  std::mt19937_64 rng(45);
  const Eigen::Index m = 40;
  const Eigen::MatrixXd s = arnse::testing::RandomSignal(rng, m);
  const Eigen::MatrixXd y = s + arnse::testing::RandomSignal(rng, m, 0.3);
  LossConfig loss;
  loss.fft_size = 16;
  loss.hop = 8;

  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> inputs;
  for (const auto& [k, v] : params) {
    names.push_back(k);
    inputs.push_back(v);
  }
  const auto r = arnse::testing::CheckGradients(
      inputs, [&](ad::Tape<double>& tape, const std::vector<ad::Var<double>>& vars) {
        std::map<std::string, ad::Var<double>> bound;
        for (std::size_t i = 0; i < names.size(); ++i) bound.emplace(names[i], vars[i]);
        ArnGraph<double> graph(&tape, std::move(bound));
        auto est = ArnForward(tape.Constant(y), graph, cfg, /*train=*/true);
        return PcmLoss<double>(est, s, y, loss);
      });
  INFO("worst parameter " << names[r.input]);
  CHECK(r.checked == static_cast<std::size_t>(CountParams(cfg)));
  CHECK(r.max_error <= 1e-4);
}
