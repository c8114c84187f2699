// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "arnse/arn.hpp"

namespace arnse {

void ArnConfig::Validate() const {
  if (frame_len <= 0) throw ConfigError("frame_len must be positive");
  if (hop <= 0 || hop > frame_len) throw ConfigError("hop must be in (0, frame_len]");
  if (latent <= 0 || latent % 2 != 0) throw ConfigError("latent width must be positive and even");
  if (heads <= 0 || latent % heads != 0) throw ConfigError("latent width must be divisible by heads");
  if (num_blocks < 0) throw ConfigError("num_blocks must be non-negative");
  if (ffn_expansion <= 0) throw ConfigError("ffn_expansion must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
}

ArnConfig ArnConfig::Toy() {
  ArnConfig cfg;
  cfg.frame_len = 16;
  cfg.hop = 4;
  cfg.latent = 16;
  cfg.num_blocks = 2;
  cfg.heads = 2;
  cfg.ffn_expansion = 4;
  cfg.dropout = 0.05;
  return cfg;
}

std::vector<ParamShape> ArnParamShapes(const ArnConfig& cfg) {
  cfg.Validate();
  const Eigen::Index n = cfg.latent;
  const Eigen::Index l = cfg.frame_len;
  const Eigen::Index h = cfg.LstmHidden();
  const Eigen::Index f = static_cast<Eigen::Index>(cfg.ffn_expansion) * n;
  auto bound = [](Eigen::Index fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };

  std::vector<ParamShape> shapes;
  auto add = [&shapes](std::string name, Eigen::Index rows, Eigen::Index cols, double b) {
    shapes.push_back({std::move(name), rows, cols, b, 0.0, false});
  };
  auto add_const = [&shapes](std::string name, Eigen::Index cols, double value) {
    shapes.push_back({std::move(name), 1, cols, 0.0, value, true});
  };

  add("encoder.weight", l, n, bound(l));
  add("encoder.bias", 1, n, bound(l));
  for (int b = 0; b < cfg.num_blocks; ++b) {
    const std::string p = BlockPrefix(b);
    for (const char* dir : {"lstm_fwd.", "lstm_bwd."}) {
      add(p + dir + "w_ih", n, 4 * h, bound(n));
      add(p + dir + "w_hh", h, 4 * h, bound(h));
      add(p + dir + "bias", 1, 4 * h, bound(n));
    }
    add_const(p + "attn_norm.gain", n, 1.0);
    add_const(p + "attn_norm.bias", n, 0.0);
    for (const char* w : {"attn.w_q", "attn.w_k", "attn.w_v", "attn.w_o"}) add(p + w, n, n, bound(n));
    add_const(p + "ffn_norm.gain", n, 1.0);
    add_const(p + "ffn_norm.bias", n, 0.0);
    add(p + "ffn.w1", n, f, bound(n));
    add(p + "ffn.w2", f, n, bound(f));
  }
  add("decoder.weight", n, l, bound(n));
  add("decoder.bias", 1, l, bound(n));
  return shapes;
}

}  // namespace arnse
