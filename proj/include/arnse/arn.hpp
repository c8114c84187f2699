// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

/**
 * Attentive recurrent network for time-domain enhancement.
 *
 *   noisy (M) -> frames (T x L) -> Linear -> [ARN block] x B -> Linear
 *             -> frames (T x L) -> overlap-add -> enhanced (M)
 *
 * Each block is
 *   h   = BLSTM(x)                          (hidden N/2 per direction)
 *   a   = h + MHSA(LayerNorm(h))            (unmasked, no positional code)
 *   out = a + W2 dropout(tanh(W1 LayerNorm(a)))
 *
 * Activations are row-major in time: a T x N matrix holds one frame per row.
 */
#ifndef ARNSE_ARN_HPP_
#define ARNSE_ARN_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "arnse/audio_io.hpp"
#include "arnse/autodiff.hpp"
#include "arnse/error.hpp"
#include "arnse/random.hpp"
#include "arnse/types.hpp"

namespace arnse {

struct ArnConfig {
  int frame_len = 256;
  int hop = 32;
  int latent = 1024;
  int num_blocks = 4;
  int heads = 8;
  int ffn_expansion = 4;
  double dropout = 0.05;

  void Validate() const;
  int LstmHidden() const { return latent / 2; }
  int HeadDim() const { return latent / heads; }

  // Small network used for tests and desk-scale runs.
  static ArnConfig Toy();

  bool operator==(const ArnConfig&) const = default;
};

struct ParamShape {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  double init_bound;     // uniform(-bound, bound)
  double init_offset;    // added after sampling (LSTM forget-gate bias)
  bool constant_init;    // layer-norm gains/biases: filled with init_offset
};

// Every learnable array, in a fixed order, with its shape and init rule.
std::vector<ParamShape> ArnParamShapes(const ArnConfig& cfg);

template <typename Scalar>
ParamSet<Scalar> InitParams(const ArnConfig& cfg, std::uint64_t seed) {
  cfg.Validate();
  std::mt19937_64 rng(seed);
  ParamSet<Scalar> params;
  for (const ParamShape& shape : ArnParamShapes(cfg)) {
    MatrixX<Scalar> m(shape.rows, shape.cols);
    if (shape.constant_init) {
      m.setConstant(static_cast<Scalar>(shape.init_offset));
    } else {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          m(i, j) = static_cast<Scalar>((2.0 * UnitUniform(rng()) - 1.0) * shape.init_bound);
        }
      }
    }
    params.emplace(shape.name, std::move(m));
  }
  // LSTM forget-gate bias +1: second quarter of each bias row.
  for (auto& [name, m] : params) {
    if (name.find(".lstm_") != std::string::npos && name.ends_with(".bias")) {
      const Eigen::Index h = m.cols() / 4;
      m.middleCols(h, h).array() += Scalar(1);
    }
  }
  return params;
}

// Throws if `params` does not hold exactly the arrays `cfg` requires.
template <typename Scalar>
void CheckParams(const ArnConfig& cfg, const ParamSet<Scalar>& params) {
  const auto shapes = ArnParamShapes(cfg);
  if (shapes.size() != params.size()) throw DataError("parameter set does not match configuration");
  for (const ParamShape& s : shapes) {
    auto it = params.find(s.name);
    if (it == params.end()) throw DataError("missing parameter " + s.name);
    if (it->second.rows() != s.rows || it->second.cols() != s.cols) {
      throw DataError("parameter " + s.name + " has the wrong shape");
    }
    if (!it->second.allFinite()) throw NumericError("parameter " + s.name + " is not finite");
  }
}

// Binds a ParamSet to a tape so the network can be evaluated (and
// differentiated) on it.
template <typename Scalar>
class ArnGraph {
 public:
  using Var = ad::Var<Scalar>;

  ArnGraph(ad::Tape<Scalar>* tape, const ParamSet<Scalar>& params) : tape_(tape) {
    for (const auto& [name, value] : params) vars_.emplace(name, tape->Parameter(value));
  }

  // Binds leaves that already live on `tape`.
  ArnGraph(ad::Tape<Scalar>* tape, std::map<std::string, Var> vars)
      : tape_(tape), vars_(std::move(vars)) {}

  Var operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw DataError("unknown parameter " + name);
    return it->second;
  }

  ad::Tape<Scalar>* tape() const { return tape_; }

  GradSet<Scalar> Grads() const {
    GradSet<Scalar> grads;
    for (const auto& [name, var] : vars_) grads.emplace(name, tape_->Grad(var));
    return grads;
  }

 private:
  ad::Tape<Scalar>* tape_;
  std::map<std::string, Var> vars_;
};

inline std::string BlockPrefix(int block) { return "block" + std::to_string(block) + "."; }

// Linear layer on rows: x W + b.
template <typename Scalar>
ad::Var<Scalar> Linear(ad::Var<Scalar> x, const ArnGraph<Scalar>& g, const std::string& prefix) {
  return ad::AddRowwise(ad::MatMul(x, g[prefix + "weight"]), g[prefix + "bias"]);
}

// One LSTM direction: `prefix` selects lstm_fwd. / lstm_bwd. arrays.
template <typename Scalar>
ad::Var<Scalar> LstmDirection(ad::Var<Scalar> x, const ArnGraph<Scalar>& g,
                              const std::string& prefix, bool reverse) {
  auto pre = ad::AddRowwise(ad::MatMul(x, g[prefix + "w_ih"]), g[prefix + "bias"]);
  return ad::LstmRecurrence(pre, g[prefix + "w_hh"], reverse);
}

// T x N -> T x N; forward and backward hidden states concatenated.
template <typename Scalar>
ad::Var<Scalar> BiLstm(ad::Var<Scalar> x, const ArnGraph<Scalar>& g, int block) {
  const std::string p = BlockPrefix(block);
  auto fwd = LstmDirection(x, g, p + "lstm_fwd.", false);
  auto bwd = LstmDirection(x, g, p + "lstm_bwd.", true);
  return ad::ConcatCols<Scalar>({fwd, bwd});
}

// Unmasked multi-head self-attention without the residual.
template <typename Scalar>
ad::Var<Scalar> SelfAttention(ad::Var<Scalar> x, const ArnGraph<Scalar>& g, int block,
                              const ArnConfig& cfg) {
  const std::string p = BlockPrefix(block) + "attn.";
  auto q = ad::MatMul(x, g[p + "w_q"]);
  auto k = ad::MatMul(x, g[p + "w_k"]);
  auto v = ad::MatMul(x, g[p + "w_v"]);
  const int d = cfg.HeadDim();
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(d));
  std::vector<ad::Var<Scalar>> heads;
  heads.reserve(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h) {
    heads.push_back(ad::Attention(ad::SliceCols(q, h * d, d), ad::SliceCols(k, h * d, d),
                                  ad::SliceCols(v, h * d, d), scale));
  }
  auto merged = cfg.heads == 1 ? heads.front() : ad::ConcatCols(heads);
  return ad::MatMul(merged, g[p + "w_o"]);
}

template <typename Scalar>
ad::Var<Scalar> FeedForward(ad::Var<Scalar> x, const ArnGraph<Scalar>& g, int block,
                            const ArnConfig& cfg, bool train) {
  const std::string p = BlockPrefix(block) + "ffn.";
  auto hidden = ad::Tanh(ad::MatMul(x, g[p + "w1"]));
  return ad::MatMul(ad::Dropout(hidden, cfg.dropout, train), g[p + "w2"]);
}

template <typename Scalar>
ad::Var<Scalar> ArnBlock(ad::Var<Scalar> x, const ArnGraph<Scalar>& g, int block,
                         const ArnConfig& cfg, bool train) {
  const std::string p = BlockPrefix(block);
  auto h = BiLstm(x, g, block);
  auto normed = ad::LayerNorm(h, g[p + "attn_norm.gain"], g[p + "attn_norm.bias"]);
  auto a = ad::Add(h, SelfAttention(normed, g, block, cfg));
  auto normed2 = ad::LayerNorm(a, g[p + "ffn_norm.gain"], g[p + "ffn_norm.bias"]);
  return ad::Add(a, FeedForward(normed2, g, block, cfg, train));
}

// Full network on an M x 1 noisy signal; returns the M x 1 estimate.
template <typename Scalar>
ad::Var<Scalar> ArnForward(ad::Var<Scalar> noisy, const ArnGraph<Scalar>& g, const ArnConfig& cfg,
                           bool train) {
  if (noisy.cols() != 1) throw DataError("arn: input must be a column signal");
  if (noisy.rows() < cfg.frame_len) throw DataError("input shorter than one frame");
  auto frames = ad::Frame(noisy, cfg.frame_len, cfg.hop);
  auto x = Linear(frames, g, "encoder.");
  for (int b = 0; b < cfg.num_blocks; ++b) x = ArnBlock(x, g, b, cfg, train);
  auto out_frames = Linear(x, g, "decoder.");
  return ad::OverlapAddFrames(out_frames, cfg.hop, noisy.rows());
}

// Eval-mode enhancement of one utterance.
template <typename Scalar>
AudioBuffer Enhance(const AudioBuffer& noisy, const ParamSet<Scalar>& params, const ArnConfig& cfg) {
  ad::Tape<Scalar> tape(/*record=*/false);
  ArnGraph<Scalar> graph(&tape, params);
  auto x = tape.Constant(noisy.samples.cast<Scalar>());
  auto y = ArnForward(x, graph, cfg, /*train=*/false);
  return AudioBuffer(y.value().col(0).template cast<double>(), noisy.sample_rate);
}

}  // namespace arnse

#endif  // ARNSE_ARN_HPP_
