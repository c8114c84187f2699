// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ARNSE_ADAM_HPP_
#define ARNSE_ADAM_HPP_

#include <cmath>
#include <string>

#include "arnse/error.hpp"
#include "arnse/types.hpp"

namespace arnse {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Scalar>
struct AdamState {
  ParamSet<Scalar> m;
  ParamSet<Scalar> v;
  long step = 0;
};

template <typename Scalar>
double GlobalNorm(const GradSet<Scalar>& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) sq += static_cast<double>(g.squaredNorm());
  return std::sqrt(sq);
}

// Rescales all gradients so their global L2 norm is at most `max_norm`.
template <typename Scalar>
void ClipByGlobalNorm(GradSet<Scalar>* grads, double max_norm) {
  const double norm = GlobalNorm(*grads);
  if (norm <= max_norm || norm == 0.0) return;
  const Scalar factor = static_cast<Scalar>(max_norm / norm);
  for (auto& [name, g] : *grads) g *= factor;
}

// One Adam update with bias correction. Every parameter must have a gradient
// of the same shape. Nothing is modified when a gradient is non-finite.
template <typename Scalar>
void AdamStep(ParamSet<Scalar>* params, const GradSet<Scalar>& grads, AdamState<Scalar>* state,
              double lr, const AdamConfig& cfg = {}) {
  for (const auto& [name, p] : *params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw DataError("adam: missing gradient for " + name);
    if (it->second.rows() != p.rows() || it->second.cols() != p.cols()) {
      throw DataError("adam: gradient shape mismatch for " + name);
    }
    if (!it->second.allFinite()) throw NumericError("adam: non-finite gradient for " + name);
  }
  state->step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state->step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state->step));
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  for (auto& [name, p] : *params) {
    const MatrixX<Scalar>& g = grads.at(name);
    auto& m = state->m[name];
    auto& v = state->v[name];
    if (m.size() == 0) {
      m = MatrixX<Scalar>::Zero(p.rows(), p.cols());
      v = MatrixX<Scalar>::Zero(p.rows(), p.cols());
    }
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseAbs2();
    const Scalar step_size = static_cast<Scalar>(lr / bc1);
    const Scalar inv_bc2 = static_cast<Scalar>(1.0 / bc2);
    p.array() -= step_size * m.array() /
                 ((v.array() * inv_bc2).sqrt() + static_cast<Scalar>(cfg.eps));
  }
}

}  // namespace arnse

#endif  // ARNSE_ADAM_HPP_
