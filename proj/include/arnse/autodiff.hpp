// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

/**
 * Reverse-mode automatic differentiation over dense 2-D arrays.
 *
 * A Tape owns every value produced during a forward pass. Operations are
 * free functions on Var handles and append a node to the tape; when the tape
 * records gradients each node also keeps a closure that accumulates the
 * vector-Jacobian product into its inputs. Broadcasting is never implicit:
 * row-vector biases go through AddRowwise.
 *
 * Scalars are 1x1 matrices. Signals are column vectors (M x 1).
 */
#ifndef ARNSE_AUTODIFF_HPP_
#define ARNSE_AUTODIFF_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "arnse/dsp.hpp"
#include "arnse/error.hpp"
#include "arnse/types.hpp"

namespace arnse {
namespace ad {

template <typename Scalar>
class Tape;

template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  int id = -1;

  const MatrixX<Scalar>& value() const { return tape->Value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <typename Scalar>
class Tape {
 public:
  using Matrix = MatrixX<Scalar>;

  explicit Tape(bool record = true, std::uint64_t seed = 0) : record_(record), rng_(seed) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::mt19937_64& rng() { return rng_; }
  std::size_t size() const { return nodes_.size(); }

  Var<Scalar> Leaf(Matrix value, bool requires_grad) {
    return Push(std::move(value), requires_grad && record_, nullptr);
  }
  Var<Scalar> Constant(Matrix value) { return Leaf(std::move(value), false); }
  Var<Scalar> Parameter(Matrix value) { return Leaf(std::move(value), true); }

  const Matrix& Value(Var<Scalar> v) const { return nodes_[v.id].value; }
  bool RequiresGrad(Var<Scalar> v) const { return nodes_[v.id].requires_grad; }

  // Gradient of the last Backward() target with respect to `v`; zeros when
  // `v` was not reached.
  Matrix Grad(Var<Scalar> v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  // Appends an operation result. `backward` runs only if some input requires
  // a gradient; it receives the gradient flowing into this node.
  Var<Scalar> Push(Matrix value, bool requires_grad,
                   std::function<void(const Matrix&)> backward) {
    if (!value.allFinite()) throw NumericError("non-finite value produced in forward pass");
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad && record_;
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var<Scalar>{this, static_cast<int>(nodes_.size()) - 1};
  }

  template <typename Derived>
  void Accumulate(Var<Scalar> v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  void Backward(Var<Scalar> loss) {
    if (loss.tape != this) throw ConfigError("loss belongs to a different tape");
    const Matrix& lv = Value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) throw DataError("backward requires a scalar loss");
    if (!record_) throw ConfigError("backward on a tape that does not record gradients");
    for (Node& n : nodes_) n.grad.resize(0, 0);
    nodes_[loss.id].grad = Matrix::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.backward && n.grad.size() != 0) {
        // Closures only accumulate into earlier nodes, so the vector is not
        // resized while `n` is borrowed.
        Matrix g = std::move(n.grad);
        n.backward(g);
        nodes_[i].grad = std::move(g);
      }
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void(const Matrix&)> backward;
  };

  bool record_;
  std::mt19937_64 rng_;
  std::vector<Node> nodes_;
};

namespace detail {

template <typename Scalar>
bool AnyGrad(std::initializer_list<Var<Scalar>> vars) {
  for (const auto& v : vars) {
    if (v.tape->RequiresGrad(v)) return true;
  }
  return false;
}

template <typename Scalar>
void SameTape(Var<Scalar> a, Var<Scalar> b) {
  if (a.tape != b.tape) throw ConfigError("operands belong to different tapes");
}

template <typename Scalar>
void SameShape(Var<Scalar> a, Var<Scalar> b, const char* op) {
  SameTape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DataError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra.
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> MatMul(Var<Scalar> a, Var<Scalar> b) {
  detail::SameTape(a, b);
  if (a.cols() != b.rows()) throw DataError("matmul: inner dimensions differ");
  Tape<Scalar>* tape = a.tape;
  return tape->Push(a.value() * b.value(), detail::AnyGrad({a, b}),
                    [tape, a, b](const MatrixX<Scalar>& g) {
                      if (tape->RequiresGrad(a)) tape->Accumulate(a, g * b.value().transpose());
                      if (tape->RequiresGrad(b)) tape->Accumulate(b, a.value().transpose() * g);
                    });
}

template <typename Scalar>
Var<Scalar> Add(Var<Scalar> a, Var<Scalar> b) {
  detail::SameShape(a, b, "add");
  Tape<Scalar>* tape = a.tape;
  return tape->Push(a.value() + b.value(), detail::AnyGrad({a, b}),
                    [tape, a, b](const MatrixX<Scalar>& g) {
                      tape->Accumulate(a, g);
                      tape->Accumulate(b, g);
                    });
}

template <typename Scalar>
Var<Scalar> Sub(Var<Scalar> a, Var<Scalar> b) {
  detail::SameShape(a, b, "sub");
  Tape<Scalar>* tape = a.tape;
  return tape->Push(a.value() - b.value(), detail::AnyGrad({a, b}),
                    [tape, a, b](const MatrixX<Scalar>& g) {
                      tape->Accumulate(a, g);
                      tape->Accumulate(b, -g);
                    });
}

// Elementwise product.
template <typename Scalar>
Var<Scalar> Mul(Var<Scalar> a, Var<Scalar> b) {
  detail::SameShape(a, b, "mul");
  Tape<Scalar>* tape = a.tape;
  return tape->Push(a.value().cwiseProduct(b.value()), detail::AnyGrad({a, b}),
                    [tape, a, b](const MatrixX<Scalar>& g) {
                      if (tape->RequiresGrad(a)) tape->Accumulate(a, g.cwiseProduct(b.value()));
                      if (tape->RequiresGrad(b)) tape->Accumulate(b, g.cwiseProduct(a.value()));
                    });
}

template <typename Scalar>
Var<Scalar> Scale(Var<Scalar> a, Scalar c) {
  Tape<Scalar>* tape = a.tape;
  return tape->Push(a.value() * c, detail::AnyGrad({a}),
                    [tape, a, c](const MatrixX<Scalar>& g) { tape->Accumulate(a, g * c); });
}

// Adds a 1 x C row to every row of an R x C matrix.
template <typename Scalar>
Var<Scalar> AddRowwise(Var<Scalar> a, Var<Scalar> row) {
  detail::SameTape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw DataError("add_rowwise: bias shape");
  Tape<Scalar>* tape = a.tape;
  MatrixX<Scalar> out = a.value();
  out.rowwise() += row.value().row(0);
  return tape->Push(std::move(out), detail::AnyGrad({a, row}),
                    [tape, a, row](const MatrixX<Scalar>& g) {
                      tape->Accumulate(a, g);
                      if (tape->RequiresGrad(row)) tape->Accumulate(row, g.colwise().sum());
                    });
}

template <typename Scalar>
Var<Scalar> Transpose(Var<Scalar> a) {
  Tape<Scalar>* tape = a.tape;
  return tape->Push(a.value().transpose(), detail::AnyGrad({a}),
                    [tape, a](const MatrixX<Scalar>& g) { tape->Accumulate(a, g.transpose()); });
}

// ---------------------------------------------------------------------------
// Elementwise nonlinearities.
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> Tanh(Var<Scalar> a) {
  Tape<Scalar>* tape = a.tape;
  MatrixX<Scalar> y = a.value().array().tanh().matrix();
  const int id = tape->size();
  return tape->Push(std::move(y), detail::AnyGrad({a}), [tape, a, id](const MatrixX<Scalar>& g) {
    const auto& y = tape->Value(Var<Scalar>{tape, id});
    tape->Accumulate(a, (g.array() * (Scalar(1) - y.array().square())).matrix());
  });
}

template <typename Scalar>
MatrixX<Scalar> SigmoidValue(const MatrixX<Scalar>& x) {
  return x.unaryExpr([](Scalar v) {
    return v >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-v))
                  : std::exp(v) / (Scalar(1) + std::exp(v));
  });
}

template <typename Scalar>
Var<Scalar> Sigmoid(Var<Scalar> a) {
  Tape<Scalar>* tape = a.tape;
  const int id = tape->size();
  return tape->Push(SigmoidValue<Scalar>(a.value()), detail::AnyGrad({a}),
                    [tape, a, id](const MatrixX<Scalar>& g) {
                      const auto& y = tape->Value(Var<Scalar>{tape, id});
                      tape->Accumulate(a, (g.array() * y.array() * (Scalar(1) - y.array())).matrix());
                    });
}

template <typename Scalar>
Var<Scalar> Exp(Var<Scalar> a) {
  Tape<Scalar>* tape = a.tape;
  const int id = tape->size();
  return tape->Push(a.value().array().exp().matrix(), detail::AnyGrad({a}),
                    [tape, a, id](const MatrixX<Scalar>& g) {
                      tape->Accumulate(a, g.cwiseProduct(tape->Value(Var<Scalar>{tape, id})));
                    });
}

template <typename Scalar>
Var<Scalar> Log(Var<Scalar> a) {
  if ((a.value().array() <= Scalar(0)).any()) throw NumericError("log of non-positive value");
  Tape<Scalar>* tape = a.tape;
  return tape->Push(a.value().array().log().matrix(), detail::AnyGrad({a}),
                    [tape, a](const MatrixX<Scalar>& g) {
                      tape->Accumulate(a, g.cwiseQuotient(a.value()));
                    });
}

template <typename Scalar>
Var<Scalar> Sqrt(Var<Scalar> a) {
  if ((a.value().array() <= Scalar(0)).any()) throw NumericError("sqrt of non-positive value");
  Tape<Scalar>* tape = a.tape;
  const int id = tape->size();
  return tape->Push(a.value().cwiseSqrt(), detail::AnyGrad({a}),
                    [tape, a, id](const MatrixX<Scalar>& g) {
                      const auto& y = tape->Value(Var<Scalar>{tape, id});
                      tape->Accumulate(a, (g.array() / (Scalar(2) * y.array())).matrix());
                    });
}

// |x| with subgradient 0 at exactly 0.
template <typename Scalar>
Var<Scalar> Abs(Var<Scalar> a) {
  Tape<Scalar>* tape = a.tape;
  return tape->Push(a.value().cwiseAbs(), detail::AnyGrad({a}),
                    [tape, a](const MatrixX<Scalar>& g) {
                      MatrixX<Scalar> sign = a.value().unaryExpr([](Scalar v) {
                        return v > 0 ? Scalar(1) : (v < 0 ? Scalar(-1) : Scalar(0));
                      });
                      tape->Accumulate(a, g.cwiseProduct(sign));
                    });
}

// ---------------------------------------------------------------------------
// Normalization.
// ---------------------------------------------------------------------------

template <typename Scalar>
MatrixX<Scalar> SoftmaxRowsValue(const MatrixX<Scalar>& x) {
  // Whole-matrix passes keep the exp contiguous (storage is column-major).
  const VectorX<Scalar> row_max = x.rowwise().maxCoeff();
  MatrixX<Scalar> y = (x.colwise() - row_max).array().exp().matrix();
  const VectorX<Scalar> row_sum = y.rowwise().sum();
  y.array().colwise() /= row_sum.array();
  return y;
}

// Softmax along the last axis (each row).
template <typename Scalar>
Var<Scalar> SoftmaxRows(Var<Scalar> a) {
  Tape<Scalar>* tape = a.tape;
  const int id = tape->size();
  return tape->Push(SoftmaxRowsValue<Scalar>(a.value()), detail::AnyGrad({a}),
                    [tape, a, id](const MatrixX<Scalar>& g) {
                      const auto& y = tape->Value(Var<Scalar>{tape, id});
                      VectorX<Scalar> dot = (g.cwiseProduct(y)).rowwise().sum();
                      MatrixX<Scalar> dx = g;
                      dx.colwise() -= dot;
                      tape->Accumulate(a, dx.cwiseProduct(y));
                    });
}

// Per-row normalization to zero mean and unit variance, then gain and bias
// (both 1 x C).
template <typename Scalar>
Var<Scalar> LayerNorm(Var<Scalar> x, Var<Scalar> gain, Var<Scalar> bias, Scalar eps = Scalar(1e-5)) {
  detail::SameTape(x, gain);
  detail::SameTape(x, bias);
  const Eigen::Index cols = x.cols();
  if (gain.rows() != 1 || gain.cols() != cols || bias.rows() != 1 || bias.cols() != cols) {
    throw DataError("layer_norm: gain/bias shape");
  }
  Tape<Scalar>* tape = x.tape;
  const MatrixX<Scalar>& xv = x.value();
  VectorX<Scalar> mean = xv.rowwise().mean();
  MatrixX<Scalar> centered = xv.colwise() - mean;
  VectorX<Scalar> inv_std =
      ((centered.array().square().rowwise().sum() / Scalar(cols)) + eps).rsqrt().matrix();
  MatrixX<Scalar> xhat = centered.array().colwise() * inv_std.array();
  MatrixX<Scalar> out = xhat.array().rowwise() * gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  return tape->Push(std::move(out), detail::AnyGrad({x, gain, bias}),
                    [tape, x, gain, bias, xhat, inv_std](const MatrixX<Scalar>& g) {
                      if (tape->RequiresGrad(gain)) {
                        tape->Accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                      }
                      if (tape->RequiresGrad(bias)) tape->Accumulate(bias, g.colwise().sum());
                      if (tape->RequiresGrad(x)) {
                        MatrixX<Scalar> gx = g.array().rowwise() * gain.value().row(0).array();
                        VectorX<Scalar> m1 = gx.rowwise().mean();
                        VectorX<Scalar> m2 = gx.cwiseProduct(xhat).rowwise().mean();
                        MatrixX<Scalar> dx = gx;
                        dx.colwise() -= m1;
                        dx -= (xhat.array().colwise() * m2.array()).matrix();
                        dx = dx.array().colwise() * inv_std.array();
                        tape->Accumulate(x, dx);
                      }
                    });
}

// ---------------------------------------------------------------------------
// Shape manipulation.
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> ConcatCols(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw DataError("concat: no inputs");
  Tape<Scalar>* tape = parts.front().tape;
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    detail::SameTape(parts.front(), p);
    if (p.rows() != rows) throw DataError("concat_cols: row count mismatch");
    cols += p.cols();
    any_grad = any_grad || tape->RequiresGrad(p);
  }
  MatrixX<Scalar> out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return tape->Push(std::move(out), any_grad, [tape, parts](const MatrixX<Scalar>& g) {
    Eigen::Index c = 0;
    for (const auto& p : parts) {
      tape->Accumulate(p, g.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

template <typename Scalar>
Var<Scalar> ConcatRows(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw DataError("concat: no inputs");
  Tape<Scalar>* tape = parts.front().tape;
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    detail::SameTape(parts.front(), p);
    if (p.cols() != cols) throw DataError("concat_rows: column count mismatch");
    rows += p.rows();
    any_grad = any_grad || tape->RequiresGrad(p);
  }
  MatrixX<Scalar> out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return tape->Push(std::move(out), any_grad, [tape, parts](const MatrixX<Scalar>& g) {
    Eigen::Index r = 0;
    for (const auto& p : parts) {
      tape->Accumulate(p, g.middleRows(r, p.rows()));
      r += p.rows();
    }
  });
}

template <typename Scalar>
Var<Scalar> SliceRows(Var<Scalar> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw DataError("slice_rows: out of range");
  Tape<Scalar>* tape = a.tape;
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return tape->Push(a.value().middleRows(start, count), detail::AnyGrad({a}),
                    [tape, a, start, count, rows, cols](const MatrixX<Scalar>& g) {
                      MatrixX<Scalar> full = MatrixX<Scalar>::Zero(rows, cols);
                      full.middleRows(start, count) = g;
                      tape->Accumulate(a, full);
                    });
}

template <typename Scalar>
Var<Scalar> SliceCols(Var<Scalar> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw DataError("slice_cols: out of range");
  Tape<Scalar>* tape = a.tape;
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return tape->Push(a.value().middleCols(start, count), detail::AnyGrad({a}),
                    [tape, a, start, count, rows, cols](const MatrixX<Scalar>& g) {
                      MatrixX<Scalar> full = MatrixX<Scalar>::Zero(rows, cols);
                      full.middleCols(start, count) = g;
                      tape->Accumulate(a, full);
                    });
}

// Inverted dropout; identity when not training or when p == 0.
template <typename Scalar>
Var<Scalar> Dropout(Var<Scalar> a, double p, bool train) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must be in [0, 1)");
  if (!train || p == 0.0) return a;
  Tape<Scalar>* tape = a.tape;
  std::bernoulli_distribution keep(1.0 - p);
  const Scalar scale = Scalar(1.0 / (1.0 - p));
  MatrixX<Scalar> mask(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < mask.cols(); ++j) {
    for (Eigen::Index i = 0; i < mask.rows(); ++i) {
      mask(i, j) = keep(tape->rng()) ? scale : Scalar(0);
    }
  }
  return tape->Push(a.value().cwiseProduct(mask), detail::AnyGrad({a}),
                    [tape, a, mask](const MatrixX<Scalar>& g) {
                      tape->Accumulate(a, g.cwiseProduct(mask));
                    });
}

// ---------------------------------------------------------------------------
// Reductions.
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> Sum(Var<Scalar> a) {
  Tape<Scalar>* tape = a.tape;
  const Eigen::Index rows = a.rows(), cols = a.cols();
  MatrixX<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return tape->Push(std::move(out), detail::AnyGrad({a}),
                    [tape, a, rows, cols](const MatrixX<Scalar>& g) {
                      tape->Accumulate(a, MatrixX<Scalar>::Constant(rows, cols, g(0, 0)));
                    });
}

template <typename Scalar>
Var<Scalar> Mean(Var<Scalar> a) {
  return Scale(Sum(a), Scalar(1) / Scalar(a.value().size()));
}

// ---------------------------------------------------------------------------
// Signal-level operations.
// ---------------------------------------------------------------------------

// M x 1 signal to T x L frames (tail zero-padded).
template <typename Scalar>
Var<Scalar> Frame(Var<Scalar> x, int frame_len, int hop) {
  if (x.cols() != 1) throw DataError("frame: expects a column signal");
  Tape<Scalar>* tape = x.tape;
  const Eigen::Index n = x.rows();
  MatrixX<Scalar> frames = FrameSignal(x.value().col(0), frame_len, hop);
  return tape->Push(std::move(frames), detail::AnyGrad({x}),
                    [tape, x, n, frame_len, hop](const MatrixX<Scalar>& g) {
                      MatrixX<Scalar> gx = MatrixX<Scalar>::Zero(n, 1);
                      for (Eigen::Index t = 0; t < g.rows(); ++t) {
                        const Eigen::Index start = t * hop;
                        const Eigen::Index len = std::min<Eigen::Index>(frame_len, n - start);
                        if (len > 0) gx.col(0).segment(start, len) += g.row(t).head(len).transpose();
                      }
                      tape->Accumulate(x, gx);
                    });
}

// T x L frames to an M x 1 signal via count-normalized overlap-add.
template <typename Scalar>
Var<Scalar> OverlapAddFrames(Var<Scalar> frames, int hop, Eigen::Index num_samples) {
  Tape<Scalar>* tape = frames.tape;
  const Eigen::Index rows = frames.rows();
  const int frame_len = static_cast<int>(frames.cols());
  MatrixX<Scalar> out = OverlapAdd(frames.value(), hop, num_samples);
  return tape->Push(std::move(out), detail::AnyGrad({frames}),
                    [tape, frames, rows, frame_len, hop, num_samples](const MatrixX<Scalar>& g) {
                      const Eigen::VectorXd counts = OverlapCounts(rows, frame_len, hop, num_samples);
                      VectorX<Scalar> scaled = g.col(0).cwiseQuotient(counts.cast<Scalar>());
                      MatrixX<Scalar> gf = MatrixX<Scalar>::Zero(rows, frame_len);
                      for (Eigen::Index t = 0; t < rows; ++t) {
                        const Eigen::Index start = t * hop;
                        const Eigen::Index len = std::min<Eigen::Index>(frame_len, num_samples - start);
                        if (len > 0) gf.row(t).head(len) = scaled.segment(start, len).transpose();
                      }
                      tape->Accumulate(frames, gf);
                    });
}

// ---------------------------------------------------------------------------
// Fused sequence primitives.
// ---------------------------------------------------------------------------

/**
 * LSTM recurrence over the rows of `pre` (T x 4h), the input projection plus
 * bias already applied. Gate column blocks are ordered i, f, g, o. With
 * `reverse` the sequence is scanned from the last row to the first; row t of
 * the output is always the hidden state at frame t. Zero initial state.
 */
template <typename Scalar>
Var<Scalar> LstmRecurrence(Var<Scalar> pre, Var<Scalar> w_hh, bool reverse) {
  detail::SameTape(pre, w_hh);
  const Eigen::Index hidden = w_hh.rows();
  if (w_hh.cols() != 4 * hidden || pre.cols() != 4 * hidden) {
    throw DataError("lstm: gate dimensions do not match hidden size");
  }
  Tape<Scalar>* tape = pre.tape;
  const Eigen::Index steps = pre.rows();
  const MatrixX<Scalar>& z_in = pre.value();
  const MatrixX<Scalar>& whh = w_hh.value();

  MatrixX<Scalar> gates(steps, 4 * hidden);  // activated i, f, g, o
  MatrixX<Scalar> cells(steps, hidden);
  MatrixX<Scalar> hs(steps, hidden);
  RowVectorX<Scalar> h = RowVectorX<Scalar>::Zero(hidden);
  RowVectorX<Scalar> c = RowVectorX<Scalar>::Zero(hidden);
  RowVectorX<Scalar> z(4 * hidden);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    z.noalias() = z_in.row(t) + h * whh;
    auto sig = [](Scalar v) {
      return v >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-v)) : std::exp(v) / (Scalar(1) + std::exp(v));
    };
    for (Eigen::Index j = 0; j < hidden; ++j) {
      const Scalar ig = sig(z[j]);
      const Scalar fg = sig(z[hidden + j]);
      const Scalar gg = std::tanh(z[2 * hidden + j]);
      const Scalar og = sig(z[3 * hidden + j]);
      gates(t, j) = ig;
      gates(t, hidden + j) = fg;
      gates(t, 2 * hidden + j) = gg;
      gates(t, 3 * hidden + j) = og;
      c[j] = fg * c[j] + ig * gg;
      h[j] = og * std::tanh(c[j]);
    }
    cells.row(t) = c;
    hs.row(t) = h;
  }

  return tape->Push(
      hs, detail::AnyGrad({pre, w_hh}),
      [tape, pre, w_hh, gates, cells, hs, reverse, steps, hidden](const MatrixX<Scalar>& g) {
        const MatrixX<Scalar>& whh = w_hh.value();
        MatrixX<Scalar> dpre(steps, 4 * hidden);
        MatrixX<Scalar> dwhh = MatrixX<Scalar>::Zero(hidden, 4 * hidden);
        RowVectorX<Scalar> dh_next = RowVectorX<Scalar>::Zero(hidden);
        RowVectorX<Scalar> dc_next = RowVectorX<Scalar>::Zero(hidden);
        RowVectorX<Scalar> dz(4 * hidden);
        for (Eigen::Index s = steps - 1; s >= 0; --s) {
          const Eigen::Index t = reverse ? steps - 1 - s : s;
          const bool first = (s == 0);
          const Eigen::Index prev = reverse ? t + 1 : t - 1;
          for (Eigen::Index j = 0; j < hidden; ++j) {
            const Scalar ig = gates(t, j), fg = gates(t, hidden + j);
            const Scalar gg = gates(t, 2 * hidden + j), og = gates(t, 3 * hidden + j);
            const Scalar tc = std::tanh(cells(t, j));
            const Scalar c_prev = first ? Scalar(0) : cells(prev, j);
            const Scalar dh = g(t, j) + dh_next[j];
            const Scalar dc = dh * og * (Scalar(1) - tc * tc) + dc_next[j];
            dz[j] = dc * gg * ig * (Scalar(1) - ig);
            dz[hidden + j] = dc * c_prev * fg * (Scalar(1) - fg);
            dz[2 * hidden + j] = dc * ig * (Scalar(1) - gg * gg);
            dz[3 * hidden + j] = dh * tc * og * (Scalar(1) - og);
            dc_next[j] = dc * fg;
          }
          dpre.row(t) = dz;
          if (!first) dwhh.noalias() += hs.row(prev).transpose() * dz;
          dh_next.noalias() = dz * whh.transpose();
        }
        tape->Accumulate(pre, dpre);
        tape->Accumulate(w_hh, dwhh);
      });
}

// Row-stochastic matrix softmax(q k^T * scale), computed without a tape.
template <typename Scalar>
MatrixX<Scalar> AttentionWeights(const MatrixX<Scalar>& q, const MatrixX<Scalar>& k, Scalar scale) {
  return SoftmaxRowsValue<Scalar>((q * k.transpose()) * scale);
}

/**
 * Unmasked scaled dot-product attention for one head:
 *   softmax(q k^T * scale) v.
 * A recording tape keeps the T x T weights for the backward pass; otherwise
 * rows are processed in blocks so long utterances stay within memory.
 */
template <typename Scalar>
Var<Scalar> Attention(Var<Scalar> q, Var<Scalar> k, Var<Scalar> v, Scalar scale) {
  detail::SameTape(q, k);
  detail::SameTape(q, v);
  if (q.cols() != k.cols() || k.rows() != v.rows()) throw DataError("attention: shape mismatch");
  Tape<Scalar>* tape = q.tape;
  const bool grad = detail::AnyGrad({q, k, v});
  if (!grad) {
    constexpr Eigen::Index kBlock = 256;
    MatrixX<Scalar> out(q.rows(), v.cols());
    for (Eigen::Index r = 0; r < q.rows(); r += kBlock) {
      const Eigen::Index n = std::min(kBlock, q.rows() - r);
      MatrixX<Scalar> w = AttentionWeights<Scalar>(q.value().middleRows(r, n), k.value(), scale);
      out.middleRows(r, n).noalias() = w * v.value();
    }
    return tape->Push(std::move(out), false, nullptr);
  }
  MatrixX<Scalar> w = AttentionWeights<Scalar>(q.value(), k.value(), scale);
  MatrixX<Scalar> out = w * v.value();
  return tape->Push(std::move(out), true, [tape, q, k, v, w, scale](const MatrixX<Scalar>& g) {
    if (tape->RequiresGrad(v)) tape->Accumulate(v, w.transpose() * g);
    MatrixX<Scalar> dw = g * v.value().transpose();
    VectorX<Scalar> dot = dw.cwiseProduct(w).rowwise().sum();
    dw.colwise() -= dot;
    MatrixX<Scalar> ds = dw.cwiseProduct(w) * scale;
    if (tape->RequiresGrad(q)) tape->Accumulate(q, ds * k.value());
    if (tape->RequiresGrad(k)) tape->Accumulate(k, ds.transpose() * q.value());
  });
}

// ---------------------------------------------------------------------------
// Operator sugar.
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) { return Add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a, Var<Scalar> b) { return Sub(a, b); }
template <typename Scalar>
Var<Scalar> operator*(Var<Scalar> a, Var<Scalar> b) { return MatMul(a, b); }

}  // namespace ad
}  // namespace arnse

#endif  // ARNSE_AUTODIFF_HPP_
