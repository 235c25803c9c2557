#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nbdoc/errors.hpp"
#include "nbdoc/numerics/kernels.hpp"
#include "nbdoc/numerics/tensor.hpp"
#include "nbdoc/util/rng.hpp"

namespace nbdoc::num {

// A trainable tensor with its gradient buffer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// Reverse-mode autodiff record. Ops append nodes in evaluation order;
// backward() walks them in reverse. Parameter nodes alias the Parameter's
// value and write gradients straight into Parameter::grad.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad)>;

  // With gradients disabled, parameters are recorded as read-only inputs and
  // no backward closures are kept.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Var constant(Tensor v) { return push(Node{std::move(v), nullptr, nullptr, {}, false, false, {}}); }

  Var param(Parameter& p) { return push(Node{{}, &p.value, &p.grad, {}, grad_enabled_, false, {}}); }
  Var param(const Parameter& p) {
    if (grad_enabled_) throw InvalidInput("const parameter on a tape with gradients enabled");
    return push(Node{{}, &p.value, nullptr, {}, false, false, {}});
  }

  Var make(Tensor v, bool requires_grad, Backward fn) {
    if (!requires_grad) fn = nullptr;
    return push(Node{std::move(v), nullptr, nullptr, {}, requires_grad, false, std::move(fn)});
  }

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.ext_value ? *n.ext_value : n.value;
  }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id); }

  // Gradient accumulator for node `id` (zero-initialized on first use).
  Tensor& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.ext_grad) return *n.ext_grad;
    if (!n.has_grad) {
      n.grad = Tensor(value(id).shape());
      n.has_grad = true;
    }
    return n.grad;
  }

  void backward(Var loss) {
    if (loss.tape != this) throw InvalidInput("backward on a Var from another tape");
    if (value(loss.id).size() != 1) throw ShapeError("backward needs a scalar loss");
    if (!requires_grad(loss.id)) return;
    grad(loss.id)[0] += 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && n.has_grad) n.backward(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }
  bool grad_enabled() const { return grad_enabled_; }

 private:
  struct Node {
    Tensor value;
    const Tensor* ext_value;
    Tensor* ext_grad;
    Tensor grad;
    bool requires_grad;
    bool has_grad;
    Backward backward;
  };

  Var push(Node n) {
    if (!n.ext_value && !n.value.all_finite()) {
      throw TrainingError("non-finite value produced at tape node " + std::to_string(nodes_.size()));
    }
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
  }

  std::deque<Node> nodes_;
  bool grad_enabled_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

namespace detail {

inline Tape& same_tape(Var a, Var b) {
  if (a.tape != b.tape || !a.tape) throw InvalidInput("operands belong to different tapes");
  return *a.tape;
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  Tensor out;
  gemm(a.value(), false, b.value(), false, out);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.make(std::move(out), rg, [a = a.id, b = b.id](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) gemm(g, false, t.value(b), true, t.grad(a), true);
    if (t.requires_grad(b)) gemm(t.value(a), true, g, false, t.grad(b), true);
  });
}

// a * b^T
inline Var matmul_nt(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  Tensor out;
  gemm(a.value(), false, b.value(), true, out);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.make(std::move(out), rg, [a = a.id, b = b.id](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) gemm(g, false, t.value(b), false, t.grad(a), true);
    if (t.requires_grad(b)) gemm(g, true, t.value(a), false, t.grad(b), true);
  });
}

inline Var add(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  detail::require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  axpy(1.0, b.value(), out);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.make(std::move(out), rg, [a = a.id, b = b.id](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) axpy(1.0, g, t.grad(a));
    if (t.requires_grad(b)) axpy(1.0, g, t.grad(b));
  });
}

// x [m x n] + row [1 x n] broadcast over rows.
inline Var add_row(Var x, Var row) {
  Tape& t = detail::same_tape(x, row);
  const Tensor& xv = x.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw ShapeError("add_row: " + shape_string(xv.shape()) + " + " + shape_string(rv.shape()));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv[j];
  }
  const bool rg = t.requires_grad(x) || t.requires_grad(row);
  return t.make(std::move(out), rg, [x = x.id, r = row.id](Tape& t, const Tensor& g) {
    if (t.requires_grad(x)) axpy(1.0, g, t.grad(x));
    if (t.requires_grad(r)) {
      Tensor& gr = t.grad(r);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j);
      }
    }
  });
}

// Elementwise product.
inline Var mul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  detail::require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.make(std::move(out), rg, [a = a.id, b = b.id](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      const Tensor& bv = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      const Tensor& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

inline Var scale(Var x, double s) {
  Tape& t = *x.tape;
  Tensor out = x.value();
  for (auto& v : out.values()) v *= s;
  return t.make(std::move(out), t.requires_grad(x), [x = x.id, s](Tape& t, const Tensor& g) {
    axpy(s, g, t.grad(x));
  });
}

// Row i of x scaled by w(i, 0); x [m x n], w [m x 1].
inline Var scale_rows_by_col(Var x, Var w) {
  Tape& t = detail::same_tape(x, w);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (wv.rows() != xv.rows() || wv.cols() != 1) {
    throw ShapeError("scale_rows_by_col: " + shape_string(xv.shape()) + " by " + shape_string(wv.shape()));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= wv[i];
  }
  const bool rg = t.requires_grad(x) || t.requires_grad(w);
  return t.make(std::move(out), rg, [x = x.id, w = w.id](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    if (t.requires_grad(x)) {
      Tensor& gx = t.grad(x);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) gx(i, j) += g(i, j) * wv[i];
      }
    }
    if (t.requires_grad(w)) {
      Tensor& gw = t.grad(w);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double s = 0;
        for (std::size_t j = 0; j < g.cols(); ++j) s += g(i, j) * xv(i, j);
        gw[i] += s;
      }
    }
  });
}

inline Var tanh(Var x) {
  Tape& t = *x.tape;
  Tensor out = x.value();
  for (auto& v : out.values()) v = std::tanh(v);
  return t.make(std::move(out), t.requires_grad(x), [x = x.id, self = t.size()](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

inline Var sigmoid(Var x) {
  Tape& t = *x.tape;
  Tensor out = x.value();
  for (auto& v : out.values()) v = sigmoid(v);
  return t.make(std::move(out), t.requires_grad(x), [x = x.id, self = t.size()](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  Tape& t = *parts.front().tape;
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  bool rg = false;
  for (const auto& p : parts) {
    detail::same_tape(parts.front(), p);
    if (p.rows() != m) throw ShapeError("concat_cols row counts differ");
    n += p.cols();
    rg = rg || t.requires_grad(p);
  }
  Tensor out(m, n);
  std::vector<std::size_t> ids, offs;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, off + j) = v(i, j);
    }
    ids.push_back(p.id);
    offs.push_back(off);
    off += v.cols();
  }
  return t.make(std::move(out), rg, [ids, offs](Tape& t, const Tensor& g) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.requires_grad(ids[k])) continue;
      Tensor& gp = t.grad(ids[k]);
      for (std::size_t i = 0; i < gp.rows(); ++i) {
        for (std::size_t j = 0; j < gp.cols(); ++j) gp(i, j) += g(i, offs[k] + j);
      }
    }
  });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  Tape& t = *parts.front().tape;
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  bool rg = false;
  for (const auto& p : parts) {
    detail::same_tape(parts.front(), p);
    if (p.cols() != n) throw ShapeError("concat_rows column counts differ");
    m += p.rows();
    rg = rg || t.requires_grad(p);
  }
  Tensor out(m, n);
  std::vector<std::size_t> ids, offs;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    std::copy(v.values().begin(), v.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(off * n));
    ids.push_back(p.id);
    offs.push_back(off);
    off += v.rows();
  }
  return t.make(std::move(out), rg, [ids, offs, n](Tape& t, const Tensor& g) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.requires_grad(ids[k])) continue;
      Tensor& gp = t.grad(ids[k]);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offs[k] * n + i];
    }
  });
}

inline Var slice_rows(Var x, std::size_t r0, std::size_t r1) {
  Tape& t = *x.tape;
  const Tensor& v = x.value();
  if (r0 > r1 || r1 > v.rows()) throw ShapeError("slice_rows out of bounds");
  const std::size_t n = v.cols();
  Tensor out(Shape{r1 - r0, n},
             std::vector<double>(v.values().begin() + static_cast<std::ptrdiff_t>(r0 * n),
                                 v.values().begin() + static_cast<std::ptrdiff_t>(r1 * n)));
  return t.make(std::move(out), t.requires_grad(x), [x = x.id, r0, n](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[r0 * n + i] += g[i];
  });
}

inline Var slice_cols(Var x, std::size_t c0, std::size_t c1) {
  Tape& t = *x.tape;
  const Tensor& v = x.value();
  if (c0 > c1 || c1 > v.cols()) throw ShapeError("slice_cols out of bounds");
  Tensor out(v.rows(), c1 - c0);
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = v(i, j);
  }
  return t.make(std::move(out), t.requires_grad(x), [x = x.id, c0](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j = 0; j < g.cols(); ++j) gx(i, c0 + j) += g(i, j);
    }
  });
}

// Same row-major data viewed as [rows x cols].
inline Var reshape(Var x, std::size_t rows, std::size_t cols) {
  Tape& t = *x.tape;
  if (rows * cols != x.value().size()) {
    throw ShapeError("reshape " + shape_string(x.value().shape()) + " to " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  Tensor out(Shape{rows, cols}, x.value().values());
  return t.make(std::move(out), t.requires_grad(x), [x = x.id](Tape& t, const Tensor& g) {
    axpy(1.0, g, t.grad(x));
  });
}

inline Var zeros(Tape& t, std::size_t rows, std::size_t cols) { return t.constant(Tensor(rows, cols)); }

// Reshapes to a single row [1 x size].
inline Var flatten(Var x) {
  Tape& t = *x.tape;
  Tensor out(Shape{1, x.value().size()}, x.value().values());
  return t.make(std::move(out), t.requires_grad(x), [x = x.id](Tape& t, const Tensor& g) {
    axpy(1.0, g, t.grad(x));
  });
}

inline Var sum_all(Var x) {
  Tape& t = *x.tape;
  double s = 0;
  for (double v : x.value().values()) s += v;
  return t.make(Tensor(Shape{1, 1}, s), t.requires_grad(x), [x = x.id](Tape& t, const Tensor& g) {
    for (auto& v : t.grad(x).values()) v += g[0];
  });
}

// Embedding lookup: row ids[i] of table becomes output row i.
inline Var gather_rows(Var table, const std::vector<int>& ids) {
  Tape& t = *table.tape;
  const Tensor& tv = table.value();
  const std::size_t n = tv.cols();
  Tensor out(ids.size(), n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= tv.rows()) {
      throw OutOfRange("embedding id " + std::to_string(ids[i]) + " outside table of " + std::to_string(tv.rows()) +
                       " rows");
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * n, n, out.data() + i * n);
  }
  return t.make(std::move(out), t.requires_grad(table), [tb = table.id, ids, n](Tape& t, const Tensor& g) {
    Tensor& gt = t.grad(tb);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double* dst = gt.data() + static_cast<std::size_t>(ids[i]) * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += g[i * n + j];
    }
  });
}

// Row-wise softmax with an optional per-column mask (see softmax_rows).
inline Var masked_softmax_rows(Var x, const Mask* mask = nullptr) {
  Tape& t = *x.tape;
  Tensor y = softmax_rows(x.value(), mask);
  return t.make(std::move(y), t.requires_grad(x), [x = x.id, self = t.size()](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) gx(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

// Inverted dropout: kept entries are scaled by 1/(1-p). Identity when not
// training or p == 0.
inline Var dropout(Var x, double p, bool training, util::Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw InvalidInput("dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return x;
  Tape& t = *x.tape;
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor mask(x.value().shape());
  for (auto& m : mask.values()) m = rng.uniform() >= p ? keep_scale : 0.0;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return t.make(std::move(out), t.requires_grad(x), [x = x.id, mask = std::move(mask)](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

// Mean over rows of -log softmax(logits[i])[targets[i]]. Rows whose target
// equals `pad_id` contribute 0 but still count in the mean.
inline Var cross_entropy(Var logits, const std::vector<int>& targets, int pad_id = 0) {
  Tape& t = *logits.tape;
  const Tensor& lv = logits.value();
  if (targets.size() != lv.rows()) throw ShapeError("cross_entropy: one target per logits row required");
  const std::size_t v = lv.cols();
  for (int tg : targets) {
    if (tg < 0 || static_cast<std::size_t>(tg) >= v) {
      throw OutOfRange("target id " + std::to_string(tg) + " outside " + std::to_string(v) + " classes");
    }
  }
  Tensor probs = softmax_rows(lv);
  double loss = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == pad_id) continue;
    double mx = -INFINITY;
    for (std::size_t j = 0; j < v; ++j) mx = std::max(mx, lv(i, j));
    double s = 0;
    for (std::size_t j = 0; j < v; ++j) s += std::exp(lv(i, j) - mx);
    loss += -(lv(i, static_cast<std::size_t>(targets[i])) - mx - std::log(s));
  }
  const double inv = targets.empty() ? 0.0 : 1.0 / static_cast<double>(targets.size());
  return t.make(Tensor(Shape{1, 1}, loss * inv), t.requires_grad(logits),
                [l = logits.id, probs = std::move(probs), targets, pad_id, inv](Tape& t, const Tensor& g) {
                  Tensor& gl = t.grad(l);
                  for (std::size_t i = 0; i < targets.size(); ++i) {
                    if (targets[i] == pad_id) continue;
                    for (std::size_t j = 0; j < probs.cols(); ++j) {
                      const double onehot = static_cast<int>(j) == targets[i] ? 1.0 : 0.0;
                      gl(i, j) += g[0] * inv * (probs(i, j) - onehot);
                    }
                  }
                });
}

}  // namespace nbdoc::num
