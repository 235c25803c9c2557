#pragma once

#include <vector>

#include "nbdoc/numerics/autodiff.hpp"

namespace nbdoc::num {

// GRU weights. Columns of W, U and b are three blocks of width h in the
// order z | r | n.
struct GruWeights {
  Var w;  // [d_in x 3h]
  Var u;  // [h x 3h]
  Var b;  // [1 x 3h]
};

namespace detail {

inline void check_gru(const Tensor& x, const Tensor& h0, const Tensor& w, const Tensor& u, const Tensor& b) {
  const std::size_t h = h0.cols();
  if (h0.rows() != 1 || w.rows() != x.cols() || w.cols() != 3 * h || u.rows() != h || u.cols() != 3 * h ||
      b.rows() != 1 || b.cols() != 3 * h) {
    throw ShapeError("gru: x " + shape_string(x.shape()) + ", h0 " + shape_string(h0.shape()) + ", W " +
                     shape_string(w.shape()) + ", U " + shape_string(u.shape()) + ", b " + shape_string(b.shape()));
  }
}

}  // namespace detail

// Runs the GRU over the rows of x starting from h0 and returns every hidden
// state [T x h]:
//   z = sig(x Wz + h Uz + bz), r = sig(x Wr + h Ur + br)
//   n = tanh(x Wn + (r*h) Un + bn), h' = (1-z)*h + z*n
// One tape node for the whole sequence; its backward is written out by hand.
inline Var gru_sequence(Var x, Var h0, const GruWeights& p) {
  Tape& t = *x.tape;
  const Tensor& X = x.value();
  const Tensor& W = p.w.value();
  const Tensor& U = p.u.value();
  const Tensor& B = p.b.value();
  detail::check_gru(X, h0.value(), W, U, B);
  const std::size_t T = X.rows();
  const std::size_t h = h0.value().cols();

  Tensor xw;
  gemm(X, false, W, false, xw);
  for (std::size_t s = 0; s < T; ++s) {
    for (std::size_t j = 0; j < 3 * h; ++j) xw(s, j) += B[j];
  }
  // Saved per step: z, r, n and the previous state.
  Tensor Z(T, h), R(T, h), N(T, h), Hprev(T, h), H(T, h);
  std::vector<double> hp(h0.value().values()), rh(h);
  for (std::size_t s = 0; s < T; ++s) {
    for (std::size_t j = 0; j < h; ++j) Hprev(s, j) = hp[j];
    for (std::size_t j = 0; j < h; ++j) {
      double az = xw(s, j), ar = xw(s, h + j);
      for (std::size_t k = 0; k < h; ++k) {
        az += hp[k] * U(k, j);
        ar += hp[k] * U(k, h + j);
      }
      Z(s, j) = sigmoid(az);
      R(s, j) = sigmoid(ar);
    }
    for (std::size_t k = 0; k < h; ++k) rh[k] = R(s, k) * hp[k];
    for (std::size_t j = 0; j < h; ++j) {
      double an = xw(s, 2 * h + j);
      for (std::size_t k = 0; k < h; ++k) an += rh[k] * U(k, 2 * h + j);
      N(s, j) = std::tanh(an);
    }
    for (std::size_t j = 0; j < h; ++j) {
      hp[j] = (1.0 - Z(s, j)) * hp[j] + Z(s, j) * N(s, j);
      H(s, j) = hp[j];
    }
  }

  const bool rg = t.requires_grad(x) || t.requires_grad(h0) || t.requires_grad(p.w) || t.requires_grad(p.u) ||
                  t.requires_grad(p.b);
  return t.make(
      std::move(H), rg,
      [x = x.id, h0 = h0.id, w = p.w.id, u = p.u.id, b = p.b.id, Z = std::move(Z), R = std::move(R),
       N = std::move(N), Hp = std::move(Hprev), T, h](Tape& t, const Tensor& g) {
        const Tensor& U = t.value(u);
        Tensor dxw(T, 3 * h);
        Tensor dU(h, 3 * h);
        std::vector<double> dh(h, 0.0), dprev(h), drh(h);
        for (std::size_t s = T; s-- > 0;) {
          for (std::size_t j = 0; j < h; ++j) dh[j] += g(s, j);
          for (std::size_t j = 0; j < h; ++j) {
            const double z = Z(s, j), n = N(s, j), hpj = Hp(s, j);
            const double dn = dh[j] * z;
            const double dz = dh[j] * (n - hpj);
            dprev[j] = dh[j] * (1.0 - z);
            dxw(s, j) = dz * z * (1.0 - z);
            dxw(s, 2 * h + j) = dn * (1.0 - n * n);
          }
          // (r*h) Un path
          for (std::size_t k = 0; k < h; ++k) {
            double acc = 0;
            for (std::size_t j = 0; j < h; ++j) acc += dxw(s, 2 * h + j) * U(k, 2 * h + j);
            drh[k] = acc;
          }
          for (std::size_t k = 0; k < h; ++k) {
            const double r = R(s, k), hpk = Hp(s, k);
            dprev[k] += drh[k] * r;
            dxw(s, h + k) = drh[k] * hpk * r * (1.0 - r);
          }
          // h Uz, h Ur paths
          for (std::size_t k = 0; k < h; ++k) {
            double acc = 0;
            for (std::size_t j = 0; j < 2 * h; ++j) acc += dxw(s, j) * U(k, j);
            dprev[k] += acc;
          }
          if (t.requires_grad(u)) {
            for (std::size_t k = 0; k < h; ++k) {
              const double hpk = Hp(s, k), rhk = R(s, k) * Hp(s, k);
              for (std::size_t j = 0; j < 2 * h; ++j) dU(k, j) += hpk * dxw(s, j);
              for (std::size_t j = 0; j < h; ++j) dU(k, 2 * h + j) += rhk * dxw(s, 2 * h + j);
            }
          }
          dh.swap(dprev);
        }
        if (t.requires_grad(u)) axpy(1.0, dU, t.grad(u));
        if (t.requires_grad(h0)) {
          Tensor& g0 = t.grad(h0);
          for (std::size_t j = 0; j < h; ++j) g0[j] += dh[j];
        }
        if (t.requires_grad(b)) {
          Tensor& gb = t.grad(b);
          for (std::size_t s = 0; s < T; ++s) {
            for (std::size_t j = 0; j < 3 * h; ++j) gb[j] += dxw(s, j);
          }
        }
        if (t.requires_grad(w)) gemm(t.value(x), true, dxw, false, t.grad(w), true);
        if (t.requires_grad(x)) gemm(dxw, false, t.value(w), true, t.grad(x), true);
      });
}

// One GRU step: x [1 x d_in], h [1 x h] -> [1 x h].
inline Var gru_step(Var x, Var h, const GruWeights& p) { return gru_sequence(x, h, p); }

// One graph-convolution hop: tanh(A H W).
inline Var gcn_hop(Var h, Var a_hat, Var w) { return tanh(matmul(a_hat, matmul(h, w))); }

}  // namespace nbdoc::num
