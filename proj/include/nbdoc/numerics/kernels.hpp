#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nbdoc/errors.hpp"
#include "nbdoc/numerics/tensor.hpp"

namespace nbdoc::num {

// Additive score for masked attention entries before exponentiation.
inline constexpr double kMaskValue = -1e9;

using Mask = std::vector<std::uint8_t>;  // 1 = keep, 0 = masked

inline void require_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + " expects a rank-2 tensor, got " + shape_string(t.shape()));
}

// C (+)= alpha * op(A) * op(B), op = optional transpose.
inline void gemm(const Tensor& a, bool ta, const Tensor& b, bool tb, Tensor& c, bool accumulate = false,
                 double alpha = 1.0) {
  require_rank2(a, "gemm");
  require_rank2(b, "gemm");
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t kb = tb ? b.cols() : b.rows();
  const std::size_t n = tb ? b.rows() : b.cols();
  if (k != kb) {
    throw ShapeError("matmul inner dimensions differ: " + shape_string(a.shape()) + (ta ? "^T" : "") + " * " +
                     shape_string(b.shape()) + (tb ? "^T" : ""));
  }
  if (!accumulate || c.shape() != Shape{m, n}) {
    if (accumulate) throw ShapeError("gemm accumulate target has wrong shape");
    c = Tensor(m, n);
  }
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  const std::size_t lda = a.cols(), ldb = b.cols();
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = C + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = alpha * A[i * lda + p];
        if (av == 0.0) continue;
        const double* brow = B + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = A + i * lda;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = B + j * ldb;
        double s = 0;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        C[i * n + j] += alpha * s;
      }
    }
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* arow = A + p * lda;
      const double* brow = B + p * ldb;
      for (std::size_t i = 0; i < m; ++i) {
        const double av = alpha * arow[i];
        if (av == 0.0) continue;
        double* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0;
        for (std::size_t p = 0; p < k; ++p) s += A[p * lda + i] * B[j * ldb + p];
        C[i * n + j] += alpha * s;
      }
    }
  }
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor c;
  gemm(a, false, b, false, c);
  return c;
}

inline Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  Tensor t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

inline void axpy(double alpha, const Tensor& x, Tensor& y) {
  if (x.size() != y.size()) throw ShapeError("axpy size mismatch " + shape_string(x.shape()) + " vs " + shape_string(y.shape()));
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Row-wise softmax. With a mask (one flag per column), masked entries get
// kMaskValue added before exponentiation and are then set to exactly 0; a
// row with every entry masked is all zeros.
inline Tensor softmax_rows(const Tensor& x, const Mask* mask = nullptr) {
  require_rank2(x, "softmax");
  const std::size_t n = x.cols();
  if (mask && mask->size() != n) throw ShapeError("softmax mask length does not match columns");
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (mask && std::none_of(mask->begin(), mask->end(), [](auto m) { return m != 0; })) continue;
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = x(i, j) + (mask && !(*mask)[j] ? kMaskValue : 0.0);
      mx = std::max(mx, v);
    }
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask && !(*mask)[j]) continue;
      const double e = std::exp(x(i, j) - mx);
      y(i, j) = e;
      sum += e;
    }
    for (std::size_t j = 0; j < n; ++j) y(i, j) /= sum;
  }
  return y;
}

// Softmax along axis 0 (columns) or 1 (rows) of a matrix; the mask indexes
// the reduced axis.
inline Tensor softmax(const Tensor& x, int axis, const Mask* mask = nullptr) {
  if (axis == 1) return softmax_rows(x, mask);
  if (axis == 0) return transpose(softmax_rows(transpose(x), mask));
  throw ShapeError("softmax axis must be 0 or 1");
}

}  // namespace nbdoc::num
