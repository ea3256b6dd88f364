#pragma once

// Dense symmetric eigen-decomposition, thin SVD, Cholesky and distance
// kernels. Sizes here are small (T = 24 frames, a few thousand rows), so the
// algorithms favour determinism and accuracy over asymptotic speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "tacclust/error.hpp"
#include "tacclust/matrix.hpp"

namespace tacclust {

struct SymEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i pairs with values[i]
};

struct Svd {
  Matrix u;                           // m x r, orthonormal columns
  std::vector<double> singularValues;  // r values, descending, >= 0
  Matrix vt;                          // r x n, orthonormal rows
};

namespace detail {

// Flip column `c` of `v` (and optionally the same column of `u`) so that its
// largest-magnitude entry is positive. The first entry wins magnitude ties.
inline void fixColumnSign(Matrix& v, std::size_t c, Matrix* u = nullptr) {
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < v.rows(); ++i) {
    if (std::abs(v(i, c)) > best) {
      best = std::abs(v(i, c));
      arg = i;
    }
  }
  if (v.rows() == 0 || v(arg, c) >= 0.0) return;
  for (std::size_t i = 0; i < v.rows(); ++i) v(i, c) = -v(i, c);
  if (u != nullptr)
    for (std::size_t i = 0; i < u->rows(); ++i) (*u)(i, c) = -(*u)(i, c);
}

inline bool isSymmetric(const Matrix& a, double relTol) {
  const double scale = std::max(1.0, maxAbs(a));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > relTol * scale) return false;
  return true;
}

}  // namespace detail

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
inline SymEigen symmetricEigen(const Matrix& input) {
  if (input.rows() != input.cols()) throw Error("symmetricEigen: matrix is not square");
  if (!detail::isSymmetric(input, 1e-10)) throw Error("symmetricEigen: matrix is not symmetric");
  const std::size_t n = input.rows();
  Matrix a = input;
  // Symmetrize exactly so rotations see a consistent matrix.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
  Matrix v = Matrix::identity(n);

  const double norm2 = std::max(frobeniusNorm(a) * frobeniusNorm(a), std::numeric_limits<double>::min());
  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= eps * eps * norm2) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        if (std::abs(apq) < eps * 1e-3 * std::sqrt(std::abs(app * aqq))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - s * akq;
          a(k, q) = a(q, k) = s * akp + c * akq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymEigen out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
    detail::fixColumnSign(out.vectors, c);
  }
  return out;
}

namespace detail {

// Orthonormalize column `c` of `u` against columns [0, c) with two passes of
// modified Gram-Schmidt. Returns the norm left before normalization.
inline double orthonormalizeColumn(Matrix& u, std::size_t c) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < c; ++j) {
      double proj = 0.0;
      for (std::size_t i = 0; i < u.rows(); ++i) proj += u(i, j) * u(i, c);
      for (std::size_t i = 0; i < u.rows(); ++i) u(i, c) -= proj * u(i, j);
    }
  }
  double nrm = 0.0;
  for (std::size_t i = 0; i < u.rows(); ++i) nrm += u(i, c) * u(i, c);
  nrm = std::sqrt(nrm);
  if (nrm > 0.0)
    for (std::size_t i = 0; i < u.rows(); ++i) u(i, c) /= nrm;
  return nrm;
}

// Replace column c with the first standard basis vector that survives
// orthogonalization against columns [0, c).
inline void completeColumn(Matrix& u, std::size_t c) {
  for (std::size_t e = 0; e < u.rows(); ++e) {
    for (std::size_t i = 0; i < u.rows(); ++i) u(i, c) = (i == e) ? 1.0 : 0.0;
    if (orthonormalizeColumn(u, c) > 0.5) return;
  }
}

// Thin SVD for rows >= cols.
inline Svd svdTall(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix gram(n, n);
  for (std::size_t i = 0; i < m; ++i) {
    auto r = a.row(i);
    for (std::size_t p = 0; p < n; ++p) {
      const double rp = r[p];
      if (rp == 0.0) continue;
      for (std::size_t q = p; q < n; ++q) gram(p, q) += rp * r[q];
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < p; ++q) gram(p, q) = gram(q, p);
  SymEigen eig = symmetricEigen(gram);

  // W = A V; singular values are the column norms of W, which stay accurate
  // for small values where sqrt(eigenvalue) would not.
  Matrix w = a * eig.vectors;
  std::vector<double> s(n);
  for (std::size_t c = 0; c < n; ++c) {
    double nrm = 0.0;
    for (std::size_t i = 0; i < m; ++i) nrm += w(i, c) * w(i, c);
    s[c] = std::sqrt(nrm);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });

  Svd out;
  out.u = Matrix(m, n);
  out.vt = Matrix(n, n);
  out.singularValues.resize(n);
  const double smax = n > 0 ? s[order[0]] : 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.singularValues[c] = s[src];
    for (std::size_t j = 0; j < n; ++j) out.vt(c, j) = eig.vectors(j, src);
    const bool tiny = s[src] <= 1e-10 * smax || smax == 0.0;
    if (tiny) {
      completeColumn(out.u, c);
    } else {
      for (std::size_t i = 0; i < m; ++i) out.u(i, c) = w(i, src);
      if (orthonormalizeColumn(out.u, c) <= 0.0) completeColumn(out.u, c);
    }
  }
  return out;
}

}  // namespace detail

/// Thin SVD through the eigen-decomposition of the Gram matrix of the smaller
/// dimension. Right singular vectors follow the positive-largest-entry sign
/// convention; left vectors are flipped to match.
inline Svd svd(const Matrix& a) {
  if (!a.allFinite()) throw Error("svd: non-finite input");
  Svd out;
  if (a.rows() >= a.cols()) {
    out = detail::svdTall(a);
  } else {
    Svd t = detail::svdTall(a.transpose());
    out.u = t.vt.transpose();
    out.singularValues = std::move(t.singularValues);
    out.vt = t.u.transpose();
  }
  Matrix v = out.vt.transpose();
  for (std::size_t c = 0; c < v.cols(); ++c) detail::fixColumnSign(v, c, &out.u);
  out.vt = v.transpose();
  return out;
}

/// Full matrix of squared Euclidean distances between the rows of X.
inline Matrix pairwiseSqDist(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = squaredDistance(xi, x.row(j));
  }
  return d;
}

/// Lower-triangular L with L Lᵀ = A + jitter I.
inline Matrix choleskyWithJitter(const Matrix& a, double jitter) {
  if (a.rows() != a.cols()) throw Error("choleskyWithJitter: matrix is not square");
  if (!detail::isSymmetric(a, 1e-10)) throw Error("choleskyWithJitter: matrix is not symmetric");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j) + jitter;
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw DegenerateCovariance("matrix is not positive definite after jitter " + std::to_string(jitter));
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// Solves L y = b in place for lower-triangular L.
inline void forwardSubstitute(const Matrix& l, std::span<double> b) {
  for (std::size_t i = 0; i < l.rows(); ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * b[k];
    b[i] = s / l(i, i);
  }
}

}  // namespace tacclust
