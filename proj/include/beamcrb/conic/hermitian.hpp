#pragma once

// Real parametrization of an n x n Hermitian matrix X: the n diagonal
// entries first, then (Re X_ij, Im X_ij) for each i < j in row-major order.
// Linear functionals u^H X v become complex coefficient rows over these n^2
// reals, and X >= 0 is imposed through the real embedding
// [[Re X, -Im X], [Im X, Re X]] >= 0 of order 2n.

#include <vector>

#include "beamcrb/conic/cone_program.hpp"

namespace beamcrb::conic::hermitian {

inline int parameter_count(int n) { return n * n; }

/// Column of Re X_ij (i < j); Im X_ij follows at the next column.
inline int pair_column(int n, int i, int j) {
  const int p = i * n - i * (i + 1) / 2 + (j - i - 1);
  return n + 2 * p;
}

inline RVec to_params(const CMat& X) {
  const int n = static_cast<int>(X.rows());
  RVec x(parameter_count(n));
  for (int i = 0; i < n; ++i) x[i] = X(i, i).real();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int c = pair_column(n, i, j);
      x[c] = X(i, j).real();
      x[c + 1] = X(i, j).imag();
    }
  return x;
}

inline CMat from_params(const Eigen::Ref<const RVec>& x, int n) {
  require_dims(x.size() == parameter_count(n), "parameter vector has the wrong length");
  CMat X(n, n);
  for (int i = 0; i < n; ++i) X(i, i) = x[i];
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int c = pair_column(n, i, j);
      X(i, j) = cd(x[c], x[c + 1]);
      X(j, i) = cd(x[c], -x[c + 1]);
    }
  return X;
}

/// Complex coefficients k with u^H X v = sum_c k_c x_c.
inline CVec form_coefficients(const CVec& u, const CVec& v) {
  const int n = static_cast<int>(u.size());
  require_dims(v.size() == n, "vectors must have equal length");
  CVec k(parameter_count(n));
  for (int i = 0; i < n; ++i) k[i] = std::conj(u[i]) * v[i];
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const cd a = std::conj(u[i]) * v[j];
      const cd b = std::conj(u[j]) * v[i];
      const int c = pair_column(n, i, j);
      k[c] = a + b;
      k[c + 1] = cd(0.0, 1.0) * (a - b);
    }
  return k;
}

/// Appends the triplets of sign * E(X) for a 2n x 2n block stored
/// column-major from row `row0`, with parameters starting at column `col0`.
inline void embedding_triplets(int n, int row0, int col0, double sign,
                               std::vector<Triplet>& out) {
  const int m = 2 * n;
  const auto put = [&](int r, int c, int col, double v) {
    out.emplace_back(row0 + c * m + r, col0 + col, sign * v);
  };
  for (int i = 0; i < n; ++i) {
    put(i, i, i, 1.0);
    put(n + i, n + i, i, 1.0);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int c = pair_column(n, i, j);
      put(i, j, c, 1.0);
      put(j, i, c, 1.0);
      put(n + i, n + j, c, 1.0);
      put(n + j, n + i, c, 1.0);
      put(i, n + j, c + 1, -1.0);
      put(j, n + i, c + 1, 1.0);
      put(n + i, j, c + 1, 1.0);
      put(n + j, i, c + 1, -1.0);
    }
}

/// Recovers X from its real embedding, averaging the duplicated blocks.
inline CMat from_embedding(const RMat& E) {
  const int n = static_cast<int>(E.rows()) / 2;
  const RMat R = 0.5 * (E.topLeftCorner(n, n) + E.bottomRightCorner(n, n));
  const RMat I = 0.5 * (E.bottomLeftCorner(n, n) - E.topRightCorner(n, n));
  CMat X(n, n);
  X.real() = 0.5 * (R + R.transpose());
  X.imag() = 0.5 * (I - I.transpose());
  return X;
}

}  // namespace beamcrb::conic::hermitian
