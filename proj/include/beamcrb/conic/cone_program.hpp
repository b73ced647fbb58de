#pragma once

// Linear cone programs in the form
//
//   minimize    c^T x
//   subject to  G x + s = h,  A x = b,  s in K
//
// where K is a product of a nonnegative orthant, second-order cones and
// positive semidefinite cones. A semidefinite block of order n occupies n*n
// consecutive rows holding the matrix in column-major order; every column of
// G restricted to such a block must be symmetric.

#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "beamcrb/core.hpp"

namespace beamcrb::conic {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct ConeDims {
  int nonneg = 0;
  std::vector<int> soc;
  std::vector<int> psd;

  int rows() const {
    int r = nonneg;
    for (int q : soc) r += q;
    for (int n : psd) r += n * n;
    return r;
  }

  /// Barrier degree: one per orthant coordinate, one per second-order cone
  /// and n per semidefinite block.
  int degree() const {
    return nonneg + static_cast<int>(soc.size()) + std::accumulate(psd.begin(), psd.end(), 0);
  }
};

struct ConeProgram {
  RVec c;
  SparseMat G;
  RVec h;
  SparseMat A;
  RVec b;
  ConeDims dims;

  int variables() const { return static_cast<int>(c.size()); }

  void validate() const {
    const int n = variables();
    const int m = dims.rows();
    if (dims.nonneg < 0) throw DimensionError("negative orthant dimension");
    for (int q : dims.soc)
      if (q < 1) throw DimensionError("second-order cone needs dimension >= 1");
    for (int s : dims.psd)
      if (s < 1) throw DimensionError("semidefinite block needs order >= 1");
    require_dims(G.rows() == m && G.cols() == n, "G must be rows(K) x n");
    require_dims(h.size() == m, "h must have rows(K) entries");
    require_dims(A.cols() == n || A.rows() == 0, "A must have n columns");
    require_dims(A.rows() == b.size(), "b must have one entry per row of A");
  }
};

}  // namespace beamcrb::conic
