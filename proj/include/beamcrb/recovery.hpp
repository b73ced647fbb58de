#pragma once

// Recovery of unit-norm precoders F with F F^H = X from a solution X of
// the relaxed program, valid whenever rank(X) <= M.

#include <cstdint>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "beamcrb/design.hpp"

namespace beamcrb {

struct PrecoderSet {
  CMat F;
  std::uint64_t seed = 0;

  int antennas() const { return static_cast<int>(F.rows()); }
  int count() const { return static_cast<int>(F.cols()); }
};

/// Haar-distributed random orthogonal matrix.
inline RMat random_orthogonal(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  RMat G(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) G(i, j) = nd(rng);
  Eigen::HouseholderQR<RMat> qr(G);
  RMat Q = qr.householderQ();
  const RMat Rm = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j)
    if (Rm(j, j) < 0.0) Q.col(j) *= -1.0;
  return Q;
}

/// Real symmetric M x M matrix with unit diagonal and the given spectrum.
/// The start point Q diag(lambda) Q^T uses a seeded random rotation Q; each
/// Givens rotation then fixes one diagonal entry to exactly 1.
inline RMat bendel_mickey(const RVec& eigenvalues, std::uint64_t seed) {
  const int m = static_cast<int>(eigenvalues.size());
  if (m < 1) throw DomainError("need at least one eigenvalue");
  if (eigenvalues.minCoeff() < -1e-12 * m) throw DomainError("eigenvalues must be nonnegative");
  const double sum = eigenvalues.sum();
  if (std::abs(sum - m) > 1e-9 * m)
    throw DomainError("eigenvalues must sum to their count M");
  const RVec lam = eigenvalues.cwiseMax(0.0) * (m / eigenvalues.cwiseMax(0.0).sum());

  std::mt19937_64 rng(seed);
  const RMat Q = random_orthogonal(m, rng);
  RMat A = Q * lam.asDiagonal() * Q.transpose();
  A = (0.5 * (A + A.transpose())).eval();

  const double tol = 1e-13;
  for (int step = 0; step < m; ++step) {
    int i = -1;
    for (int k = 0; k < m; ++k)
      if (std::abs(A(k, k) - 1.0) > tol) {
        i = k;
        break;
      }
    if (i < 0) break;
    const bool low = A(i, i) < 1.0;
    int j = -1;
    for (int k = i + 1; k < m; ++k)
      if (low ? A(k, k) > 1.0 + tol : A(k, k) < 1.0 - tol) {
        j = k;
        break;
      }
    if (j < 0) {
      // Only rounding residue is left.
      A(i, i) = 1.0;
      continue;
    }
    const double aii = A(i, i), ajj = A(j, j), aij = A(i, j);
    const double disc = aij * aij - (aii - 1.0) * (ajj - 1.0);
    const double b = -aij;
    const double t = (1.0 - aii) / (b + (b >= 0.0 ? 1.0 : -1.0) * std::sqrt(disc));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = c * t;
    RMat G = RMat::Identity(m, m);
    G(i, i) = c;
    G(j, i) = -s;
    G(i, j) = s;
    G(j, j) = c;
    A = (G.transpose() * A * G).eval();
    A = (0.5 * (A + A.transpose())).eval();
    A(i, i) = 1.0;
  }
  for (int k = 0; k < m; ++k) A(k, k) = 1.0;
  return A;
}

/// Factors X = F F^H with unit-norm columns using the leading `rank`
/// eigenpairs of X.
inline PrecoderSet recover_precoders(const CMat& X, int rank, int m, std::uint64_t seed) {
  require_dims(X.rows() == X.cols(), "X must be square");
  if (m < 1) throw DomainError("M must be at least 1");
  if (rank < 1) throw DomainError("X has no positive eigenvalue");
  if (rank > m) throw RankExceedsPrecoders(rank, m);
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (X + X.adjoint()));
  const int n = static_cast<int>(X.rows());
  if (rank > n) throw DomainError("rank exceeds the matrix order");
  RVec lam(rank);
  CMat Q(n, rank);
  for (int k = 0; k < rank; ++k) {
    lam[k] = std::max(es.eigenvalues()[n - 1 - k], 0.0);
    Q.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  lam *= m / lam.sum();

  RVec spectrum = RVec::Zero(m);
  spectrum.head(rank) = lam;
  const RMat Z = bendel_mickey(spectrum, seed);
  Eigen::SelfAdjointEigenSolver<RMat> ez(Z);
  RMat V(m, rank);
  for (int k = 0; k < rank; ++k) V.col(k) = ez.eigenvectors().col(m - 1 - k);

  PrecoderSet out;
  out.seed = seed;
  out.F = Q * lam.cwiseSqrt().asDiagonal() * V.transpose().cast<cd>();
  return out;
}

inline PrecoderSet recover_precoders(const ConicSolution& sol, int m, std::uint64_t seed) {
  if (sol.status != DesignStatus::optimal)
    throw DomainError("precoders can only be recovered from an optimal solution");
  return recover_precoders(sol.X, sol.rank_R, m, seed);
}

}  // namespace beamcrb
