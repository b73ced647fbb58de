#include <random>

#include <gtest/gtest.h>

#include "beamcrb/conic/ipm.hpp"

using namespace beamcrb;
using namespace beamcrb::conic;

namespace {

SparseMat sparse(const RMat& d) { return d.sparseView(); }

ConeProgram make(const RVec& c, const RMat& G, const RVec& h, ConeDims dims,
                 const RMat& A = RMat(0, 0), const RVec& b = RVec(0)) {
  ConeProgram p;
  p.c = c;
  p.G = sparse(G);
  p.h = h;
  p.A = A.rows() > 0 ? sparse(A) : SparseMat(0, c.size());
  p.b = b;
  p.dims = std::move(dims);
  return p;
}

}  // namespace

TEST(ConicSolver, SmallLinearProgram) {
  RVec c(2);
  c << -1, -1;
  RMat G(4, 2);
  G << 1, 2, 3, 1, -1, 0, 0, -1;
  RVec h(4);
  h << 4, 6, 0, 0;
  ConeDims d;
  d.nonneg = 4;
  const auto r = solve(make(c, G, h, d));
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r.x[0], 1.6, 1e-6);
  EXPECT_NEAR(r.x[1], 1.2, 1e-6);
  EXPECT_NEAR(r.primal_objective, -2.8, 1e-7);
}

TEST(ConicSolver, EqualityConstraints) {
  RVec c(2);
  c << 2, 1;
  RMat G = -RMat::Identity(2, 2);
  RVec h = RVec::Zero(2);
  RMat A(1, 2);
  A << 1, 1;
  RVec b(1);
  b << 1;
  ConeDims d;
  d.nonneg = 2;
  const auto r = solve(make(c, G, h, d, A, b));
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r.x[0], 0.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
  EXPECT_NEAR(r.y[0], -1.0, 1e-6);
}

TEST(ConicSolver, SecondOrderCone) {
  RVec c(2);
  c << 1, 1;
  RMat G(3, 2);
  G << 0, 0, -1, 0, 0, -1;
  RVec h(3);
  h << 1, 0, 0;
  ConeDims d;
  d.soc = {3};
  const auto r = solve(make(c, G, h, d));
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r.primal_objective, -std::sqrt(2.0), 1e-7);
  EXPECT_NEAR(r.x[0], -std::sqrt(0.5), 1e-6);
}

TEST(ConicSolver, SmallSemidefiniteProgram) {
  // minimize x subject to [[x, 1], [1, y]] >= 0 and y <= 2.
  RVec c(2);
  c << 1, 0;
  RMat G = RMat::Zero(5, 2);
  G(0, 1) = 1;
  G(1, 0) = -1;
  G(4, 1) = -1;
  RVec h(5);
  h << 2, 0, 1, 1, 0;
  ConeDims d;
  d.nonneg = 1;
  d.psd = {2};
  const auto r = solve(make(c, G, h, d));
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r.x[0], 0.5, 1e-6);
  EXPECT_NEAR(r.x[1], 2.0, 1e-6);
}

TEST(ConicSolver, LargestEigenvalueMatchesEigensolver) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 6;
    RMat C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = nd(rng);
    C = 0.5 * (C + C.transpose()).eval();
    // minimize t subject to t I - C >= 0.
    RVec c(1);
    c << 1;
    RMat G = RMat::Zero(n * n, 1);
    for (int i = 0; i < n; ++i) G(i * n + i, 0) = -1;
    RVec h = -Eigen::Map<RVec>(C.data(), n * n);
    ConeDims d;
    d.psd = {n};
    const auto r = solve(make(c, G, h, d));
    ASSERT_EQ(r.status, SolveStatus::optimal);
    Eigen::SelfAdjointEigenSolver<RMat> es(C);
    EXPECT_NEAR(r.x[0], es.eigenvalues().maxCoeff(), 1e-6);
  }
}

TEST(ConicSolver, MixedConesSatisfyOptimalityConditions) {
  // Random problem built to be feasible and bounded.
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  ConeDims d;
  d.nonneg = 3;
  d.soc = {3, 4};
  d.psd = {3};
  const int m = d.rows();
  const int n = 5;
  RMat G(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = nd(rng);
  // Symmetrize the semidefinite rows.
  for (int j = 0; j < n; ++j) {
    Eigen::Map<RMat> B(G.col(j).data() + (m - 9), 3, 3);
    B = 0.5 * (B + B.transpose()).eval();
  }
  const detail::Layout L(d);
  const RVec e = detail::unit(L);
  const RVec x0 = RVec::Random(n);
  const RVec h = G * x0 + e;
  const RVec c = G.transpose() * e;  // dual feasible with z = e, so bounded
  const auto r = solve(make(-c, G, h, d));
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_LT((G * r.x + r.s - h).norm(), 1e-6);
  EXPECT_LT((G.transpose() * r.z - c).norm(), 1e-6);
  EXPECT_GT(detail::min_eigenvalue(L, r.s), -1e-7);
  EXPECT_GT(detail::min_eigenvalue(L, r.z), -1e-7);
  EXPECT_LT(std::abs(r.s.dot(r.z)), 1e-6);
}

TEST(ConicSolver, DetectsPrimalInfeasibility) {
  // x >= 1 and x <= 0.
  RVec c(1);
  c << 1;
  RMat G(2, 1);
  G << -1, 1;
  RVec h(2);
  h << -1, 0;
  ConeDims d;
  d.nonneg = 2;
  EXPECT_EQ(solve(make(c, G, h, d)).status, SolveStatus::primal_infeasible);
}

TEST(ConicSolver, DetectsDualInfeasibility) {
  RVec c(1);
  c << -1;
  RMat G(1, 1);
  G << -1;
  RVec h(1);
  h << 0;
  ConeDims d;
  d.nonneg = 1;
  EXPECT_EQ(solve(make(c, G, h, d)).status, SolveStatus::dual_infeasible);
}

TEST(ConicSolver, RejectsMismatchedDimensions) {
  RVec c(2);
  c << 1, 1;
  RMat G(2, 2);
  G.setIdentity();
  RVec h(3);
  h.setZero();
  ConeDims d;
  d.nonneg = 2;
  EXPECT_THROW(solve(make(c, G, h, d)), DimensionError);
}

TEST(NesterovToddScaling, MapsBothPointsToLambda) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  ConeDims d;
  d.nonneg = 2;
  d.soc = {4};
  d.psd = {3};
  const detail::Layout L(d);
  auto interior = [&] {
    RVec v(L.rows);
    for (int i = 0; i < L.rows; ++i) v[i] = nd(rng);
    v.head(2) = v.head(2).cwiseAbs();
    v[2] = v.segment(3, 3).norm() + 0.5;
    RMat B = Eigen::Map<RMat>(v.data() + 6, 3, 3);
    B = B * B.transpose() + 0.3 * RMat::Identity(3, 3);
    Eigen::Map<RMat>(v.data() + 6, 3, 3) = B;
    return v;
  };
  const RVec s = interior();
  const RVec z = interior();
  const auto w = detail::compute_scaling(L, s, z);
  const RVec wz = detail::apply(L, w, detail::Apply::W, z);
  const RVec wits = detail::apply(L, w, detail::Apply::WinvT, s);
  EXPECT_LT((wz - w.lambda).norm(), 1e-10);
  EXPECT_LT((wits - w.lambda).norm(), 1e-10);
  const RVec v = interior();
  const RVec round = detail::apply(L, w, detail::Apply::Winv, detail::apply(L, w, detail::Apply::W, v));
  EXPECT_LT((round - v).norm(), 1e-10);
}
