#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "beamcrb/recovery.hpp"
#include "oracles.hpp"

using namespace beamcrb;

namespace {

// Random PSD matrix with trace m and the given rank.
CMat random_psd(int n, int rank, int m, std::mt19937_64& rng) {
  const CMat G = oracle::random_unit_columns(n, rank, rng);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  RVec w(rank);
  for (int k = 0; k < rank; ++k) w[k] = u(rng);
  CMat X = G * w.asDiagonal() * G.adjoint();
  return X * (m / X.trace().real());
}

}  // namespace

TEST(Recovery, BendelMickeyKeepsSpectrumAndSetsUnitDiagonal) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int m : {1, 2, 3, 5, 8}) {
    RVec lam(m);
    for (int k = 0; k < m; ++k) lam[k] = k < (m + 1) / 2 ? u(rng) : 0.0;
    lam *= m / lam.sum();
    const RMat Z = bendel_mickey(lam, 99);
    EXPECT_LT((Z - Z.transpose()).norm(), 1e-14);
    for (int k = 0; k < m; ++k) EXPECT_EQ(Z(k, k), 1.0);
    RVec ev = Eigen::SelfAdjointEigenSolver<RMat>(Z).eigenvalues();
    RVec want = lam;
    std::sort(want.data(), want.data() + m);
    EXPECT_LT((ev - want).norm(), 1e-10 * m);
  }
}

TEST(Recovery, BendelMickeyRejectsBadSpectra) {
  RVec bad(3);
  bad << 1.0, 1.0, 0.5;
  EXPECT_THROW(bendel_mickey(bad, 1), DomainError);
  bad << 2.0, 2.0, -1.0;
  EXPECT_THROW(bendel_mickey(bad, 1), DomainError);
}

TEST(Recovery, RoundTripReproducesX) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + trial % 5;
    const int r = 1 + trial % m;
    const CMat X = random_psd(16, r, m, rng);
    const auto P = recover_precoders(X, r, m, 1000 + trial);
    ASSERT_EQ(P.count(), m);
    EXPECT_LE((P.F * P.F.adjoint() - X).norm() / X.norm(), 1e-6);
    for (int k = 0; k < m; ++k) EXPECT_NEAR(P.F.col(k).norm(), 1.0, 1e-8);
  }
}

TEST(Recovery, SeedSelectsOneOfManyFactorizations) {
  std::mt19937_64 rng(2);
  const CMat X = random_psd(10, 2, 4, rng);
  const auto a = recover_precoders(X, 2, 4, 5);
  const auto b = recover_precoders(X, 2, 4, 5);
  const auto c = recover_precoders(X, 2, 4, 6);
  EXPECT_EQ(a.F, b.F);
  EXPECT_GT((a.F - c.F).norm(), 1e-6);
  EXPECT_LT((c.F * c.F.adjoint() - X).norm(), 1e-9 * X.norm());
}

TEST(Recovery, BoundsOnPrecodersEqualBoundsOnX) {
  std::mt19937_64 rng(3);
  const auto tx = ArrayGeometry::uca(12), rx = ArrayGeometry::uca(12);
  const auto W = Combiner::identity(12);
  const CMat X = random_psd(12, 3, 4, rng);
  const auto F = recover_precoders(X, 3, 4, 7).F;
  const auto snr = SnrSpec::from_db(-10.0);
  for (double t : {0.3, 1.4, 2.9}) {
    const AngleParam th = AngleParam::azimuth(t), ph = AngleParam::azimuth(t + 0.5);
    const double dx = deb(th, ph, Gram{X}, W, snr, tx, rx);
    const double ox = oeb(th, ph, Gram{X}, W, snr, tx, rx);
    EXPECT_NEAR(deb(th, ph, F, W, snr, tx, rx), dx, 1e-9 * dx);
    EXPECT_NEAR(oeb(th, ph, F, W, snr, tx, rx), ox, 1e-9 * ox);
  }
}

TEST(Recovery, RankAboveMIsRejected) {
  std::mt19937_64 rng(4);
  const CMat X = random_psd(8, 3, 3, rng);
  try {
    recover_precoders(X, 3, 2, 1);
    FAIL() << "expected RankExceedsPrecoders";
  } catch (const RankExceedsPrecoders& e) {
    EXPECT_EQ(e.rank(), 3);
    EXPECT_EQ(e.precoders(), 2);
  }
}

TEST(Recovery, RecoversFromADesign) {
  DesignProblem pb;
  pb.tx = pb.rx = ArrayGeometry::uca(12);
  pb.combiner = Combiner::identity(12);
  pb.m = 4;
  pb.s_tx = pb.s_rx = 7;
  const auto sol = require_optimal(solve_design(pb));
  const auto P = recover_precoders(sol, pb.m, 11);
  EXPECT_LE((P.F * P.F.adjoint() - sol.X).norm() / sol.X.norm(), 1e-5);
  ConicSolution failed;
  EXPECT_THROW(recover_precoders(failed, 3, 1), DomainError);
}

TEST(Recovery, RandomOrthogonalIsOrthogonal) {
  std::mt19937_64 rng(7);
  const RMat Q = random_orthogonal(6, rng);
  EXPECT_LT((Q.transpose() * Q - RMat::Identity(6, 6)).norm(), 1e-13);
}
