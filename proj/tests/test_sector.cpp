#include <cmath>

#include <gtest/gtest.h>

#include "beamcrb/sector.hpp"

using namespace beamcrb;

TEST(Sector, BeamsHaveUnitNorm) {
  const auto P = design_sector_beams({{deg2rad(70.0), deg2rad(90.0)}, 4, 512},
                                     ArrayGeometry::ula(16));
  ASSERT_EQ(P.count(), 4);
  for (int m = 0; m < 4; ++m) EXPECT_NEAR(P.F.col(m).norm(), 1.0, 1e-12);
}

TEST(Sector, EachBeamPointsIntoItsSubrange) {
  const auto geom = ArrayGeometry::uca(24);
  const SectorSpec spec{{deg2rad(40.0), deg2rad(120.0)}, 4, 720};
  const auto P = design_sector_beams(spec, geom);
  for (int m = 0; m < 4; ++m) {
    const double lo = 40.0 + 20.0 * m;
    double inside = 0.0, outside = 0.0;
    int ni = 0, no = 0;
    for (int k = 0; k < 360; ++k) {
      const double g = std::pow(array_gain(P.F.col(m), geom, AngleParam::azimuth(deg2rad(k))), 2);
      if (k >= lo && k <= lo + 20.0) inside += g, ++ni;
      else outside += g, ++no;
    }
    EXPECT_GT(inside / ni, 5.0 * outside / no) << "beam " << m;
  }
}

TEST(Sector, LeastSquaresResidualIsOrthogonalToTheArrayManifold) {
  const auto geom = ArrayGeometry::uca(10);
  const int g = 256;
  const SectorSpec spec{{deg2rad(70.0), deg2rad(90.0)}, 1, g};
  const auto P = design_sector_beams(spec, geom);
  CMat AH(g, 10);
  CVec d = CVec::Zero(g);
  for (int k = 0; k < g; ++k) {
    const double a = 2.0 * kPi * k / g;
    AH.row(k) = steering_vector(geom, AngleParam::azimuth(a)).adjoint();
    if (in_arc(a, spec.range.lo, spec.range.hi - spec.range.lo)) d[k] = 1.0;
  }
  // Undo the normalization by fitting the scale.
  const CVec y = AH * P.F.col(0);
  const cd s = y.dot(d) / y.squaredNorm();
  const CVec r = d - s * y;
  EXPECT_LT((AH.adjoint() * r).norm(), 1e-9 * d.norm() * std::sqrt(double(g)));
}

TEST(Sector, ArcMembershipWrapsAround) {
  EXPECT_TRUE(in_arc(deg2rad(5.0), deg2rad(350.0), deg2rad(20.0)));
  EXPECT_FALSE(in_arc(deg2rad(15.0), deg2rad(350.0), deg2rad(20.0)));
}

TEST(Sector, Validation) {
  const auto geom = ArrayGeometry::ula(8);
  EXPECT_THROW(design_sector_beams({{1.0, 1.0}, 2, 64}, geom), DomainError);
  EXPECT_THROW(design_sector_beams({{1.0, 2.0}, 0, 64}, geom), DomainError);
  EXPECT_THROW(design_sector_beams({{1.0, 2.0}, 2, 4}, geom), DomainError);
}
