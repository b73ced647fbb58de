#pragma once

// Sector-beam codebook: beam m fits the indicator of the m-th of M equal
// subranges of the prior range by least squares over a dense azimuth grid.

#include <cmath>

#include <Eigen/QR>

#include "beamcrb/array_model.hpp"
#include "beamcrb/recovery.hpp"

namespace beamcrb {

struct SectorSpec {
  Interval range{deg2rad(70.0), deg2rad(90.0)};
  int m = 4;
  int grid = 512;
};

/// True when azimuth `a` lies in [lo, lo + width] modulo 2 pi.
inline bool in_arc(double a, double lo, double width) {
  double d = std::fmod(a - lo, 2.0 * kPi);
  if (d < 0.0) d += 2.0 * kPi;
  return d <= width + 1e-12;
}

inline PrecoderSet design_sector_beams(const SectorSpec& spec, const ArrayGeometry& geom) {
  if (spec.m < 1) throw DomainError("sector codebook needs M >= 1");
  if (spec.grid < 1) throw DomainError("synthesis grid needs at least one point");
  const double width = spec.range.hi - spec.range.lo;
  if (!(width > 0.0) || width > 2.0 * kPi) throw DomainError("sector range must have positive width");
  const int n = geom.size();
  const int g = spec.grid;

  CMat AH(g, n);
  for (int k = 0; k < g; ++k)
    AH.row(k) = steering_vector(geom, AngleParam::azimuth(2.0 * kPi * k / g)).adjoint();
  Eigen::ColPivHouseholderQR<CMat> qr(AH);
  if (qr.rank() < n)
    throw DomainError("synthesis grid too sparse for this array; use a denser grid");

  PrecoderSet out;
  out.F.resize(n, spec.m);
  const double sub = width / spec.m;
  for (int m = 0; m < spec.m; ++m) {
    CVec d = CVec::Zero(g);
    for (int k = 0; k < g; ++k)
      if (in_arc(2.0 * kPi * k / g, spec.range.lo + m * sub, sub)) d[k] = 1.0;
    CVec f = qr.solve(d);
    const double nf = f.norm();
    if (!(nf > 0.0)) throw DomainError("sector " + std::to_string(m) + " contains no grid point");
    out.F.col(m) = f / nf;
  }
  return out;
}

}  // namespace beamcrb
