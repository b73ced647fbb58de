#pragma once

// Planar antenna arrays, steering vectors and beam gains.
//
// Arrays live in the x-y plane with positions in wavelengths. A plane wave
// with azimuth theta has direction u(theta) = (cos theta, sin theta) and the
// response of antenna n is exp(+j 2 pi <p_n, u(theta)>).

#include <cmath>
#include <vector>

#include "beamcrb/core.hpp"

namespace beamcrb {

enum class ArrayKind { ula, uca, custom };

enum class Parametrization { azimuth, spatial_frequency };

struct Position {
  double x = 0.0;
  double y = 0.0;
};

class ArrayGeometry {
 public:
  /// Uniform linear array along the x-axis, centered at the origin.
  static ArrayGeometry ula(int n, double spacing = 0.5) {
    if (n < 1) throw DomainError("ULA needs at least one antenna");
    if (!(spacing > 0.0) || !std::isfinite(spacing))
      throw DomainError("ULA spacing must be positive");
    std::vector<Position> p(static_cast<std::size_t>(n));
    const double center = 0.5 * (n - 1);
    for (int i = 0; i < n; ++i) p[i] = {(i - center) * spacing, 0.0};
    return ArrayGeometry(ArrayKind::ula, std::move(p));
  }

  /// Uniform circular array whose adjacent antennas are `spacing` apart
  /// (chord length).
  static ArrayGeometry uca(int n, double spacing = 0.5) {
    if (n < 2) throw DomainError("UCA needs at least two antennas");
    if (!(spacing > 0.0) || !std::isfinite(spacing))
      throw DomainError("UCA spacing must be positive");
    const double radius = spacing / (2.0 * std::sin(kPi / n));
    std::vector<Position> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * kPi * i / n;
      p[i] = {radius * std::cos(a), radius * std::sin(a)};
    }
    return ArrayGeometry(ArrayKind::uca, std::move(p));
  }

  static ArrayGeometry custom(std::vector<Position> positions) {
    if (positions.empty()) throw DomainError("array needs at least one antenna");
    for (const auto& p : positions)
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw DomainError("antenna positions must be finite");
    return ArrayGeometry(ArrayKind::custom, std::move(positions));
  }

  ArrayKind kind() const { return kind_; }
  int size() const { return static_cast<int>(positions_.size()); }
  const std::vector<Position>& positions() const { return positions_; }

  /// Largest distance of an antenna from the origin, in wavelengths.
  double max_radius() const {
    double r = 0.0;
    for (const auto& p : positions_) r = std::max(r, std::hypot(p.x, p.y));
    return r;
  }

 private:
  ArrayGeometry(ArrayKind kind, std::vector<Position> p)
      : kind_(kind), positions_(std::move(p)) {}

  ArrayKind kind_;
  std::vector<Position> positions_;
};

/// An angle together with the parameter it is expressed in. Azimuth is in
/// radians; spatial frequency is omega = cos(theta) / 2 and is only defined
/// for arrays along the x-axis (ULA).
struct AngleParam {
  double value = 0.0;
  Parametrization param = Parametrization::azimuth;

  static AngleParam azimuth(double rad) { return {rad, Parametrization::azimuth}; }
  static AngleParam spatial_frequency(double omega) {
    return {omega, Parametrization::spatial_frequency};
  }
};

namespace detail {

inline void check_angle(const ArrayGeometry& geom, const AngleParam& angle) {
  if (!std::isfinite(angle.value)) throw DomainError("angle must be finite");
  if (angle.param == Parametrization::spatial_frequency) {
    if (geom.kind() != ArrayKind::ula)
      throw DomainError("spatial frequency is only defined for a ULA");
    if (std::abs(angle.value) > 0.5 + 1e-12)
      throw DomainError("spatial frequency must lie in [-1/2, 1/2]");
  }
}

// Phase slope d(phase_n)/d(param) for each antenna together with the phase.
inline void phases(const ArrayGeometry& geom, const AngleParam& angle, RVec& phase,
                   RVec& slope) {
  const int n = geom.size();
  phase.resize(n);
  slope.resize(n);
  const auto& p = geom.positions();
  if (angle.param == Parametrization::azimuth) {
    const double c = std::cos(angle.value);
    const double s = std::sin(angle.value);
    for (int i = 0; i < n; ++i) {
      phase[i] = 2.0 * kPi * (p[i].x * c + p[i].y * s);
      slope[i] = 2.0 * kPi * (-p[i].x * s + p[i].y * c);
    }
  } else {
    // cos(theta) = 2 omega along the x-axis.
    for (int i = 0; i < n; ++i) {
      phase[i] = 4.0 * kPi * p[i].x * angle.value;
      slope[i] = 4.0 * kPi * p[i].x;
    }
  }
}

}  // namespace detail

inline CVec steering_vector(const ArrayGeometry& geom, const AngleParam& angle) {
  detail::check_angle(geom, angle);
  RVec phase, slope;
  detail::phases(geom, angle, phase, slope);
  CVec a(geom.size());
  for (int i = 0; i < geom.size(); ++i) a[i] = std::polar(1.0, phase[i]);
  return a;
}

/// Analytic derivative of the steering vector with respect to the angle's
/// own parametrization.
inline CVec steering_derivative(const ArrayGeometry& geom, const AngleParam& angle) {
  detail::check_angle(geom, angle);
  RVec phase, slope;
  detail::phases(geom, angle, phase, slope);
  CVec d(geom.size());
  for (int i = 0; i < geom.size(); ++i)
    d[i] = cd(0.0, slope[i]) * std::polar(1.0, phase[i]);
  return d;
}

/// |f^H a(theta)|
inline double array_gain(const CVec& f, const ArrayGeometry& geom,
                         const AngleParam& angle) {
  require_dims(f.size() == geom.size(), "precoder length must equal antenna count");
  return std::abs(f.dot(steering_vector(geom, angle)));
}

/// ||F^H a(theta)||_2
inline double aggregated_gain(const CMat& F, const ArrayGeometry& geom,
                              const AngleParam& angle) {
  require_dims(F.rows() == geom.size(), "precoder rows must equal antenna count");
  return (F.adjoint() * steering_vector(geom, angle)).norm();
}

/// Angular resolution of a half-wavelength UCA, 1.6 sin(pi / N) radians.
/// Other geometries have no built-in heuristic.
inline double resolution_heuristic(const ArrayGeometry& geom) {
  if (geom.kind() != ArrayKind::uca)
    throw DomainError("no resolution heuristic for this geometry; supply D explicitly");
  return 1.6 * std::sin(kPi / geom.size());
}

/// Evenly spaced inclusive samples of [lo, hi]; a single sample sits at the
/// midpoint.
inline std::vector<double> uniform_grid(double lo, double hi, int count) {
  if (count < 1) throw DomainError("grid needs at least one point");
  if (!(hi >= lo)) throw DomainError("grid interval must satisfy lo <= hi");
  if (count > 1 && hi == lo)
    throw DomainError("degenerate interval cannot hold more than one grid point");
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) {
    g[0] = 0.5 * (lo + hi);
    return g;
  }
  for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
  g.back() = hi;
  return g;
}

}  // namespace beamcrb
