#pragma once

// Cramer-Rao bounds on the AoD (direction error bound, DEB) and AoA
// (orientation error bound, OEB) of a single path observed through
// precoders F and an orthonormal combiner W.

#include <algorithm>
#include <cmath>
#include <vector>

#include "beamcrb/array_model.hpp"
#include "beamcrb/core.hpp"

namespace beamcrb {

/// Pilot energy ||s||^2, noise variance and complex path gain. The SNR is
/// |alpha|^2 ||s||^2 / sigma^2.
class SnrSpec {
 public:
  SnrSpec(cd alpha, double pilot_energy, double noise_var)
      : alpha_(alpha), pilot_energy_(pilot_energy), noise_var_(noise_var) {
    if (!(noise_var > 0.0) || !std::isfinite(noise_var))
      throw DomainError("noise variance must be positive");
    if (!(pilot_energy >= 0.0) || !std::isfinite(pilot_energy))
      throw DomainError("pilot energy must be nonnegative");
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
      throw DomainError("channel gain must be finite");
  }

  /// SNR in dB with |alpha| carrying it; the phase of alpha is `phase` rad.
  static SnrSpec from_db(double snr_db, double pilot_energy = 1.0,
                         double noise_var = 1.0, double phase = 0.0) {
    if (!std::isfinite(snr_db)) throw DomainError("SNR must be finite");
    if (!(pilot_energy > 0.0)) throw DomainError("pilot energy must be positive");
    const double mag = std::sqrt(db2lin(snr_db) * noise_var / pilot_energy);
    return SnrSpec(std::polar(mag, phase), pilot_energy, noise_var);
  }

  cd alpha() const { return alpha_; }
  double pilot_energy() const { return pilot_energy_; }
  double noise_var() const { return noise_var_; }
  double snr_linear() const { return std::norm(alpha_) * pilot_energy_ / noise_var_; }

 private:
  cd alpha_;
  double pilot_energy_;
  double noise_var_;
};

/// Receive combiner with orthonormal columns (W^H W = I).
class Combiner {
 public:
  explicit Combiner(CMat w, double tol = 1e-10) : w_(std::move(w)) {
    if (w_.cols() < 1 || w_.rows() < w_.cols())
      throw DimensionError("combiner must be N_Rx x L with 1 <= L <= N_Rx");
    const double dev =
        (w_.adjoint() * w_ - CMat::Identity(w_.cols(), w_.cols())).cwiseAbs().maxCoeff();
    if (dev > tol) throw DomainError("combiner columns are not orthonormal");
  }

  static Combiner identity(int n_rx) { return Combiner(CMat::Identity(n_rx, n_rx)); }

  const CMat& matrix() const { return w_; }
  int antennas() const { return static_cast<int>(w_.rows()); }
  int chains() const { return static_cast<int>(w_.cols()); }

 private:
  CMat w_;
};

/// Hermitian PSD matrix X standing in for F F^H.
struct Gram {
  CMat X;
};

/// Quadratic terms of a signature s = B^H a and its derivative sd = B^H a':
/// ||s||^2, ||sd||^2 and s^H sd.
struct SignatureTerms {
  double gain2 = 0.0;
  double deriv2 = 0.0;
  cd cross{0.0, 0.0};

  /// ||sd||^2 - |s^H sd|^2 / ||s||^2, clamped to zero below a relative
  /// floor of 1e-14.
  double orthogonal_energy() const {
    if (!(gain2 > 0.0)) return 0.0;
    const double v = deriv2 - std::norm(cross) / gain2;
    return v <= 1e-14 * deriv2 ? 0.0 : v;
  }
};

inline SignatureTerms signature_terms(const CMat& B, const CVec& a, const CVec& da) {
  require_dims(B.rows() == a.size(), "matrix rows must equal antenna count");
  const CVec s = B.adjoint() * a;
  const CVec sd = B.adjoint() * da;
  return {s.squaredNorm(), sd.squaredNorm(), s.dot(sd)};
}

inline SignatureTerms signature_terms(const Gram& g, const CVec& a, const CVec& da) {
  require_dims(g.X.rows() == a.size() && g.X.cols() == a.size(),
               "X must be N_Tx x N_Tx");
  const CVec xa = g.X * a;
  const CVec xd = g.X * da;
  return {a.dot(xa).real(), da.dot(xd).real(), a.dot(xd)};
}

template <class TxSource>
SignatureTerms tx_terms(const TxSource& src, const ArrayGeometry& tx, const AngleParam& theta) {
  return signature_terms(src, steering_vector(tx, theta), steering_derivative(tx, theta));
}

inline SignatureTerms rx_terms(const Combiner& w, const ArrayGeometry& rx,
                               const AngleParam& phi) {
  require_dims(w.antennas() == rx.size(), "combiner rows must equal N_Rx");
  return signature_terms(w.matrix(), steering_vector(rx, phi), steering_derivative(rx, phi));
}

namespace detail {

inline double inverse_bound(double info) { return info > 0.0 ? 1.0 / info : kInf; }

}  // namespace detail

inline double deb_from_terms(const SignatureTerms& tx, const SignatureTerms& rx,
                             const SnrSpec& snr) {
  return detail::inverse_bound(2.0 * snr.snr_linear() * rx.gain2 * tx.orthogonal_energy());
}

inline double oeb_from_terms(const SignatureTerms& tx, const SignatureTerms& rx,
                             const SnrSpec& snr) {
  return detail::inverse_bound(2.0 * snr.snr_linear() * tx.gain2 * rx.orthogonal_energy());
}

/// Direction error bound (variance bound on the AoD), +inf when the
/// information vanishes. `TxSource` is a precoder matrix or a Gram.
template <class TxSource>
double deb(const AngleParam& theta, const AngleParam& phi, const TxSource& F,
           const Combiner& W, const SnrSpec& snr, const ArrayGeometry& tx,
           const ArrayGeometry& rx) {
  return deb_from_terms(tx_terms(F, tx, theta), rx_terms(W, rx, phi), snr);
}

/// Orientation error bound (variance bound on the AoA).
template <class TxSource>
double oeb(const AngleParam& theta, const AngleParam& phi, const TxSource& F,
           const Combiner& W, const SnrSpec& snr, const ArrayGeometry& tx,
           const ArrayGeometry& rx) {
  return oeb_from_terms(tx_terms(F, tx, theta), rx_terms(W, rx, phi), snr);
}

/// Fisher information of (theta, phi, Re alpha, Im alpha).
inline Eigen::Matrix4d fim(const AngleParam& theta, const AngleParam& phi, const CMat& F,
                           const Combiner& W, const SnrSpec& snr, const ArrayGeometry& tx,
                           const ArrayGeometry& rx) {
  require_dims(F.rows() == tx.size(), "precoder rows must equal N_Tx");
  require_dims(W.antennas() == rx.size(), "combiner rows must equal N_Rx");
  const CVec at = F.adjoint() * steering_vector(tx, theta);
  const CVec dat = F.adjoint() * steering_derivative(tx, theta);
  const CVec ar = W.matrix().adjoint() * steering_vector(rx, phi);
  const CVec dar = W.matrix().adjoint() * steering_derivative(rx, phi);

  const double k = 2.0 * snr.pilot_energy() / snr.noise_var();
  const double s2 = 2.0 * snr.snr_linear();
  const cd alpha = snr.alpha();
  const double nr = ar.squaredNorm();
  const double nt = at.squaredNorm();
  const cd rx_cross = ar.dot(dar);   // ar^H dar
  const cd tx_cross = at.dot(dat);   // at^H dat
  const cd tx_back = dat.dot(at);    // dat^H at

  Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
  J(0, 0) = s2 * nr * dat.squaredNorm();
  J(1, 1) = s2 * dar.squaredNorm() * nt;
  J(2, 2) = J(3, 3) = k * nr * nt;
  J(0, 1) = s2 * (rx_cross * tx_cross).real();
  J(0, 2) = k * nr * (alpha * tx_back).real();
  J(0, 3) = k * nr * (alpha * tx_back).imag();
  J(1, 2) = k * (alpha * rx_cross).real() * nt;
  J(1, 3) = k * (alpha * rx_cross).imag() * nt;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) J(i, j) = J(j, i);
  return J;
}

struct KConstants {
  double k_d = 0.0;
  double k_o = 0.0;
};

/// K_D = min_q ||W^H a_Rx^q||^2 and K_O = min_q of the Rx orthogonal
/// derivative energy over the receive grid.
inline KConstants k_constants(const Combiner& W, const std::vector<AngleParam>& rx_grid,
                              const ArrayGeometry& rx) {
  if (rx_grid.empty()) throw DomainError("receive grid is empty");
  KConstants k{kInf, kInf};
  for (const auto& phi : rx_grid) {
    const auto t = rx_terms(W, rx, phi);
    k.k_d = std::min(k.k_d, t.gain2);
    k.k_o = std::min(k.k_o, t.orthogonal_energy());
  }
  return k;
}

/// Norm of the part of ds/dtheta orthogonal to s = F^H a_Tx(theta).
inline double signature_orthogonal_norm(const AngleParam& theta, const CMat& F,
                                        const ArrayGeometry& tx) {
  require_dims(F.rows() == tx.size(), "precoder rows must equal N_Tx");
  const CVec s = F.adjoint() * steering_vector(tx, theta);
  const CVec sd = F.adjoint() * steering_derivative(tx, theta);
  const double n2 = s.squaredNorm();
  if (!(n2 > 0.0)) throw DomainError("zero signature: projection undefined");
  return (sd - (s.dot(sd) / n2) * s).norm();
}

/// Worst-case bounds over an AoD x AoA evaluation grid. Bounds are in
/// squared parameter units; root_* converts to degrees for azimuth.
struct BoundReport {
  double deb = 0.0;
  double oeb = 0.0;
  double eb = 0.0;
  AngleParam deb_theta, deb_phi;
  AngleParam oeb_theta, oeb_phi;
  AngleParam eb_theta, eb_phi;

  static double root(double bound, Parametrization p) {
    const double r = std::sqrt(bound);
    return p == Parametrization::azimuth ? rad2deg(r) : r;
  }
  double rdeb() const { return root(deb, deb_theta.param); }
  double roeb() const { return root(oeb, oeb_phi.param); }
  double reb() const {
    return root(eb, eb == deb ? deb_theta.param : oeb_phi.param);
  }
};

/// Worst case of DEB, OEB and max(DEB, OEB) over tx_grid x rx_grid. The
/// bounds factor into a transmit and a receive part, so the maxima are found
/// from two one-dimensional sweeps. Ties keep the first grid index.
template <class TxSource>
BoundReport worst_case_bounds(const std::vector<AngleParam>& tx_grid,
                              const std::vector<AngleParam>& rx_grid, const TxSource& F,
                              const Combiner& W, const SnrSpec& snr,
                              const ArrayGeometry& tx, const ArrayGeometry& rx) {
  if (tx_grid.empty() || rx_grid.empty()) throw DomainError("evaluation grid is empty");
  std::size_t it_info = 0, it_gain = 0, iq_info = 0, iq_gain = 0;
  double min_tx_info = kInf, min_tx_gain = kInf, min_rx_info = kInf, min_rx_gain = kInf;
  for (std::size_t i = 0; i < tx_grid.size(); ++i) {
    const auto t = tx_terms(F, tx, tx_grid[i]);
    const double info = t.orthogonal_energy();
    if (info < min_tx_info) min_tx_info = info, it_info = i;
    if (t.gain2 < min_tx_gain) min_tx_gain = t.gain2, it_gain = i;
  }
  for (std::size_t q = 0; q < rx_grid.size(); ++q) {
    const auto r = rx_terms(W, rx, rx_grid[q]);
    const double info = r.orthogonal_energy();
    if (info < min_rx_info) min_rx_info = info, iq_info = q;
    if (r.gain2 < min_rx_gain) min_rx_gain = r.gain2, iq_gain = q;
  }
  const double s2 = 2.0 * snr.snr_linear();
  BoundReport rep;
  rep.deb = detail::inverse_bound(s2 * min_rx_gain * min_tx_info);
  rep.deb_theta = tx_grid[it_info];
  rep.deb_phi = rx_grid[iq_gain];
  rep.oeb = detail::inverse_bound(s2 * min_tx_gain * min_rx_info);
  rep.oeb_theta = tx_grid[it_gain];
  rep.oeb_phi = rx_grid[iq_info];
  if (rep.deb >= rep.oeb) {
    rep.eb = rep.deb;
    rep.eb_theta = rep.deb_theta;
    rep.eb_phi = rep.deb_phi;
  } else {
    rep.eb = rep.oeb;
    rep.eb_theta = rep.oeb_theta;
    rep.eb_phi = rep.oeb_phi;
  }
  return rep;
}

}  // namespace beamcrb
