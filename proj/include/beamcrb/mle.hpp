#pragma once

// Synthetic observations Y = ||s|| alpha W^H a_Rx(phi) a_Tx(theta)^H F + N,
// the grid-search maximum-likelihood estimator of (theta, phi, alpha) and a
// Monte-Carlo estimate of the worst-case root mean square error.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <thread>
#include <vector>

#include "beamcrb/crb.hpp"
#include "beamcrb/design.hpp"

namespace beamcrb {

struct ChannelRealization {
  AngleParam theta;
  AngleParam phi;
  SnrSpec snr;
};

struct ReceivedBlock {
  CMat Y;
  std::uint64_t noise_seed = 0;
};

inline ReceivedBlock simulate_received(const ChannelRealization& ch, const CMat& F,
                                       const Combiner& W, const ArrayGeometry& tx,
                                       const ArrayGeometry& rx, std::uint64_t seed) {
  require_dims(F.rows() == tx.size(), "precoder rows must equal N_Tx");
  require_dims(W.antennas() == rx.size(), "combiner rows must equal N_Rx");
  const CVec u = W.matrix().adjoint() * steering_vector(rx, ch.phi);
  const CVec v = F.adjoint() * steering_vector(tx, ch.theta);
  ReceivedBlock out;
  out.noise_seed = seed;
  out.Y = (std::sqrt(ch.snr.pilot_energy()) * ch.snr.alpha()) * u * v.adjoint();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5 * ch.snr.noise_var()));
  for (Eigen::Index j = 0; j < out.Y.cols(); ++j)
    for (Eigen::Index i = 0; i < out.Y.rows(); ++i) {
      const double re = nd(rng);
      const double im = nd(rng);
      out.Y(i, j) += cd(re, im);
    }
  return out;
}

struct MleEstimate {
  AngleParam theta;
  AngleParam phi;
  cd alpha;
  double score = 0.0;
};

namespace detail {

inline double concentrated_score(const CMat& Y, const CVec& u, const CVec& v) {
  const double nu = u.squaredNorm();
  const double nv = v.squaredNorm();
  if (!(nu > 0.0 && nv > 0.0)) return 0.0;
  return std::norm(u.dot(Y * v)) / (nu * nv);
}

// Golden-section maximization of f on [lo, hi].
template <class Fn>
double golden_max(Fn f, double lo, double hi, int iterations = 40) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iterations; ++k) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? c : d;
}

}  // namespace detail

/// Exhaustive search of |u^H Y v|^2 / (||u||^2 ||v||^2) with
/// u = W^H a_Rx(phi), v = F^H a_Tx(theta). Ties keep the first pair in
/// (theta, phi) order. With `refine`, one golden-section pass per angle
/// polishes the grid maximizer within one grid step.
inline MleEstimate mle_estimate(const ReceivedBlock& block, const CMat& F, const Combiner& W,
                                const ArrayGeometry& tx, const ArrayGeometry& rx,
                                const std::vector<AngleParam>& tx_grid,
                                const std::vector<AngleParam>& rx_grid, double pilot_energy,
                                bool refine = false) {
  if (tx_grid.empty() || rx_grid.empty()) throw DomainError("search grid is empty");
  require_dims(block.Y.rows() == W.chains() && block.Y.cols() == F.cols(),
               "Y must be L x M");
  if (!(pilot_energy > 0.0)) throw DomainError("pilot energy must be positive");
  const int P = static_cast<int>(tx_grid.size());
  const int Q = static_cast<int>(rx_grid.size());
  CMat V(F.cols(), P);
  for (int p = 0; p < P; ++p) V.col(p) = F.adjoint() * steering_vector(tx, tx_grid[p]);
  CMat U(W.chains(), Q);
  for (int q = 0; q < Q; ++q) U.col(q) = W.matrix().adjoint() * steering_vector(rx, rx_grid[q]);
  const CMat C = U.adjoint() * block.Y * V;  // Q x P
  const RVec nu = U.colwise().squaredNorm().transpose();
  const RVec nv = V.colwise().squaredNorm().transpose();

  int bp = 0, bq = 0;
  double best = -1.0;
  for (int p = 0; p < P; ++p)
    for (int q = 0; q < Q; ++q) {
      const double den = nu[q] * nv[p];
      const double sc = den > 0.0 ? std::norm(C(q, p)) / den : 0.0;
      if (sc > best) best = sc, bp = p, bq = q;
    }

  MleEstimate est;
  est.theta = tx_grid[bp];
  est.phi = rx_grid[bq];
  est.score = best;
  if (refine) {
    const auto step = [](const std::vector<AngleParam>& g, int i) {
      if (g.size() < 2) return 0.0;
      return std::abs(g[std::min<std::size_t>(i + 1, g.size() - 1)].value -
                      g[i > 0 ? i - 1 : 0].value) /
             (i > 0 && i + 1 < static_cast<int>(g.size()) ? 2.0 : 1.0);
    };
    const double ht = step(tx_grid, bp), hr = step(rx_grid, bq);
    CVec u = U.col(bq);
    if (ht > 0.0) {
      const auto f = [&](double t) {
        return detail::concentrated_score(block.Y, u,
                                          F.adjoint() * steering_vector(tx, {t, est.theta.param}));
      };
      const double t = detail::golden_max(f, est.theta.value - ht, est.theta.value + ht);
      if (f(t) > est.score) est.theta.value = t, est.score = f(t);
    }
    const CVec v = F.adjoint() * steering_vector(tx, est.theta);
    if (hr > 0.0) {
      const auto f = [&](double t) {
        return detail::concentrated_score(
            block.Y, W.matrix().adjoint() * steering_vector(rx, {t, est.phi.param}), v);
      };
      const double t = detail::golden_max(f, est.phi.value - hr, est.phi.value + hr);
      if (f(t) > est.score) est.phi.value = t, est.score = f(t);
    }
  }
  const CVec u = W.matrix().adjoint() * steering_vector(rx, est.phi);
  const CVec v = F.adjoint() * steering_vector(tx, est.theta);
  const double den = std::sqrt(pilot_energy) * u.squaredNorm() * v.squaredNorm();
  est.alpha = den > 0.0 ? u.dot(block.Y * v) / den : cd(0.0, 0.0);
  return est;
}

struct MonteCarloConfig {
  ArrayGeometry tx = ArrayGeometry::uca(30);
  ArrayGeometry rx = ArrayGeometry::uca(30);
  Combiner combiner = Combiner::identity(30);
  CMat F;
  Parametrization param = Parametrization::azimuth;
  Interval tx_range{deg2rad(70.0), deg2rad(90.0)};
  Interval rx_range{deg2rad(70.0), deg2rad(90.0)};
  double snr_db = -10.0;
  double pilot_energy = 1.0;
  double noise_var = 1.0;
  int trials = 100;
  int bins = 5;
  int search_tx = 201;
  int search_rx = 201;
  bool refine = false;
  /// 0 picks BEAMCRB_THREADS or the hardware concurrency.
  int threads = 0;
};

struct RmseReport {
  std::vector<double> aod_bins;  // rMSE per AoD bin
  std::vector<double> aoa_bins;  // rMSE per AoA bin
  std::vector<int> aod_counts;
  std::vector<int> aoa_counts;
  double worst_aod = 0.0;
  double worst_aoa = 0.0;
  /// Reported values are in degrees for azimuth.
  bool degrees = true;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of trial `k` derived from the experiment seed.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t k) {
  return splitmix64(splitmix64(seed) ^ splitmix64(k + 0x632be59bd9b4e019ULL));
}

inline int thread_budget(int requested) {
  int cap = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("BEAMCRB_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return requested >= 1 ? std::min(requested, cap) : cap;
}

namespace detail {

struct TrialOutcome {
  double theta = 0.0, phi = 0.0;
  double err_theta = 0.0, err_phi = 0.0;
};

inline int bin_of(double v, const Interval& r, int bins) {
  if (!(r.hi > r.lo)) return 0;
  const int b = static_cast<int>(std::floor((v - r.lo) / (r.hi - r.lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace detail

inline RmseReport monte_carlo_rmse(const MonteCarloConfig& cfg, std::uint64_t seed) {
  if (cfg.trials < 1) throw DomainError("trials must be at least 1");
  if (cfg.bins < 1) throw DomainError("bins must be at least 1");
  const auto tx_grid = make_grid(cfg.tx_range, cfg.search_tx, cfg.param);
  const auto rx_grid = make_grid(cfg.rx_range, cfg.search_rx, cfg.param);
  const double snr_lin = db2lin(cfg.snr_db);
  const double mag = std::sqrt(snr_lin * cfg.noise_var / cfg.pilot_energy);

  std::vector<detail::TrialOutcome> out(static_cast<std::size_t>(cfg.trials));
  const auto run = [&](int k) {
    std::mt19937_64 rng(trial_seed(seed, static_cast<std::uint64_t>(k)));
    std::uniform_real_distribution<double> ut(cfg.tx_range.lo, cfg.tx_range.hi);
    std::uniform_real_distribution<double> ur(cfg.rx_range.lo, cfg.rx_range.hi);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * kPi);
    const double th = ut(rng);
    const double ph = ur(rng);
    const double phase = uphase(rng);
    const std::uint64_t noise_seed = rng();
    const ChannelRealization ch{{th, cfg.param}, {ph, cfg.param},
                                SnrSpec(std::polar(mag, phase), cfg.pilot_energy, cfg.noise_var)};
    const auto blk = simulate_received(ch, cfg.F, cfg.combiner, cfg.tx, cfg.rx, noise_seed);
    const auto est = mle_estimate(blk, cfg.F, cfg.combiner, cfg.tx, cfg.rx, tx_grid, rx_grid,
                                  cfg.pilot_energy, cfg.refine);
    auto& o = out[static_cast<std::size_t>(k)];
    o.theta = th;
    o.phi = ph;
    o.err_theta = angular_distance(est.theta.value, th, cfg.param);
    o.err_phi = angular_distance(est.phi.value, ph, cfg.param);
  };

  const int nt = std::min(thread_budget(cfg.threads), cfg.trials);
  if (nt <= 1) {
    for (int k = 0; k < cfg.trials; ++k) run(k);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        for (int k = w; k < cfg.trials; k += nt) run(k);
      });
    for (auto& t : pool) t.join();
  }

  RmseReport rep;
  rep.degrees = cfg.param == Parametrization::azimuth;
  std::vector<double> se_t(cfg.bins, 0.0), se_p(cfg.bins, 0.0);
  rep.aod_counts.assign(cfg.bins, 0);
  rep.aoa_counts.assign(cfg.bins, 0);
  for (const auto& o : out) {
    const int bt = detail::bin_of(o.theta, cfg.tx_range, cfg.bins);
    const int bp = detail::bin_of(o.phi, cfg.rx_range, cfg.bins);
    se_t[bt] += o.err_theta * o.err_theta;
    se_p[bp] += o.err_phi * o.err_phi;
    ++rep.aod_counts[bt];
    ++rep.aoa_counts[bp];
  }
  const auto unit = [&](double v) { return rep.degrees ? rad2deg(v) : v; };
  for (int b = 0; b < cfg.bins; ++b) {
    const double rt = rep.aod_counts[b] ? std::sqrt(se_t[b] / rep.aod_counts[b]) : 0.0;
    const double rp = rep.aoa_counts[b] ? std::sqrt(se_p[b] / rep.aoa_counts[b]) : 0.0;
    rep.aod_bins.push_back(unit(rt));
    rep.aoa_bins.push_back(unit(rp));
    rep.worst_aod = std::max(rep.worst_aod, unit(rt));
    rep.worst_aoa = std::max(rep.worst_aoa, unit(rp));
  }
  return rep;
}

}  // namespace beamcrb
