// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "beamcrb/beamcrb.hpp"
#include "oracles.hpp"

using namespace beamcrb;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string num(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

DesignProblem uca_problem(Variant v, int n_tx, int n_rx, int m) {
  DesignProblem pb;
  pb.variant = v;
  pb.tx = ArrayGeometry::uca(n_tx);
  pb.rx = ArrayGeometry::uca(n_rx);
  pb.combiner = Combiner::identity(n_rx);
  pb.m = m;
  pb.tx_range = pb.rx_range = {deg2rad(70.0), deg2rad(90.0)};
  pb.s_tx = pb.s_rx = 21;
  return pb;
}

DesignProblem fig3(Variant v) {
  DesignProblem pb;
  pb.variant = v;
  pb.m = 3;
  pb.tx_range = pb.rx_range = {deg2rad(90.0), deg2rad(100.0)};
  pb.s_tx = pb.s_rx = 11;
  return pb;
}

BoundReport evaluate(const DesignProblem& pb, const CMat& F, const SnrSpec& snr, int points = 1001) {
  const auto tg = make_grid(pb.tx_range, points, pb.param);
  const auto rg = make_grid(pb.rx_range, points, pb.param);
  return worst_case_bounds(tg, rg, F, pb.combiner, snr, pb.tx, pb.rx);
}

BoundReport evaluate_x(const DesignProblem& pb, const CMat& X, const SnrSpec& snr,
                       int points = 1001) {
  const auto tg = make_grid(pb.tx_range, points, pb.param);
  const auto rg = make_grid(pb.rx_range, points, pb.param);
  return worst_case_bounds(tg, rg, Gram{X}, pb.combiner, snr, pb.tx, pb.rx);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// 1. Closed-form bounds against the inverse FIM built from the signal model.
Outcome fim_consistency() {
  Outcome o;
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> nn(4, 32), mm(2, 6);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi), db(-20.0, 20.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto tx = oracle::random_geometry(rng, nn(rng));
    const auto rx = oracle::random_geometry(rng, nn(rng));
    const CMat F = oracle::random_unit_columns(tx.size(), mm(rng), rng);
    const auto W = Combiner::identity(rx.size());
    const auto snr = SnrSpec::from_db(db(rng), 1.0, 1.0, ang(rng));
    const AngleParam th = AngleParam::azimuth(ang(rng)), ph = AngleParam::azimuth(ang(rng));
    const Eigen::Matrix4d J = oracle::fim(th, ph, F, W.matrix(), snr.alpha(), snr.pilot_energy(),
                                          snr.noise_var(), tx, rx);
    // Schur complement of the gain block.
    const Eigen::Matrix2d S = J.topLeftCorner<2, 2>() - J.topRightCorner<2, 2>() *
                                                            J.bottomRightCorner<2, 2>().inverse() *
                                                            J.bottomLeftCorner<2, 2>();
    const Eigen::Matrix2d C = S.inverse();
    worst = std::max({worst, rel(deb(th, ph, F, W, snr, tx, rx), C(0, 0)),
                      rel(oeb(th, ph, F, W, snr, tx, rx), C(1, 1))});
  }
  o.check(worst <= 1e-8, "max relative error " + num(worst, 3) + " (limit 1e-8)");
  return o;
}

// 2. Single-point AoA design against its closed form.
Outcome analytic_sdp() {
  Outcome o;
  DesignProblem pb = uca_problem(Variant::aoa, 30, 30, 5);
  pb.s_tx = 1;
  const auto sol = require_optimal(solve_design(pb));
  const auto g = build_grids(pb);
  const auto k = k_constants(pb.combiner, g.rx, pb.rx);
  const CVec a = g.a_tx[0];
  const double want = k.k_o * pb.m * a.squaredNorm();
  const CMat Xs = double(pb.m) * a * a.adjoint() / a.squaredNorm();
  const double dx = (sol.X - Xs).norm();
  o.check(rel(sol.t, want) <= 1e-6, "objective relative error " + num(rel(sol.t, want), 3));
  o.check(dx <= 1e-4 * pb.m, "||X - X*||_F = " + num(dx, 3));
  return o;
}

// 3. Recovery round trip on random PSD matrices.
Outcome recovery_round_trip() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> nn(4, 32), mm(1, 8);
  std::uniform_real_distribution<double> u(0.05, 1.0), ang(0.0, 2.0 * kPi);
  double fro = 0.0, norm = 0.0, bound = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int n = nn(rng), m = mm(rng);
    const int r = std::uniform_int_distribution<int>(1, std::min(m, n))(rng);
    const CMat G = oracle::random_unit_columns(n, r, rng);
    RVec w(r);
    for (int i = 0; i < r; ++i) w[i] = u(rng);
    CMat X = G * w.asDiagonal() * G.adjoint();
    X *= m / X.trace().real();
    const auto F = recover_precoders(X, numerical_rank(descending_eigenvalues(X), 1e-9), m, k).F;
    fro = std::max(fro, (F * F.adjoint() - X).norm() / X.norm());
    for (int j = 0; j < m; ++j) norm = std::max(norm, std::abs(F.col(j).norm() - 1.0));
    const auto geo = ArrayGeometry::uca(n);
    const auto W = Combiner::identity(8);
    const auto rx = ArrayGeometry::uca(8);
    const auto snr = SnrSpec::from_db(-10.0);
    for (int t = 0; t < 3; ++t) {
      const AngleParam th = AngleParam::azimuth(ang(rng)), ph = AngleParam::azimuth(ang(rng));
      const double dx = deb(th, ph, Gram{X}, W, snr, geo, rx);
      const double ox = oeb(th, ph, Gram{X}, W, snr, geo, rx);
      if (std::isfinite(dx)) bound = std::max(bound, rel(deb(th, ph, F, W, snr, geo, rx), dx));
      if (std::isfinite(ox)) bound = std::max(bound, rel(oeb(th, ph, F, W, snr, geo, rx), ox));
    }
  }
  o.check(fro <= 1e-6, "max ||FF^H - X||/||X|| = " + num(fro, 3));
  o.check(norm <= 1e-8, "max column norm deviation " + num(norm, 3));
  o.check(bound <= 1e-9, "max bound mismatch " + num(bound, 3));
  return o;
}

// 4. Ranks of the beampattern and identifiability setups.
Outcome paper_ranks() {
  Outcome o;
  const int both = require_optimal(solve_design(fig3(Variant::aod_aoa))).rank_R;
  const int aod = require_optimal(solve_design(fig3(Variant::aod))).rank_R;
  const int aoa = require_optimal(solve_design(fig3(Variant::aoa))).rank_R;
  o.check(both == 2, "ULA AoD-AoA rank " + std::to_string(both) + " (want 2)");
  o.check(aod == 2, "ULA AoD rank " + std::to_string(aod) + " (want 2)");
  o.check(aoa == 3, "ULA AoA rank " + std::to_string(aoa) + " (want 3)");
  DesignProblem pb = uca_problem(Variant::aod_aoa, 30, 30, 4);
  pb.tx_range = pb.rx_range = {deg2rad(90.0), deg2rad(100.0)};
  pb.s_tx = pb.s_rx = 11;
  pb.rho = 0.1;
  const int r4 = require_optimal(solve_design(pb)).rank_R;
  o.check(r4 == 4, "UCA rho=0.1 rank " + std::to_string(r4) + " (want 4)");
  return o;
}

// 5. Worst in-range aggregated gain of the beampattern setup.
Outcome paper_gains() {
  Outcome o;
  const auto gain = [](Variant v) {
    const auto pb = fig3(v);
    const auto F = recover_precoders(require_optimal(solve_design(pb)), pb.m, 1).F;
    double w = kInf;
    for (const auto& a : make_grid(pb.tx_range, 1001, pb.param))
      w = std::min(w, aggregated_gain(F, pb.tx, a));
    return amplitude_db(w);
  };
  const double ga = gain(Variant::aoa), gd = gain(Variant::aod);
  o.check(std::abs(ga - 14.1) <= 0.3, "AoA-optimal " + num(ga) + " dB (want 14.1 +- 0.3)");
  o.check(std::abs(gd - 13.6) <= 0.3, "AoD-optimal " + num(gd) + " dB (want 13.6 +- 0.3)");
  return o;
}

// 6. Design grid of 8 against 100 AoD points.
Outcome grid_convergence() {
  Outcome o;
  const auto snr = SnrSpec::from_db(-10.0);
  for (Variant v : {Variant::aod_aoa, Variant::aod, Variant::aoa}) {
    auto pb = uca_problem(v, 30, 30, 5);
    const auto metric = [&](int s) {
      pb.s_tx = s;
      const auto r = evaluate_x(pb, require_optimal(solve_design(pb)).X, snr);
      return v == Variant::aod ? r.rdeb() : v == Variant::aoa ? r.roeb() : r.reb();
    };
    const double coarse = metric(8), fine = metric(100);
    const double d = rel(coarse, fine);
    o.check(d < 1e-3, std::string(to_string(v)) + " " + num(coarse, 6) + " vs " + num(fine, 6) +
                          " deg (" + num(100.0 * d, 3) + "%)");
  }
  return o;
}

// 7. Worst-case rEB for M = rank .. rank + 4 at fixed total energy.
Outcome m_invariance() {
  Outcome o;
  auto pb = uca_problem(Variant::aod_aoa, 30, 30, 5);
  pb.rho = 0.6;
  const int r = require_optimal(solve_design(pb)).rank_R;
  std::vector<double> reb;
  std::string line;
  for (int m = r; m <= r + 4; ++m) {
    pb.m = m;
    const auto F = recover_precoders(require_optimal(solve_design(pb)), m, 5).F;
    const SnrSpec snr(cd(std::sqrt(db2lin(-10.0)), 0.0), 1.0 / m, 1.0);
    reb.push_back(evaluate(pb, F, snr).reb());
    line += (line.empty() ? "" : ", ") + num(reb.back(), 6);
  }
  double dev = 0.0;
  for (double v : reb) dev = std::max(dev, rel(v, reb.front()));
  o.check(dev <= 0.01, "rank " + std::to_string(r) + ", rEB [" + line + "] deg, max deviation " +
                           num(100.0 * dev, 3) + "%");
  return o;
}

// 8. Optimal AoD precoders against least-squares sector beams on a ULA.
Outcome sector_gap() {
  Outcome o;
  const auto snr_for = [](int m) { return SnrSpec(cd(std::sqrt(db2lin(-10.0)), 0.0), 1.0 / m, 1.0); };
  std::vector<std::vector<double>> sector_rdeb;
  for (int n : {10, 30, 50}) {
    sector_rdeb.emplace_back();
    for (int m : {4, 6, 8}) {
      DesignProblem pb;
      pb.variant = Variant::aod;
      pb.tx = ArrayGeometry::ula(n);
      pb.m = m;
      pb.tx_range = pb.rx_range = {deg2rad(70.0), deg2rad(90.0)};
      pb.s_tx = pb.s_rx = 21;
      const auto sector = design_sector_beams({pb.tx_range, m, 512}, pb.tx);
      const double rs = evaluate(pb, sector.F, snr_for(m)).rdeb();
      sector_rdeb.back().push_back(rs);
      if (n == 50) continue;
      const auto sol = require_optimal(solve_design(pb));
      const double ro = sol.rank_R <= m
                            ? evaluate(pb, recover_precoders(sol, m, 1).F, snr_for(m)).rdeb()
                            : kInf;
      o.check(rs / ro >= 10.0, "N=" + std::to_string(n) + " M=" + std::to_string(m) +
                                   " ratio " + num(rs / ro, 3));
    }
  }
  for (std::size_t j = 0; j < 3; ++j)
    o.check(sector_rdeb[2][j] > sector_rdeb[0][j],
            "sector rDEB N=10->50 at M=" + std::to_string(4 + 2 * int(j)) + ": " +
                num(sector_rdeb[0][j], 3) + " -> " + num(sector_rdeb[2][j], 3) + " deg");
  return o;
}

// 9. MLE error against the bound in the asymptotic and ambiguity regimes.
Outcome mle_tightness() {
  Outcome o;
  const auto run = [&](std::optional<double> rho, double snr_db) {
    auto pb = uca_problem(Variant::aod_aoa, 30, 30, 5);
    pb.rho = rho;
    const auto F = recover_precoders(require_optimal(solve_design(pb)), pb.m, 42).F;
    MonteCarloConfig mc;
    mc.tx = pb.tx;
    mc.rx = pb.rx;
    mc.combiner = pb.combiner;
    mc.F = F;
    mc.tx_range = pb.tx_range;
    mc.rx_range = pb.rx_range;
    mc.snr_db = snr_db;
    mc.trials = 200;
    mc.search_tx = mc.search_rx = 201;
    const auto rep = monte_carlo_rmse(mc, 42);
    const double rdeb = evaluate(pb, F, SnrSpec::from_db(snr_db), 201).rdeb();
    return rep.worst_aod / rdeb;
  };
  const double tight = run(0.6, 0.0);
  const double loose = run(std::nullopt, -10.0);
  o.check(tight <= 1.3, "rho=0.6, 0 dB: rMSE/rDEB = " + num(tight, 3) + " (want <= 1.3)");
  o.check(loose >= 5.0, "rho=1, -10 dB: rMSE/rDEB = " + num(loose, 3) + " (want >= 5)");
  return o;
}

// 10. Antenna split symmetry between AoD- and AoA-optimal designs.
Outcome split_symmetry() {
  Outcome o;
  const auto snr = SnrSpec::from_db(-10.0);
  const auto bound = [&](Variant v, int n_tx) {
    const auto pb = uca_problem(v, n_tx, 60 - n_tx, 5);
    const auto r = evaluate_x(pb, require_optimal(solve_design(pb)).X, snr);
    return v == Variant::aod ? r.rdeb() : r.roeb();
  };
  for (int a : {10, 20, 30, 40, 50}) {
    const double d = bound(Variant::aod, a);
    const double r = bound(Variant::aoa, 60 - a);
    o.check(rel(d, r) <= 0.2, "rDEB(" + std::to_string(a) + "," + std::to_string(60 - a) + ")=" +
                                  num(d, 4) + " vs rOEB(" + std::to_string(60 - a) + "," +
                                  std::to_string(a) + ")=" + num(r, 4));
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "FIM consistency", 10, fim_consistency},
      {2, "analytic SDP", 5, analytic_sdp},
      {3, "recovery round trip", 10, recovery_round_trip},
      {4, "paper ranks", 120, paper_ranks},
      {5, "paper gains", 60, paper_gains},
      {6, "grid convergence", 120, grid_convergence},
      {7, "M invariance", 180, m_invariance},
      {8, "sector gap", 300, sector_gap},
      {9, "MLE tightness", 600, mle_tightness},
      {10, "antenna split symmetry", 600, split_symmetry},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.check(s <= c.limit_s, "runtime " + num(s, 3) + " s (limit " + num(c.limit_s, 3) + " s)");
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", int(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
