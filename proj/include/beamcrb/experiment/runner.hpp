#pragma once

// Experiment runners behind the CLI subcommands. Each runner stages all of
// its files in memory and writes them only when the whole command succeeds.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "beamcrb/crb.hpp"
#include "beamcrb/design.hpp"
#include "beamcrb/experiment/config.hpp"
#include "beamcrb/experiment/io.hpp"
#include "beamcrb/mle.hpp"
#include "beamcrb/recovery.hpp"
#include "beamcrb/sector.hpp"

namespace beamcrb::experiment {

/// Overrides given on the command line.
struct RunOptions {
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<Variant> variant;
  bool refine_mle = false;
  std::optional<fs::path> precoders;
  bool renormalize = false;
  std::string axis;
};

inline void apply_options(ExperimentConfig& c, const RunOptions& o) {
  if (o.out) c.output_dir = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.variant) {
    c.variant = *o.variant;
    if (c.variant == Variant::aoa) c.rho.reset();
  }
  if (o.refine_mle) c.refine_mle = true;
}

/// Files a command produced plus messages for stderr.
struct CommandResult {
  std::vector<io::Artifact> files;
  std::vector<std::string> warnings;
};

inline std::string unit_suffix(Parametrization p) {
  return p == Parametrization::azimuth ? "_deg" : "_omega";
}

/// Angle value as written to files: degrees for azimuth, omega otherwise.
inline double file_angle(const AngleParam& a) {
  return a.param == Parametrization::azimuth ? rad2deg(a.value) : a.value;
}

inline io::json metadata(const ExperimentConfig& c, const std::string& command) {
  io::json m;
  m["command"] = command;
  m["config_hash"] = c.hash();
  m["config"] = c.source;
  m["seed"] = c.seed;
  m["variant"] = to_string(c.variant);
  m["combiner"] = c.combiner_file ? c.combiner_file->string() : std::string("identity");
  m["solver"] = {{"feastol", c.solver.feastol},
                 {"abstol", c.solver.abstol},
                 {"reltol", c.solver.reltol},
                 {"max_iterations", c.solver.max_iterations},
                 {"eigen_floor", c.eigen_floor}};
  return m;
}

struct EvalGrids {
  std::vector<AngleParam> tx, rx;
};

inline EvalGrids eval_grids(const DesignProblem& pb, int factor) {
  const int st = pb.tx_range.hi > pb.tx_range.lo ? std::max(2, pb.s_tx * factor) : 1;
  const int sr = pb.rx_range.hi > pb.rx_range.lo ? std::max(2, pb.s_rx * factor) : 1;
  return {make_grid(pb.tx_range, st, pb.param), make_grid(pb.rx_range, sr, pb.param)};
}

/// SNR with |alpha| fixed by `snr_db` at unit pilot energy and the total
/// pilot energy split evenly over M sequences when `split_energy` is set.
inline SnrSpec snr_for(double snr_db, int m, bool split_energy) {
  const double mag = std::sqrt(db2lin(snr_db));
  return SnrSpec(cd(mag, 0.0), split_energy ? 1.0 / m : 1.0, 1.0);
}

/// Worst in-range aggregated gain in dB over `samples` points of the range.
inline double worst_in_range_gain_db(const CMat& F, const DesignProblem& pb, int samples = 1001) {
  const int n = pb.tx_range.hi > pb.tx_range.lo ? samples : 1;
  double worst = kInf;
  for (const auto& a : make_grid(pb.tx_range, n, pb.param))
    worst = std::min(worst, aggregated_gain(F, pb.tx, a));
  return amplitude_db(worst);
}

struct DesignOutcome {
  DesignProblem problem;
  AssembledProgram assembled;
  ConicSolution solution;
  std::optional<PrecoderSet> precoders;
};

/// Solves the design and recovers the precoders. Throws InfeasibleError,
/// SolverFailure or RankExceedsPrecoders.
inline DesignOutcome run_design(const DesignProblem& pb, std::uint64_t seed) {
  DesignOutcome out{pb, assemble_conic(pb), {}, std::nullopt};
  out.solution = solve_conic(out.assembled, pb);
  require_optimal(out.solution);
  out.precoders = recover_precoders(out.solution, pb.m, seed);
  return out;
}

inline io::json bounds_json(const BoundReport& r, Parametrization p) {
  const std::string u = unit_suffix(p);
  return {{"reb" + u, r.reb()},
          {"rdeb" + u, r.rdeb()},
          {"roeb" + u, r.roeb()},
          {"deb", r.deb},
          {"oeb", r.oeb},
          {"deb_worst_aod" + u, file_angle(r.deb_theta)},
          {"oeb_worst_aoa" + u, file_angle(r.oeb_phi)}};
}

inline io::Table beampattern_table(const CMat& F, const ArrayGeometry& tx, Parametrization p) {
  std::vector<std::string> h{"angle_deg"};
  for (int m = 0; m < F.cols(); ++m) h.push_back("gain_db_" + std::to_string(m));
  h.push_back("aggregated_db");
  io::Table t(h);
  const double hi = tx.kind() == ArrayKind::ula ? 180.0 : 360.0;
  for (int k = 0; k <= static_cast<int>(hi * 4); ++k) {
    const double deg = 0.25 * k;
    if (tx.kind() != ArrayKind::ula && deg >= 360.0) break;
    const AngleParam a{to_param(deg, p), p};
    const CVec s = F.adjoint() * steering_vector(tx, a);
    std::vector<double> row{deg};
    for (int m = 0; m < F.cols(); ++m) row.push_back(amplitude_db(std::abs(s[m])));
    row.push_back(amplitude_db(s.norm()));
    t.add(row);
  }
  return t;
}

inline CommandResult cmd_design(const ExperimentConfig& c) {
  const DesignProblem pb = design_problem(c);
  const auto d = run_design(pb, c.seed);
  const auto& sol = d.solution;
  const CMat& F = d.precoders->F;
  const auto eg = eval_grids(pb, c.eval_factor);
  const SnrSpec snr = snr_for(c.snr_db, pb.m, false);
  const auto on_x = worst_case_bounds(eg.tx, eg.rx, Gram{sol.X}, pb.combiner, snr, pb.tx, pb.rx);
  const auto on_f = worst_case_bounds(eg.tx, eg.rx, F, pb.combiner, snr, pb.tx, pb.rx);

  CommandResult res;
  if (!sol.message.empty()) res.warnings.push_back(sol.message);
  const auto meta = metadata(c, "design");
  io::stage_table(res.files, "X.csv", io::matrix_table(sol.X), meta);
  io::stage_table(res.files, "F.csv", io::matrix_table(F), meta);
  io::stage_table(res.files, "beampattern.csv", beampattern_table(F, pb.tx, pb.param), meta);

  io::json rep;
  rep["status"] = to_string(sol.status);
  rep["variant"] = to_string(pb.variant);
  rep["t"] = sol.t;
  rep["rank"] = sol.rank_R;
  rep["M"] = pb.m;
  rep["eigen_floor"] = sol.eigen_floor;
  std::vector<double> ev(sol.eigenvalues.data(),
                         sol.eigenvalues.data() + std::min<Eigen::Index>(sol.eigenvalues.size(), 10));
  rep["eigenvalues"] = ev;
  rep["snr_db"] = c.snr_db;
  rep["bounds_X"] = bounds_json(on_x, pb.param);
  rep["bounds_F"] = bounds_json(on_f, pb.param);
  rep["K_D"] = d.assembled.k.k_d;
  rep["K_O"] = d.assembled.k.k_o;
  rep["constraints"] = {{"tx_soc", d.assembled.audit.tx_soc},
                        {"gain_linear", d.assembled.audit.gain_linear},
                        {"pair_soc", d.assembled.audit.pair_soc},
                        {"attenuation_linear", d.assembled.audit.attenuation_linear}};
  rep["worst_in_range_gain_db"] = worst_in_range_gain_db(F, pb);
  rep["solver"] = {{"status", conic::to_string(sol.solver.status)},
                   {"iterations", sol.solver.iterations},
                   {"message", sol.solver.message}};
  rep["meta"] = meta;
  res.files.push_back({"design_report.json", rep.dump(2) + "\n"});
  return res;
}

inline CommandResult cmd_evaluate(const ExperimentConfig& c, const fs::path& precoders,
                                  bool renormalize) {
  const DesignProblem pb = design_problem(c);
  CMat F;
  try {
    F = io::read_matrix_csv(precoders);
  } catch (const io::IoError& e) {
    throw ConfigError(e.what());
  }
  if (F.rows() != pb.tx.size()) throw ConfigError("precoder file must have N_Tx rows");
  CommandResult res;
  for (int m = 0; m < F.cols(); ++m) {
    const double nm = F.col(m).norm();
    if (!(nm > 0.0)) throw ConfigError("precoder column " + std::to_string(m) + " is zero");
    if (std::abs(nm - 1.0) > 1e-6) {
      const std::string w = "precoder column " + std::to_string(m) + " has norm " + io::fmt(nm);
      if (!renormalize) throw ConfigError(w + "; pass --renormalize to rescale");
      res.warnings.push_back(w + "; renormalized");
      F.col(m) /= nm;
    }
  }
  const auto eg = eval_grids(pb, c.eval_factor);
  const SnrSpec snr = snr_for(c.snr_db, static_cast<int>(F.cols()), false);
  const auto r = worst_case_bounds(eg.tx, eg.rx, F, pb.combiner, snr, pb.tx, pb.rx);
  const auto k = k_constants(pb.combiner, eg.rx, pb.rx);
  const std::string u = unit_suffix(pb.param);

  const auto meta = metadata(c, "evaluate");
  io::Table b({"snr_db", "reb" + u, "rdeb" + u, "roeb" + u, "k_d", "k_o",
               "deb_worst_aod" + u, "oeb_worst_aoa" + u});
  b.add(std::vector<double>{c.snr_db, r.reb(), r.rdeb(), r.roeb(), k.k_d, k.k_o,
                            file_angle(r.deb_theta), file_angle(r.oeb_phi)});
  io::stage_table(res.files, "bounds.csv", b, meta);

  // Squared correlation of precoded signatures over the AoD grid.
  const double dmin =
      pb.resolution ? *pb.resolution
                    : (pb.tx.kind() == ArrayKind::uca ? resolution_heuristic(pb.tx) : 0.0);
  std::vector<CVec> sig;
  for (const auto& a : eg.tx) sig.push_back(F.adjoint() * steering_vector(pb.tx, a));
  io::Table h({"aod" + u, "aod2" + u, "correlation2", "constrained"});
  for (std::size_t i = 0; i < eg.tx.size(); ++i)
    for (std::size_t j = 0; j < eg.tx.size(); ++j) {
      const double den = sig[i].squaredNorm() * sig[j].squaredNorm();
      const double v = den > 0.0 ? std::norm(sig[i].dot(sig[j])) / den : kInf;
      const bool constrained = angular_distance(eg.tx[i].value, eg.tx[j].value, pb.param) > dmin;
      h.add(std::vector<double>{file_angle(eg.tx[i]), file_angle(eg.tx[j]), v,
                                constrained ? 1.0 : 0.0});
    }
  io::json hm = meta;
  hm["resolution" + u] = pb.param == Parametrization::azimuth ? rad2deg(dmin) : dmin;
  io::stage_table(res.files, "identifiability.csv", h, hm);
  return res;
}

/// First SNR (in sweep order) whose rMSE is within `factor` of the bound.
inline std::optional<double> snr_threshold(const std::vector<double>& snr,
                                           const std::vector<double>& rmse,
                                           const std::vector<double>& bound, double factor = 2.0) {
  for (std::size_t i = 0; i < snr.size(); ++i)
    if (rmse[i] <= factor * bound[i]) return snr[i];
  return std::nullopt;
}

inline CommandResult cmd_simulate(const ExperimentConfig& c) {
  CommandResult res;
  const auto meta = metadata(c, "simulate");
  const std::string u = unit_suffix(c.param);
  io::Table t({"rho", "snr_db", "rank", "rmse_aod" + u, "rmse_aoa" + u, "rdeb" + u, "roeb" + u,
               "ratio_aod", "ratio_aoa"});
  std::vector<std::string> bh{"rho", "snr_db", "bin", "aod_count", "rmse_aod" + u, "aoa_count",
                              "rmse_aoa" + u};
  io::Table bins(bh);
  io::Table thr({"rho", "threshold_snr_db_aod", "threshold_snr_db_aoa"});

  for (double rho : c.simulate.rho) {
    ExperimentConfig ci = c;
    ci.rho = rho < 1.0 && c.variant != Variant::aoa ? std::optional<double>(rho) : std::nullopt;
    const DesignProblem pb = design_problem(ci);
    const auto d = run_design(pb, c.seed);
    if (!d.solution.message.empty()) res.warnings.push_back(d.solution.message);
    const auto eg = eval_grids(pb, c.eval_factor);
    std::vector<double> rm_t, rm_p, bd_t, bd_p;
    for (double snr_db : c.simulate.snr_db) {
      MonteCarloConfig mc;
      mc.tx = pb.tx;
      mc.rx = pb.rx;
      mc.combiner = pb.combiner;
      mc.F = d.precoders->F;
      mc.param = pb.param;
      mc.tx_range = pb.tx_range;
      mc.rx_range = pb.rx_range;
      mc.snr_db = snr_db;
      mc.trials = c.trials;
      mc.bins = c.simulate.bins;
      mc.search_tx = std::max(2, pb.s_tx * c.search_factor);
      mc.search_rx = std::max(2, pb.s_rx * c.search_factor);
      mc.refine = c.refine_mle;
      const auto rep = monte_carlo_rmse(mc, c.seed);
      const auto b = worst_case_bounds(eg.tx, eg.rx, mc.F, pb.combiner, snr_for(snr_db, pb.m, false),
                                       pb.tx, pb.rx);
      rm_t.push_back(rep.worst_aod);
      rm_p.push_back(rep.worst_aoa);
      bd_t.push_back(b.rdeb());
      bd_p.push_back(b.roeb());
      t.add(std::vector<double>{rho, snr_db, double(d.solution.rank_R), rep.worst_aod,
                                rep.worst_aoa, b.rdeb(), b.roeb(), rep.worst_aod / b.rdeb(),
                                rep.worst_aoa / b.roeb()});
      for (int k = 0; k < mc.bins; ++k)
        bins.add(std::vector<double>{rho, snr_db, double(k), double(rep.aod_counts[k]),
                                     rep.aod_bins[k], double(rep.aoa_counts[k]), rep.aoa_bins[k]});
    }
    const auto th = snr_threshold(c.simulate.snr_db, rm_t, bd_t);
    const auto tp = snr_threshold(c.simulate.snr_db, rm_p, bd_p);
    thr.add(std::vector<std::string>{io::fmt(rho), th ? io::fmt(*th) : "none",
                                     tp ? io::fmt(*tp) : "none"});
  }
  io::stage_table(res.files, "rmse.csv", t, meta);
  io::stage_table(res.files, "rmse_bins.csv", bins, meta);
  io::stage_table(res.files, "thresholds.csv", thr, meta);
  return res;
}

inline const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes{"M", "range_width", "N_Tx_split", "baseline"};
  return axes;
}

/// Worst-case root bounds of the design recovered with M precoders, at a
/// fixed total training energy. Returns nullopt when rank(X) > M.
struct SweepPoint {
  int rank = 0;
  std::optional<BoundReport> bounds;
};

inline SweepPoint sweep_point(const DesignProblem& pb, const ExperimentConfig& c) {
  SweepPoint p;
  const auto sol = require_optimal(solve_design(pb));
  p.rank = sol.rank_R;
  if (sol.rank_R > pb.m) return p;
  const auto F = recover_precoders(sol, pb.m, c.seed).F;
  const auto eg = eval_grids(pb, c.eval_factor);
  p.bounds = worst_case_bounds(eg.tx, eg.rx, F, pb.combiner, snr_for(c.snr_db, pb.m, true), pb.tx,
                               pb.rx);
  return p;
}

inline ExperimentConfig with_width(ExperimentConfig c, double width) {
  c.tx_hi_deg = c.tx_lo_deg + width;
  c.rx_hi_deg = c.rx_lo_deg + width;
  return c;
}

inline CommandResult cmd_sweep(const ExperimentConfig& c, const std::string& axis) {
  CommandResult res;
  const auto meta = [&] {
    auto m = metadata(c, "sweep");
    m["axis"] = axis;
    return m;
  }();
  const std::string u = unit_suffix(c.param);
  const auto opt = [](const std::optional<BoundReport>& b, double (BoundReport::*f)() const) {
    return b ? io::fmt(((*b).*f)()) : std::string("nan");
  };

  if (axis == "M") {
    io::Table t({"range_width_deg", "M", "rank", "recovered", "reb" + u, "rdeb" + u, "roeb" + u});
    for (double w : c.sweep.range_width_deg) {
      const ExperimentConfig cw = with_width(c, w);
      for (int m : c.sweep.m) {
        DesignProblem pb = design_problem(cw);
        pb.m = m;
        const auto p = sweep_point(pb, c);
        t.add(std::vector<std::string>{io::fmt(w), std::to_string(m), std::to_string(p.rank),
                                       p.bounds ? "1" : "0", opt(p.bounds, &BoundReport::reb),
                                       opt(p.bounds, &BoundReport::rdeb),
                                       opt(p.bounds, &BoundReport::roeb)});
      }
    }
    io::stage_table(res.files, "sweep_M.csv", t, meta);
  } else if (axis == "range_width") {
    io::Table t({"range_width_deg", "rank"});
    for (double w : c.sweep.range_width_deg)
      t.add(std::vector<double>{w, double(min_transmit_diversity(design_problem(with_width(c, w))))});
    io::stage_table(res.files, "sweep_range_width.csv", t, meta);
  } else if (axis == "N_Tx_split") {
    if (c.combiner_file) throw ConfigError("the antenna split sweep needs the identity combiner");
    io::Table t({"n_tx", "n_rx", "rdeb_aod_opt" + u, "roeb_aoa_opt" + u, "reb_both_opt" + u});
    for (int n : c.sweep.n_tx) {
      ExperimentConfig cs = c;
      cs.tx.antennas = n;
      cs.rx.antennas = c.sweep.total_antennas - n;
      const auto run = [&](Variant v) {
        ExperimentConfig cv = cs;
        cv.variant = v;
        DesignProblem pb = design_problem(cv);
        const auto sol = require_optimal(solve_design(pb));
        const auto eg = eval_grids(pb, c.eval_factor);
        return worst_case_bounds(eg.tx, eg.rx, Gram{sol.X}, pb.combiner,
                                 snr_for(c.snr_db, pb.m, false), pb.tx, pb.rx);
      };
      t.add(std::vector<double>{double(n), double(cs.rx.antennas), run(Variant::aod).rdeb(),
                                run(Variant::aoa).roeb(), run(Variant::aod_aoa).reb()});
    }
    io::stage_table(res.files, "sweep_antenna_split.csv", t, meta);
  } else if (axis == "baseline") {
    io::Table t({"n_tx", "M", "rank", "rdeb_optimal" + u, "rdeb_sector" + u, "ratio"});
    for (int n : c.sweep.baseline_n_tx)
      for (int m : c.sweep.baseline_m) {
        ExperimentConfig cb = c;
        cb.tx.antennas = n;
        cb.variant = Variant::aod;
        cb.rho.reset();
        DesignProblem pb = design_problem(cb);
        if (pb.param != Parametrization::azimuth)
          throw ConfigError("the sector baseline is defined over azimuth ranges");
        pb.m = m;
        const auto p = sweep_point(pb, c);
        const auto sector = design_sector_beams({pb.tx_range, m, 512}, pb.tx);
        const auto eg = eval_grids(pb, c.eval_factor);
        const auto bs = worst_case_bounds(eg.tx, eg.rx, sector.F, pb.combiner,
                                          snr_for(c.snr_db, m, true), pb.tx, pb.rx);
        const double ro = p.bounds ? p.bounds->rdeb() : std::nan("");
        t.add(std::vector<double>{double(n), double(m), double(p.rank), ro, bs.rdeb(),
                                  bs.rdeb() / ro});
      }
    io::stage_table(res.files, "sweep_baseline.csv", t, meta);
  } else {
    throw ConfigError("unknown sweep axis '" + axis + "'");
  }
  return res;
}

}  // namespace beamcrb::experiment
