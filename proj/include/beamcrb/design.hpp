#pragma once

// Min-max precoder design. The worst-case DEB/OEB problem over grids of
// the prior ranges is lifted to X = F F^H, relaxed to trace(X) = M and
// X >= 0, and solved as a conic program with second-order-cone, linear and
// semidefinite constraints.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "beamcrb/array_model.hpp"
#include "beamcrb/conic/hermitian.hpp"
#include "beamcrb/conic/ipm.hpp"
#include "beamcrb/crb.hpp"

namespace beamcrb {

enum class Variant { aod_aoa, aod, aoa };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::aod_aoa: return "both";
    case Variant::aod: return "aod";
    case Variant::aoa: return "aoa";
  }
  return "unknown";
}

/// Closed interval in the parametrization of the problem (radians or
/// spatial frequency).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Gain limit a(angle)^H X a(angle) <= factor * a(theta)^H X a(theta) for
/// every in-range theta; factor 0 places a null.
struct Attenuation {
  double angle = 0.0;
  double factor = 0.0;
};

struct DesignProblem {
  Variant variant = Variant::aod_aoa;
  ArrayGeometry tx = ArrayGeometry::ula(30);
  ArrayGeometry rx = ArrayGeometry::ula(30);
  Combiner combiner = Combiner::identity(30);
  Parametrization param = Parametrization::azimuth;
  Interval tx_range{deg2rad(70.0), deg2rad(90.0)};
  Interval rx_range{deg2rad(70.0), deg2rad(90.0)};
  int s_tx = 21;
  int s_rx = 21;
  int m = 3;
  std::optional<double> rho;
  /// Resolution D; defaults to the UCA heuristic when rho is set.
  std::optional<double> resolution;
  std::vector<Attenuation> attenuation;
  double eigen_floor = 1e-6;
  conic::SolverSettings solver;

  AngleParam angle(double v) const { return {v, param}; }
};

struct DesignGrids {
  std::vector<AngleParam> tx;
  std::vector<AngleParam> rx;
  std::vector<CVec> a_tx;
  std::vector<CVec> da_tx;
};

inline std::vector<AngleParam> make_grid(const Interval& r, int count, Parametrization p) {
  std::vector<AngleParam> g;
  for (double v : uniform_grid(r.lo, r.hi, count)) g.push_back({v, p});
  return g;
}

inline DesignGrids build_grids(const DesignProblem& pb) {
  DesignGrids g;
  g.tx = make_grid(pb.tx_range, pb.s_tx, pb.param);
  g.rx = make_grid(pb.rx_range, pb.s_rx, pb.param);
  for (const auto& th : g.tx) {
    g.a_tx.push_back(steering_vector(pb.tx, th));
    g.da_tx.push_back(steering_derivative(pb.tx, th));
  }
  return g;
}

inline void validate(const DesignProblem& pb) {
  if (pb.m < 1) throw DomainError("M must be at least 1");
  if (pb.combiner.antennas() != pb.rx.size())
    throw DimensionError("combiner rows must equal N_Rx");
  if (pb.rho) {
    if (pb.variant == Variant::aoa)
      throw DomainError("identifiability constraints apply to AoD estimation only");
    if (!(*pb.rho >= 0.0 && *pb.rho < 1.0))
      throw DomainError("rho must lie in [0, 1) when enabled");
  }
  if (pb.resolution && !(*pb.resolution > 0.0)) throw DomainError("resolution D must be positive");
  for (const auto& a : pb.attenuation)
    if (!(a.factor >= 0.0 && a.factor < 1.0))
      throw DomainError("attenuation factor must lie in [0, 1)");
  if (!(pb.eigen_floor > 0.0 && pb.eigen_floor < 1.0))
    throw DomainError("eigen_floor must lie in (0, 1)");
}

/// Separation of two angles; circular for azimuth.
inline double angular_distance(double a, double b, Parametrization p) {
  const double d = std::abs(a - b);
  if (p == Parametrization::spatial_frequency) return d;
  const double m = std::fmod(d, 2.0 * kPi);
  return std::min(m, 2.0 * kPi - m);
}

struct ConstraintAudit {
  int tx_soc = 0;
  int gain_linear = 0;
  int pair_soc = 0;
  int attenuation_linear = 0;
};

/// Conic program plus the bookkeeping needed to map its solution back.
struct AssembledProgram {
  conic::ConeProgram program;
  ConstraintAudit audit;
  KConstants k;
  /// Native objective t = t_scale * (internal t).
  double t_scale = 1.0;
  int n_tx = 0;
  /// Orthonormal basis of the subspace X lives in (identity without nulls).
  CMat basis;
  std::vector<std::pair<int, int>> pairs;
};

/// Builds the program. X is represented as M * Y with trace(Y) = 1, steering
/// vectors are normalized by sqrt(N_Tx) and derivatives additionally by the
/// largest rms phase slope, so all constraint rows are O(1).
inline AssembledProgram assemble_conic(const DesignProblem& pb) {
  validate(pb);
  namespace h = conic::hermitian;
  const DesignGrids g = build_grids(pb);
  const int n_ant = pb.tx.size();

  // Nulls (factor 0) pin X to the orthogonal complement of their steering
  // vectors; writing X = B Y B^H over that subspace keeps the program
  // strictly feasible.
  std::vector<CVec> nulls;
  for (const auto& att : pb.attenuation)
    if (att.factor == 0.0) nulls.push_back(steering_vector(pb.tx, pb.angle(att.angle)));
  CMat basis = CMat::Identity(n_ant, n_ant);
  if (!nulls.empty()) {
    CMat Nm(n_ant, static_cast<int>(nulls.size()));
    for (std::size_t q = 0; q < nulls.size(); ++q) Nm.col(q) = nulls[q];
    Eigen::JacobiSVD<CMat> svd(Nm, Eigen::ComputeFullU);
    const RVec& sv = svd.singularValues();
    int k = 0;
    while (k < sv.size() && sv[k] > 1e-10 * sv[0]) ++k;
    if (k >= n_ant) throw InfeasibleError("nulls span every transmit direction");
    basis = svd.matrixU().rightCols(n_ant - k);
  }
  const int n = static_cast<int>(basis.cols());
  const int np = h::parameter_count(n);
  const int col_t = np;
  bool use_att = false;
  for (const auto& att : pb.attenuation) use_att = use_att || att.factor > 0.0;
  const int col_z = np + 1;
  const int nvar = np + 1 + (use_att ? 1 : 0);

  AssembledProgram out;
  out.n_tx = n_ant;
  out.basis = basis;
  out.k = k_constants(pb.combiner, g.rx, pb.rx);
  const bool need_aod = pb.variant != Variant::aoa;
  const bool need_aoa = pb.variant != Variant::aod;
  if (need_aod && !(out.k.k_d > 0.0))
    throw DomainError("combiner collects no energy on part of the receive range (K_D = 0)");
  if (need_aoa && !(out.k.k_o > 0.0))
    throw DomainError("combiner carries no AoA information (K_O = 0)");

  double slope = 0.0;
  for (const auto& d : g.da_tx) slope = std::max(slope, d.norm() / std::sqrt(double(n_ant)));
  if (!(slope > 0.0)) slope = 1.0;
  const double sn = std::sqrt(double(n_ant));

  std::vector<CVec> a(g.tx.size()), d(g.tx.size());
  for (std::size_t i = 0; i < g.tx.size(); ++i) {
    a[i] = basis.adjoint() * g.a_tx[i] / sn;
    d[i] = basis.adjoint() * g.da_tx[i] / (sn * slope);
  }
  const double mn = double(pb.m) * n_ant;
  // Gain constraint p_i >= kappa * t.
  double kappa = 1.0;
  switch (pb.variant) {
    case Variant::aoa: out.t_scale = out.k.k_o * mn; break;
    case Variant::aod: out.t_scale = out.k.k_d * mn * slope * slope; break;
    case Variant::aod_aoa:
      out.t_scale = out.k.k_d * mn * slope * slope;
      kappa = out.k.k_d * slope * slope / out.k.k_o;
      break;
  }

  std::vector<conic::Triplet> trip;
  int row = 0;
  const auto put_form = [&](int r, const CVec& k, bool imag, double scale) {
    for (int c = 0; c < np; ++c) {
      const double v = imag ? k[c].imag() : k[c].real();
      if (v != 0.0) trip.emplace_back(r, c, scale * v);
    }
  };

  std::vector<CVec> pk(g.tx.size());
  for (std::size_t i = 0; i < g.tx.size(); ++i) pk[i] = h::form_coefficients(a[i], a[i]);

  // Orthant rows: gain constraints, then attenuation.
  int nonneg = 0;
  if (need_aoa) {
    for (std::size_t i = 0; i < g.tx.size(); ++i) {
      put_form(row, pk[i], false, -1.0);
      trip.emplace_back(row, col_t, kappa);
      ++row;
      ++out.audit.gain_linear;
    }
  }
  if (use_att) {
    for (const auto& att : pb.attenuation) {
      if (att.factor == 0.0) continue;
      const CVec ap = basis.adjoint() * steering_vector(pb.tx, pb.angle(att.angle)) / sn;
      put_form(row, h::form_coefficients(ap, ap), false, 1.0);
      trip.emplace_back(row, col_z, -att.factor);
      ++row;
      ++out.audit.attenuation_linear;
    }
    for (std::size_t i = 0; i < g.tx.size(); ++i) {
      put_form(row, pk[i], false, -1.0);
      trip.emplace_back(row, col_z, 1.0);
      ++row;
      ++out.audit.attenuation_linear;
    }
  }
  nonneg = row;

  std::vector<int> socs;
  if (need_aod) {
    for (std::size_t i = 0; i < g.tx.size(); ++i) {
      const CVec kd = h::form_coefficients(d[i], d[i]);
      const CVec kc = h::form_coefficients(a[i], d[i]);
      // (d - t + p, 2 Re c, 2 Im c, d - t - p)
      put_form(row, kd, false, -1.0);
      put_form(row, pk[i], false, -1.0);
      trip.emplace_back(row, col_t, 1.0);
      put_form(row + 1, kc, false, -2.0);
      put_form(row + 2, kc, true, -2.0);
      put_form(row + 3, kd, false, -1.0);
      put_form(row + 3, pk[i], false, 1.0);
      trip.emplace_back(row + 3, col_t, 1.0);
      row += 4;
      socs.push_back(4);
      ++out.audit.tx_soc;
    }
  }
  if (pb.rho) {
    const double dmin = pb.resolution ? *pb.resolution : resolution_heuristic(pb.tx);
    const double sr = std::sqrt(*pb.rho);
    for (std::size_t i = 0; i < g.tx.size(); ++i)
      for (std::size_t j = i + 1; j < g.tx.size(); ++j) {
        if (!(angular_distance(g.tx[i].value, g.tx[j].value, pb.param) > dmin)) continue;
        const CVec kc = h::form_coefficients(a[i], a[j]);
        // (sqrt(rho)(p_i + p_j), 2 Re c, 2 Im c, sqrt(rho)(p_i - p_j))
        put_form(row, pk[i], false, -sr);
        put_form(row, pk[j], false, -sr);
        put_form(row + 1, kc, false, -2.0);
        put_form(row + 2, kc, true, -2.0);
        put_form(row + 3, pk[i], false, -sr);
        put_form(row + 3, pk[j], false, sr);
        row += 4;
        socs.push_back(4);
        out.pairs.emplace_back(int(i), int(j));
        ++out.audit.pair_soc;
      }
  }
  h::embedding_triplets(n, row, 0, -1.0, trip);
  row += 4 * n * n;

  auto& p = out.program;
  p.dims.nonneg = nonneg;
  p.dims.soc = socs;
  p.dims.psd = {2 * n};
  p.G.resize(row, nvar);
  p.G.setFromTriplets(trip.begin(), trip.end());
  p.h = RVec::Zero(row);
  p.c = RVec::Zero(nvar);
  p.c[col_t] = -1.0;
  p.A.resize(1, nvar);
  std::vector<conic::Triplet> at;
  for (int i = 0; i < n; ++i) at.emplace_back(0, i, 1.0);
  p.A.setFromTriplets(at.begin(), at.end());
  p.b = RVec::Ones(1);
  return out;
}

enum class DesignStatus { optimal, infeasible, numerical_failure };

inline const char* to_string(DesignStatus s) {
  switch (s) {
    case DesignStatus::optimal: return "optimal";
    case DesignStatus::infeasible: return "infeasible";
    case DesignStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

struct ConicSolution {
  CMat X;
  double t = 0.0;
  DesignStatus status = DesignStatus::numerical_failure;
  int rank_R = 0;
  double eigen_floor = 1e-6;
  RVec eigenvalues;  // descending
  conic::SolverResult solver;
  std::string message;
};

/// Eigenvalues of a Hermitian matrix in descending order.
inline RVec descending_eigenvalues(const CMat& X) {
  Eigen::SelfAdjointEigenSolver<CMat> es(X, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

inline int numerical_rank(const RVec& desc, double floor) {
  if (desc.size() == 0 || !(desc[0] > 0.0)) return 0;
  int r = 0;
  for (int i = 0; i < desc.size(); ++i)
    if (desc[i] > floor * desc[0]) ++r;
  return r;
}

inline ConicSolution solve_conic(const AssembledProgram& ap, const DesignProblem& pb) {
  ConicSolution sol;
  sol.eigen_floor = pb.eigen_floor;
  sol.solver = conic::solve(ap.program, pb.solver);
  const auto st = sol.solver.status;
  if (st == conic::SolveStatus::primal_infeasible || st == conic::SolveStatus::dual_infeasible) {
    sol.status = DesignStatus::infeasible;
    sol.message = "the constraints admit no precoder (" + std::string(conic::to_string(st)) + ")";
    return sol;
  }
  if (st == conic::SolveStatus::near_optimal) sol.message = sol.solver.message;
  if (st != conic::SolveStatus::optimal && st != conic::SolveStatus::near_optimal) {
    sol.status = DesignStatus::numerical_failure;
    sol.message = sol.solver.message;
    return sol;
  }
  const int n = static_cast<int>(ap.basis.cols());
  const int np = conic::hermitian::parameter_count(n);
  const CMat Y = conic::hermitian::from_params(sol.solver.x.head(np), n);
  sol.X = double(pb.m) * ap.basis * Y * ap.basis.adjoint();
  sol.X = (0.5 * (sol.X + sol.X.adjoint())).eval();
  sol.t = ap.t_scale * sol.solver.x[np];
  sol.eigenvalues = descending_eigenvalues(sol.X);
  sol.rank_R = numerical_rank(sol.eigenvalues, pb.eigen_floor);
  sol.status = DesignStatus::optimal;
  return sol;
}

inline ConicSolution solve_design(const DesignProblem& pb) {
  return solve_conic(assemble_conic(pb), pb);
}

/// Throws unless the solve reached optimality.
inline const ConicSolution& require_optimal(const ConicSolution& s) {
  if (s.status == DesignStatus::infeasible) throw InfeasibleError(s.message);
  if (s.status != DesignStatus::optimal) throw SolverFailure("conic solver failed: " + s.message);
  return s;
}

/// Smallest number of training sequences that realizes the optimal X.
inline int min_transmit_diversity(const DesignProblem& pb) {
  return require_optimal(solve_design(pb)).rank_R;
}

}  // namespace beamcrb
