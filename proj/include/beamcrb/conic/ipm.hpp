#pragma once

// Primal-dual interior-point method for ConeProgram.
//
// The method runs on the homogeneous self-dual embedding of the program, so
// it returns either an optimal pair or a certificate of primal or dual
// infeasibility. Search directions use Nesterov-Todd scaling and a Mehrotra
// predictor-corrector step; each Newton system is reduced to the normal
// equations G^T W^-1 W^-T G, factored by Cholesky and polished by iterative
// refinement against the full KKT operator.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "beamcrb/conic/cone_program.hpp"

namespace beamcrb::conic {

struct SolverSettings {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  int max_iterations = 100;
  double step_fraction = 0.99;
  int refinement_steps = 3;
  /// Iterations without a halving of the optimality measure before the
  /// method gives up on reaching full accuracy.
  int stall_iterations = 10;
  /// Looser tolerances accepted for the best iterate when full accuracy is
  /// out of reach.
  double reduced_feastol = 1e-7;
  double reduced_gaptol = 1e-6;
  bool verbose = false;
};

enum class SolveStatus {
  optimal,
  near_optimal,
  primal_infeasible,
  dual_infeasible,
  max_iterations,
  numerical_failure
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::near_optimal: return "near_optimal";
    case SolveStatus::primal_infeasible: return "primal_infeasible";
    case SolveStatus::dual_infeasible: return "dual_infeasible";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

struct SolverResult {
  SolveStatus status = SolveStatus::numerical_failure;
  RVec x, y, s, z;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  std::string message;
};

namespace detail {

struct Layout {
  explicit Layout(const ConeDims& d) : dims(d) {
    int off = d.nonneg;
    for (int q : d.soc) {
      soc_off.push_back(off);
      off += q;
    }
    for (int n : d.psd) {
      psd_off.push_back(off);
      off += n * n;
    }
    rows = off;
  }

  ConeDims dims;
  std::vector<int> soc_off;
  std::vector<int> psd_off;
  int rows = 0;
};

using MapMat = Eigen::Map<RMat>;
using ConstMapMat = Eigen::Map<const RMat>;

inline ConstMapMat psd_block(const Layout& l, const RVec& v, std::size_t j) {
  const int n = l.dims.psd[j];
  return ConstMapMat(v.data() + l.psd_off[j], n, n);
}

inline MapMat psd_block(const Layout& l, RVec& v, std::size_t j) {
  const int n = l.dims.psd[j];
  return MapMat(v.data() + l.psd_off[j], n, n);
}

inline auto soc_block(const Layout& l, const RVec& v, std::size_t j) {
  return v.segment(l.soc_off[j], l.dims.soc[j]);
}

inline auto soc_block(const Layout& l, RVec& v, std::size_t j) {
  return v.segment(l.soc_off[j], l.dims.soc[j]);
}

// Identity element of the cone.
inline RVec unit(const Layout& l) {
  RVec e = RVec::Zero(l.rows);
  e.head(l.dims.nonneg).setOnes();
  for (std::size_t j = 0; j < l.dims.soc.size(); ++j) e[l.soc_off[j]] = 1.0;
  for (std::size_t j = 0; j < l.dims.psd.size(); ++j)
    psd_block(l, e, j).diagonal().setOnes();
  return e;
}

// Smallest "eigenvalue" of v with respect to the cone; negative when v is
// outside.
inline double min_eigenvalue(const Layout& l, const RVec& v) {
  double m = kInf;
  if (l.dims.nonneg > 0) m = v.head(l.dims.nonneg).minCoeff();
  for (std::size_t j = 0; j < l.dims.soc.size(); ++j) {
    const auto b = soc_block(l, v, j);
    m = std::min(m, b[0] - b.tail(b.size() - 1).norm());
  }
  for (std::size_t j = 0; j < l.dims.psd.size(); ++j) {
    const RMat B = psd_block(l, v, j);
    Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (B + B.transpose()), Eigen::EigenvaluesOnly);
    m = std::min(m, es.eigenvalues()[0]);
  }
  return m;
}

// u o v, the Jordan product of the cone algebra.
inline RVec jordan(const Layout& l, const RVec& u, const RVec& v) {
  RVec w(l.rows);
  const int nl = l.dims.nonneg;
  w.head(nl) = u.head(nl).cwiseProduct(v.head(nl));
  for (std::size_t j = 0; j < l.dims.soc.size(); ++j) {
    const auto a = soc_block(l, u, j);
    const auto b = soc_block(l, v, j);
    auto o = soc_block(l, w, j);
    const int q = static_cast<int>(a.size());
    o[0] = a.dot(b);
    o.tail(q - 1) = a[0] * b.tail(q - 1) + b[0] * a.tail(q - 1);
  }
  for (std::size_t j = 0; j < l.dims.psd.size(); ++j) {
    const RMat A = psd_block(l, u, j);
    const RMat B = psd_block(l, v, j);
    psd_block(l, w, j) = 0.5 * (A * B + B * A);
  }
  return w;
}

// Nesterov-Todd scaling W with W z = W^-T s = lambda. Semidefinite blocks
// use W(V) = R^T V R, and lambda is diagonal there.
struct NtScaling {
  RVec lp_w;
  std::vector<RMat> soc_w, soc_winv;
  std::vector<RMat> psd_r, psd_rinv;
  std::vector<RVec> psd_lambda;
  RVec lambda;
};

inline NtScaling identity_scaling(const Layout& l) {
  NtScaling w;
  w.lp_w = RVec::Ones(l.dims.nonneg);
  for (int q : l.dims.soc) {
    w.soc_w.push_back(RMat::Identity(q, q));
    w.soc_winv.push_back(RMat::Identity(q, q));
  }
  for (int n : l.dims.psd) {
    w.psd_r.push_back(RMat::Identity(n, n));
    w.psd_rinv.push_back(RMat::Identity(n, n));
    w.psd_lambda.push_back(RVec::Ones(n));
  }
  w.lambda = unit(l);
  return w;
}

struct ScalingFailure {};

inline NtScaling compute_scaling(const Layout& l, const RVec& s, const RVec& z) {
  NtScaling w;
  const int nl = l.dims.nonneg;
  if (nl > 0) {
    if ((s.head(nl).array() <= 0.0).any() || (z.head(nl).array() <= 0.0).any())
      throw ScalingFailure{};
    w.lp_w = (s.head(nl).array() / z.head(nl).array()).sqrt().matrix();
  } else {
    w.lp_w.resize(0);
  }
  for (std::size_t j = 0; j < l.dims.soc.size(); ++j) {
    const auto sb = soc_block(l, s, j);
    const auto zb = soc_block(l, z, j);
    const int q = static_cast<int>(sb.size());
    const double s_tail = sb.tail(q - 1).norm();
    const double z_tail = zb.tail(q - 1).norm();
    const double sjs = (sb[0] - s_tail) * (sb[0] + s_tail);
    const double zjz = (zb[0] - z_tail) * (zb[0] + z_tail);
    if (!(sb[0] > s_tail) || !(zb[0] > z_tail) || !(sjs > 0.0) || !(zjz > 0.0))
      throw ScalingFailure{};
    const double aa = std::sqrt(sjs);
    const double bb = std::sqrt(zjz);
    const double beta = std::sqrt(aa / bb);
    const double gamma = std::sqrt(0.5 * (sb.dot(zb) / (aa * bb) + 1.0));
    RVec v = sb / aa;
    v[0] += zb[0] / bb;
    v.tail(q - 1) -= zb.tail(q - 1) / bb;
    v /= 2.0 * gamma;
    v[0] += 1.0;
    v /= std::sqrt(2.0 * v[0]);
    RMat J = RMat::Identity(q, q);
    J.bottomRightCorner(q - 1, q - 1) *= -1.0;
    const RMat vvT = v * v.transpose();
    w.soc_w.push_back(beta * (2.0 * vvT - J));
    w.soc_winv.push_back((2.0 * J * vvT * J - J) / beta);
  }
  for (std::size_t j = 0; j < l.dims.psd.size(); ++j) {
    const int n = l.dims.psd[j];
    const RMat S = psd_block(l, s, j);
    const RMat Z = psd_block(l, z, j);
    Eigen::LLT<RMat> ls(0.5 * (S + S.transpose()));
    Eigen::LLT<RMat> lz(0.5 * (Z + Z.transpose()));
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) throw ScalingFailure{};
    const RMat Ls = ls.matrixL();
    const RMat Lz = lz.matrixL();
    Eigen::JacobiSVD<RMat> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RVec lam = svd.singularValues();
    if (!(lam.minCoeff() > 0.0)) throw ScalingFailure{};
    const RVec isq = lam.cwiseSqrt().cwiseInverse();
    // R = Ls V lam^-1/2 and R^-T = Lz U lam^-1/2.
    w.psd_r.push_back(Ls * svd.matrixV() * isq.asDiagonal());
    w.psd_rinv.push_back((Lz * svd.matrixU() * isq.asDiagonal()).transpose());
    w.psd_lambda.push_back(lam);
    (void)n;
  }
  w.lambda.setZero(l.rows);
  if (nl > 0) w.lambda.head(nl) = (s.head(nl).array() * z.head(nl).array()).sqrt().matrix();
  for (std::size_t j = 0; j < l.dims.soc.size(); ++j)
    soc_block(l, w.lambda, j) = w.soc_w[j] * soc_block(l, z, j);
  for (std::size_t j = 0; j < l.dims.psd.size(); ++j)
    psd_block(l, w.lambda, j).diagonal() = w.psd_lambda[j];
  return w;
}

enum class Apply { W, WT, Winv, WinvT };

inline RVec apply(const Layout& l, const NtScaling& w, Apply op, const RVec& v) {
  RVec out(l.rows);
  const int nl = l.dims.nonneg;
  if (op == Apply::W || op == Apply::WT)
    out.head(nl) = w.lp_w.cwiseProduct(v.head(nl));
  else
    out.head(nl) = v.head(nl).cwiseQuotient(w.lp_w);
  for (std::size_t j = 0; j < l.dims.soc.size(); ++j) {
    const RMat& M = (op == Apply::W || op == Apply::WT) ? w.soc_w[j] : w.soc_winv[j];
    soc_block(l, out, j) = M * soc_block(l, v, j);
  }
  for (std::size_t j = 0; j < l.dims.psd.size(); ++j) {
    const RMat V = psd_block(l, v, j);
    const RMat& R = w.psd_r[j];
    const RMat& Ri = w.psd_rinv[j];
    RMat o;
    switch (op) {
      case Apply::W: o = R.transpose() * V * R; break;
      case Apply::WT: o = R * V * R.transpose(); break;
      case Apply::Winv: o = Ri.transpose() * V * Ri; break;
      case Apply::WinvT: o = Ri * V * Ri.transpose(); break;
    }
    psd_block(l, out, j) = 0.5 * (o + o.transpose());
  }
  return out;
}

// Solves lambda o u = v for u.
inline RVec lambda_solve(const Layout& l, const NtScaling& w, const RVec& v) {
  RVec u(l.rows);
  const int nl = l.dims.nonneg;
  u.head(nl) = v.head(nl).cwiseQuotient(w.lambda.head(nl));
  for (std::size_t j = 0; j < l.dims.soc.size(); ++j) {
    const auto lam = soc_block(l, w.lambda, j);
    const auto vb = soc_block(l, v, j);
    auto ub = soc_block(l, u, j);
    const int q = static_cast<int>(lam.size());
    const double l0 = lam[0];
    const double det = l0 * l0 - lam.tail(q - 1).squaredNorm();
    ub[0] = (l0 * vb[0] - lam.tail(q - 1).dot(vb.tail(q - 1))) / det;
    ub.tail(q - 1) = (vb.tail(q - 1) - ub[0] * lam.tail(q - 1)) / l0;
  }
  for (std::size_t j = 0; j < l.dims.psd.size(); ++j) {
    const RVec& lam = w.psd_lambda[j];
    const RMat V = psd_block(l, v, j);
    auto U = psd_block(l, u, j);
    for (int c = 0; c < V.cols(); ++c)
      for (int r = 0; r < V.rows(); ++r) U(r, c) = 2.0 * V(r, c) / (lam[r] + lam[c]);
  }
  return u;
}

// Largest alpha with lambda + alpha * d inside the cone, where lambda is the
// scaled point (diagonal in semidefinite blocks).
inline double max_step(const Layout& l, const NtScaling& w, const RVec& d) {
  double alpha = kInf;
  const int nl = l.dims.nonneg;
  for (int i = 0; i < nl; ++i)
    if (d[i] < 0.0) alpha = std::min(alpha, -w.lambda[i] / d[i]);
  for (std::size_t j = 0; j < l.dims.soc.size(); ++j) {
    const auto x = soc_block(l, w.lambda, j);
    const auto dv = soc_block(l, d, j);
    const int q = static_cast<int>(x.size());
    // (x0 + a d0)^2 - ||x1 + a d1||^2 >= 0 and x0 + a d0 >= 0.
    const double xn = x.tail(q - 1).norm();
    const double c = (x[0] - xn) * (x[0] + xn);
    const double bq = x[0] * dv[0] - x.tail(q - 1).dot(dv.tail(q - 1));
    const double a = dv[0] * dv[0] - dv.tail(q - 1).squaredNorm();
    double amax = kInf;
    if (dv[0] < 0.0) amax = -x[0] / dv[0];
    // Smallest positive root of a t^2 + 2 bq t + c.
    if (a == 0.0) {
      if (bq < 0.0) amax = std::min(amax, -c / (2.0 * bq));
    } else {
      const double disc = bq * bq - a * c;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double qq = -(bq + (bq >= 0.0 ? sq : -sq));
        const double r1 = qq / a;
        const double r2 = qq != 0.0 ? c / qq : kInf;
        for (double r : {r1, r2})
          if (r > 0.0) amax = std::min(amax, r);
      }
    }
    alpha = std::min(alpha, amax);
  }
  for (std::size_t j = 0; j < l.dims.psd.size(); ++j) {
    const RVec isq = w.psd_lambda[j].cwiseSqrt().cwiseInverse();
    const RMat D = psd_block(l, d, j);
    const RMat T = isq.asDiagonal() * (0.5 * (D + D.transpose())) * isq.asDiagonal();
    Eigen::SelfAdjointEigenSolver<RMat> es(T, Eigen::EigenvaluesOnly);
    const double mn = es.eigenvalues()[0];
    if (mn < 0.0) alpha = std::min(alpha, -1.0 / mn);
  }
  return alpha;
}

// Nonzero entries of each column of G inside one semidefinite block.
struct PsdEntry {
  int row;
  int col;
  double value;
};

class KktSolver {
 public:
  KktSolver(const ConeProgram& p, const Layout& l) : p_(p), l_(l) {
    const int n = p.variables();
    const int ls_rows = l.dims.nonneg + [&] {
      int r = 0;
      for (int q : l.dims.soc) r += q;
      return r;
    }();
    G_ls_ = RMat(p.G.topRows(ls_rows));
    psd_cols_.resize(l.dims.psd.size());
    for (auto& block : psd_cols_) block.resize(n);
    for (int k = 0; k < p.G.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(p.G, k); it; ++it) {
        const int r = static_cast<int>(it.row());
        for (std::size_t j = 0; j < l.dims.psd.size(); ++j) {
          const int off = l.psd_off[j];
          const int ord = l.dims.psd[j];
          if (r >= off && r < off + ord * ord) {
            const int local = r - off;
            psd_cols_[j][k].push_back({local % ord, local / ord, it.value()});
          }
        }
      }
    }
    for (auto& block : psd_cols_) {
      std::vector<int> touched;
      for (int k = 0; k < n; ++k)
        if (!block[k].empty()) touched.push_back(k);
      psd_touched_.push_back(std::move(touched));
    }
    if (p.A.rows() > 0) A_ = RMat(p.A);
  }

  bool factor(const NtScaling& w) {
    w_ = &w;
    const int n = p_.variables();
    H_.setZero(n, n);
    if (G_ls_.rows() > 0) {
      RMat B(G_ls_.rows(), n);
      const int nl = l_.dims.nonneg;
      B.topRows(nl) = w.lp_w.head(nl).cwiseInverse().asDiagonal() * G_ls_.topRows(nl);
      int off = nl;
      for (std::size_t j = 0; j < l_.dims.soc.size(); ++j) {
        const int q = l_.dims.soc[j];
        B.middleRows(off, q) = w.soc_winv[j] * G_ls_.middleRows(off, q);
        off += q;
      }
      H_.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose());
    }
    for (std::size_t j = 0; j < l_.dims.psd.size(); ++j) {
      const RMat S = w.psd_rinv[j].transpose() * w.psd_rinv[j];
      const auto& cols = psd_cols_[j];
      const auto& touched = psd_touched_[j];
      for (std::size_t ik = 0; ik < touched.size(); ++ik) {
        const int k = touched[ik];
        for (std::size_t il = ik; il < touched.size(); ++il) {
          const int li = touched[il];
          double acc = 0.0;
          // tr(G_k S G_l S) = sum g g' S(b, c) S(d, a)
          for (const auto& e : cols[k])
            for (const auto& f : cols[li])
              acc += e.value * f.value * S(e.col, f.row) * S(f.col, e.row);
          H_(std::max(k, li), std::min(k, li)) += acc;
        }
      }
    }
    H_ = H_.selfadjointView<Eigen::Lower>();

    const double scale = std::max(1.0, H_.diagonal().cwiseAbs().maxCoeff());
    double delta = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      RMat Hr = H_;
      if (delta > 0.0) Hr.diagonal().array() += delta;
      llt_.compute(Hr);
      if (llt_.info() == Eigen::Success) break;
      delta = delta == 0.0 ? 1e-14 * scale : delta * 100.0;
      if (attempt == 7) return false;
    }
    if (A_.rows() > 0) {
      HinvAt_ = llt_.solve(A_.transpose());
      schur_.compute(A_ * HinvAt_);
      if (schur_.info() != Eigen::Success) return false;
    }
    return true;
  }

  // Solves  [0 A^T G^T; A 0 0; G 0 -W^T W] (x, y, z) = (rx, ry, rz).
  void solve(const RVec& rx, const RVec& ry, const RVec& rz, RVec& x, RVec& y,
             RVec& z) const {
    solve_once(rx, ry, rz, x, y, z);
    for (int it = 0; it < refinement_steps; ++it) {
      const RVec ex = rx - (p_.G.transpose() * z + (A_.rows() > 0 ? RVec(A_.transpose() * y)
                                                                    : RVec::Zero(rx.size())));
      const RVec ey = A_.rows() > 0 ? RVec(ry - A_ * x) : RVec(ry);
      const RVec ez = rz - (p_.G * x - wtw(z));
      RVec cx, cy, cz;
      solve_once(ex, ey, ez, cx, cy, cz);
      x += cx;
      y += cy;
      z += cz;
    }
  }

  int refinement_steps = 3;

 private:
  RVec wtw(const RVec& v) const {
    return apply(l_, *w_, Apply::WT, apply(l_, *w_, Apply::W, v));
  }

  RVec winv_wint(const RVec& v) const {
    return apply(l_, *w_, Apply::Winv, apply(l_, *w_, Apply::WinvT, v));
  }

  void solve_once(const RVec& rx, const RVec& ry, const RVec& rz, RVec& x, RVec& y,
                  RVec& z) const {
    const RVec r1 = rx + p_.G.transpose() * winv_wint(rz);
    const RVec u = llt_.solve(r1);
    if (A_.rows() > 0) {
      y = schur_.solve(A_ * u - ry);
      x = u - HinvAt_ * y;
    } else {
      y.resize(0);
      x = u;
    }
    z = winv_wint(p_.G * x - rz);
  }

  const ConeProgram& p_;
  const Layout& l_;
  const NtScaling* w_ = nullptr;
  RMat G_ls_;
  RMat A_;
  std::vector<std::vector<std::vector<PsdEntry>>> psd_cols_;
  std::vector<std::vector<int>> psd_touched_;
  RMat H_;
  Eigen::LLT<RMat> llt_;
  RMat HinvAt_;
  Eigen::LDLT<RMat> schur_;
};

}  // namespace detail

inline SolverResult solve(const ConeProgram& prog, const SolverSettings& opt = {}) {
  using namespace detail;
  prog.validate();
  const Layout L(prog.dims);
  const int n = prog.variables();
  const int p = static_cast<int>(prog.b.size());
  const double deg = L.dims.degree();
  const RVec e = unit(L);

  KktSolver kkt(prog, L);
  kkt.refinement_steps = opt.refinement_steps;

  SolverResult res;
  SolverResult best;
  double best_merit = kInf;
  int best_iter = 0;
  const auto fail = [&](SolveStatus st, std::string msg) {
    const double gap_ok = std::min(best.gap, std::abs(best.primal_objective) > 0.0
                                                 ? best.gap / std::abs(best.primal_objective)
                                                 : kInf);
    if (best_merit < kInf && best.primal_residual <= opt.reduced_feastol &&
        best.dual_residual <= opt.reduced_feastol && gap_ok <= opt.reduced_gaptol) {
      best.status = SolveStatus::near_optimal;
      best.iterations = res.iterations;
      best.message = "reduced accuracy: " + msg;
      return best;
    }
    res.status = st;
    res.message = std::move(msg);
    return res;
  };

  // Starting point from the two least-norm problems with W = I.
  NtScaling w = identity_scaling(L);
  if (!kkt.factor(w)) return fail(SolveStatus::numerical_failure, "singular normal equations at start");
  RVec x, y, z, s;
  {
    RVec xt, yt, zt;
    kkt.solve(RVec::Zero(n), prog.b, prog.h, xt, yt, zt);
    x = xt;
    s = -zt;
    kkt.solve(-prog.c, RVec::Zero(p), RVec::Zero(L.rows), xt, yt, zt);
    y = yt;
    z = zt;
  }
  {
    const double ts = -min_eigenvalue(L, s);
    if (ts >= -1e-8 * std::max(s.norm(), 1.0)) s += (1.0 + ts) * e;
    const double tz = -min_eigenvalue(L, z);
    if (tz >= -1e-8 * std::max(z.norm(), 1.0)) z += (1.0 + tz) * e;
  }
  double tau = 1.0, kappa = 1.0;

  const double resx0 = std::max(1.0, prog.c.norm());
  const double resy0 = std::max(1.0, prog.b.norm());
  const double resz0 = std::max(1.0, prog.h.norm());

  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    const RVec hrx = prog.G.transpose() * z + (p > 0 ? RVec(prog.A.transpose() * y) : RVec::Zero(n));
    const RVec rx = hrx + prog.c * tau;
    const RVec hry = p > 0 ? RVec(prog.A * x) : RVec::Zero(0);
    const RVec ry = hry - prog.b * tau;
    const RVec hrz = prog.G * x + s;
    const RVec rz = hrz - prog.h * tau;
    const double cx = prog.c.dot(x);
    const double by = p > 0 ? prog.b.dot(y) : 0.0;
    const double hz = prog.h.dot(z);
    const double rt = kappa + cx + by + hz;
    const double gap = s.dot(z);
    const double mu = (gap + tau * kappa) / (deg + 1.0);

    const double pcost = cx / tau;
    const double dcost = -(by + hz) / tau;
    const double ngap = gap / (tau * tau);
    double relgap = kInf;
    if (pcost < 0.0) relgap = ngap / -pcost;
    else if (dcost > 0.0) relgap = ngap / dcost;
    const double pres = std::max(ry.size() ? ry.norm() / resy0 : 0.0, rz.norm() / resz0) / tau;
    const double dres = rx.norm() / resx0 / tau;
    const double pinfres = (hz + by < 0.0) ? hrx.norm() / resx0 / -(hz + by) : kInf;
    const double dinfres =
        (cx < 0.0) ? std::max(hry.size() ? hry.norm() / resy0 : 0.0, hrz.norm() / resz0) / -cx : kInf;

    if (opt.verbose)
      std::fprintf(stderr, "%3d % .8e % .8e %.2e %.2e %.2e %.2e\n", iter, pcost, dcost, ngap, pres,
                   dres, kappa / tau);

    res.iterations = iter;
    res.primal_objective = pcost;
    res.dual_objective = dcost;
    res.gap = ngap;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.x = x / tau;
    res.y = y / tau;
    res.s = s / tau;
    res.z = z / tau;

    if (pres <= opt.feastol && dres <= opt.feastol && (ngap <= opt.abstol || relgap <= opt.reltol)) {
      res.status = SolveStatus::optimal;
      return res;
    }
    const double merit =
        std::max({pres / opt.feastol, dres / opt.feastol, std::min(ngap / opt.abstol, relgap / opt.reltol)});
    if (merit < 0.5 * best_merit) best_iter = iter;
    if (merit < best_merit) {
      best_merit = merit;
      best = res;
    }
    if (iter - best_iter >= opt.stall_iterations)
      return fail(SolveStatus::numerical_failure, "no progress towards the tolerances");
    if (pinfres <= opt.feastol) {
      const double scale = -(hz + by);
      res.x.setZero(n);
      res.s.setZero(L.rows);
      res.y = y / scale;
      res.z = z / scale;
      return fail(SolveStatus::primal_infeasible, "certificate of primal infeasibility found");
    }
    if (dinfres <= opt.feastol) {
      res.x = x / -cx;
      res.s = s / -cx;
      res.y.setZero(p);
      res.z.setZero(L.rows);
      return fail(SolveStatus::dual_infeasible, "certificate of dual infeasibility found");
    }
    if (iter == opt.max_iterations) break;

    try {
      w = compute_scaling(L, s, z);
    } catch (const ScalingFailure&) {
      return fail(SolveStatus::numerical_failure, "iterate left the cone interior");
    }
    if (!kkt.factor(w)) return fail(SolveStatus::numerical_failure, "normal equations not positive definite");

    RVec x1, y1, z1;
    kkt.solve(-prog.c, prog.b, prog.h, x1, y1, z1);
    const double denom_base = prog.c.dot(x1) + (p > 0 ? prog.b.dot(y1) : 0.0) + prog.h.dot(z1);

    const RVec lamsq = jordan(L, w.lambda, w.lambda);
    double sigma = 0.0;
    RVec ws_aff, wz_aff;
    double dtau_aff = 0.0, dkappa_aff = 0.0;
    RVec dx, dy, dz, ds;
    double dtau = 0.0, dkappa = 0.0, alpha = 0.0;

    for (int pass = 0; pass < 2; ++pass) {
      const double eta = pass == 0 ? 0.0 : sigma;
      RVec dsl = -lamsq;
      double dk = -tau * kappa;
      if (pass == 1) {
        dsl += sigma * mu * e - jordan(L, ws_aff, wz_aff);
        dk += sigma * mu - dtau_aff * dkappa_aff;
      }
      const RVec lam_ds = lambda_solve(L, w, dsl);
      const RVec bx = -(1.0 - eta) * rx;
      const RVec bby = -(1.0 - eta) * ry;
      const RVec bz = -(1.0 - eta) * rz - apply(L, w, Apply::WT, lam_ds);
      RVec x2, y2, z2;
      kkt.solve(bx, bby, bz, x2, y2, z2);
      const double num = -(1.0 - eta) * rt - dk / tau -
                         (prog.c.dot(x2) + (p > 0 ? prog.b.dot(y2) : 0.0) + prog.h.dot(z2));
      const double den = -kappa / tau + denom_base;
      dtau = num / den;
      dx = x2 + dtau * x1;
      dy = p > 0 ? RVec(y2 + dtau * y1) : RVec::Zero(0);
      dz = z2 + dtau * z1;
      const RVec wz = apply(L, w, Apply::W, dz);
      const RVec wsd = lam_ds - wz;
      ds = apply(L, w, Apply::WT, wsd);
      dkappa = (dk - kappa * dtau) / tau;

      double amax = std::min(max_step(L, w, wsd), max_step(L, w, wz));
      if (dtau < 0.0) amax = std::min(amax, -tau / dtau);
      if (dkappa < 0.0) amax = std::min(amax, -kappa / dkappa);

      if (pass == 0) {
        const double aff = std::min(1.0, amax);
        sigma = std::pow(1.0 - aff, 3);
        ws_aff = wsd;
        wz_aff = wz;
        dtau_aff = dtau;
        dkappa_aff = dkappa;
      } else {
        alpha = std::min(1.0, opt.step_fraction * amax);
      }
    }

    x += alpha * dx;
    if (p > 0) y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    for (std::size_t j = 0; j < L.dims.psd.size(); ++j) {
      auto S = psd_block(L, s, j);
      S = (0.5 * (S + S.transpose())).eval();
      auto Z = psd_block(L, z, j);
      Z = (0.5 * (Z + Z.transpose())).eval();
    }
  }
  return fail(SolveStatus::max_iterations, "iteration limit reached");
}

}  // namespace beamcrb::conic
