#pragma once

#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace beamcrb {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Linear power ratio from decibels.
inline double db2lin(double db) { return std::pow(10.0, db / 10.0); }

/// Amplitude gain in dB (20 log10), -inf for zero.
inline double amplitude_db(double g) {
  return g > 0.0 ? 20.0 * std::log10(g) : -kInf;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  using Error::Error;
};

class RankExceedsPrecoders : public Error {
 public:
  RankExceedsPrecoders(int rank, int m)
      : Error("rank(X) = " + std::to_string(rank) + " exceeds M = " +
              std::to_string(m) + "; exact recovery needs M >= rank(X)"),
        rank_(rank),
        m_(m) {}

  int rank() const { return rank_; }
  int precoders() const { return m_; }

 private:
  int rank_;
  int m_;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace beamcrb
