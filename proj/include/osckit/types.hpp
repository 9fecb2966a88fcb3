#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace osckit {

using Real = double;
using Complex = std::complex<Real>;

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Index = Eigen::Index;

inline constexpr Real kPi = 3.14159265358979323846;
inline constexpr Real kTwoPi = 2.0 * kPi;

/// Bad or inconsistent input data (files, arguments, malformed series).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// An analysis step could not produce a result (e.g. no in-band mode).
class AnalysisError : public std::runtime_error {
 public:
  explicit AnalysisError(const std::string& what) : std::runtime_error(what) {}
};

/// Simulator state left the valid region; carries the failure time.
class SimDivergence : public std::runtime_error {
 public:
  SimDivergence(const std::string& what, Real t_fail)
      : std::runtime_error(what), time(t_fail) {}
  Real time;
};

}  // namespace osckit
