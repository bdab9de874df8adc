#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qdlab {

using Cx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad parameters, malformed config text, broken invariants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A value landed on or near a branch cut, a pole, or a singular profile base.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Isotropic vectors, singular metrics, Gram-Schmidt breakdown.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature ran out of budget.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

// Principal branch: arg in (-pi, pi]. A negative zero imaginary part is treated
// as +0 so that the negative real axis maps to arg = pi.
inline Cx principal_sqrt(Cx w) {
  if (w.imag() == 0.0) w = Cx(w.real(), 0.0);
  return std::sqrt(w);
}

inline Cx principal_log(Cx w) {
  if (w.imag() == 0.0) w = Cx(w.real(), 0.0);
  return std::log(w);
}

inline Cx reciprocal(Cx w) { return 1.0 / w; }

}  // namespace qdlab
