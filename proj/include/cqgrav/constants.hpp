#ifndef CQGRAV_CONSTANTS_HPP
#define CQGRAV_CONSTANTS_HPP

#include <cmath>

namespace cqgrav {

/// Physical constants (CODATA 2018), overridable per run for toy-unit tests.
struct Constants {
  double G = 6.67430e-11;       // m^3 kg^-1 s^-2
  double c = 2.99792458e8;      // m/s
  double hbar = 1.054571817e-34;  // J s

  double planck_length() const { return std::sqrt(hbar * G / (c * c * c)); }
  double planck_mass() const { return std::sqrt(hbar * c / G); }
};

}  // namespace cqgrav

#endif
