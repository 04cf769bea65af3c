#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <numbers>

namespace tvm {

using cplx = std::complex<double>;
constexpr double pi = std::numbers::pi;
constexpr cplx I{0.0, 1.0};

enum class Family { a_even, a_odd };

// error kinds carried by every thrown tvm exception
enum class ErrorKind {
  invalid_argument,
  singular_deformation,
  degenerate_spectrum,
  dimension_overflow,
  not_converged,
  root_collision,
  pole,
  boundary,
  infeasible_sector,
  underdetermined,
  not_catalogued,
  rank_deficient,
  quadrature
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::singular_deformation: return "singular-deformation";
    case ErrorKind::degenerate_spectrum: return "degenerate-spectrum";
    case ErrorKind::dimension_overflow: return "dimension-overflow";
    case ErrorKind::not_converged: return "non-convergence";
    case ErrorKind::root_collision: return "root-collision";
    case ErrorKind::pole: return "pole";
    case ErrorKind::boundary: return "boundary-gamma";
    case ErrorKind::infeasible_sector: return "infeasible-sector";
    case ErrorKind::underdetermined: return "calibration-underdetermined";
    case ErrorKind::not_catalogued: return "not-catalogued";
    case ErrorKind::rank_deficient: return "rank-deficient";
    case ErrorKind::quadrature: return "quadrature";
  }
  return "unknown";
}

struct Error : std::runtime_error {
  ErrorKind kind;
  Error(ErrorKind k, const std::string& what)
      : std::runtime_error(std::string(to_string(k)) + ": " + what), kind(k) {}
};

// integer power by repeated multiplication, so xi = -q^N is reproducible
inline cplx ipow(cplx z, int m) {
  if (m < 0) return ipow(1.0 / z, -m);
  cplx r = 1.0;
  for (int i = 0; i < m; ++i) r *= z;
  return r;
}

struct ModelSpec {
  int N = 3;
  Family family = Family::a_even;
  int n = 1;
  double gamma = 0.5;
  cplx q{1.0, 0.0};
  cplx xi{-1.0, 0.0};

  ModelSpec() = default;
  ModelSpec(int N_, double gamma_) : N(N_), gamma(gamma_) {
    if (N_ < 3) throw Error(ErrorKind::invalid_argument, "N must be >= 3, got " + std::to_string(N_));
    if (!std::isfinite(gamma_)) throw Error(ErrorKind::invalid_argument, "gamma not finite");
    family = (N % 2 == 1) ? Family::a_even : Family::a_odd;
    n = N / 2;
    q = std::polar(1.0, gamma);
    xi = -ipow(q, N);
  }
  bool odd() const { return family == Family::a_odd; }
};

inline std::string family_name(Family f) { return f == Family::a_even ? "a_even" : "a_odd"; }

// [m] = (q^m - q^-m)/(q - q^-1)
inline cplx quantum_number(int m, const ModelSpec& s) {
  double sg = std::sin(s.gamma);
  if (std::abs(sg) < 1e-300 || std::abs(std::remainder(s.gamma, pi)) < 1e-15)
    throw Error(ErrorKind::singular_deformation, "q - 1/q vanishes (gamma = 0 mod pi)");
  cplx num = ipow(s.q, m) - ipow(s.q, -m);
  cplx den = s.q - 1.0 / s.q;
  return num / den;
}

}  // namespace tvm
