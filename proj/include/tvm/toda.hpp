#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "bethe.hpp"
#include "model.hpp"

namespace tvm {

struct BosonContent {
  int compact = 0, noncompact = 0, majorana = 0;
  double central_charge() const { return compact + noncompact + 0.5 * majorana; }
  bool operator==(const BosonContent&) const = default;
};

inline BosonContent boson_content(const ModelSpec& s, Regime r) {
  const int n = s.n;
  switch (r) {
    case Regime::I: return {n, 0, 0};
    case Regime::II: return s.odd() ? BosonContent{n, 0, 0} : BosonContent{n, 0, 1};
    case Regime::III: return s.odd() ? BosonContent{n, n - 1, 0} : BosonContent{n, n, 0};
  }
  return {};
}

// central charge as listed per regime, independent of the boson bookkeeping
inline double regime_central_charge(const ModelSpec& s, Regime r) {
  const int n = s.n;
  switch (r) {
    case Regime::I: return n;
    case Regime::II: return s.odd() ? n : n + 0.5;
    case Regime::III: return s.odd() ? 2 * n - 1 : 2 * n;
  }
  return 0;
}

// Coxeter number of the mass formulas. a_{2n}: H = 2n+1. The odd family is written there as
// a_{2n'+1} with H = 2n'+1; for a_{2n-1} (N = 2n) this is n' = n-1, H = 2n-1.
inline int coxeter(const ModelSpec& s) { return s.odd() ? 2 * s.n - 1 : 2 * s.n + 1; }

// number of solitons produced by staggering in regime I
inline int soliton_count(const ModelSpec& s) { return s.n; }

namespace detail {
inline void check_soliton(const ModelSpec& s, int a) {
  if (a < 1 || a > soliton_count(s))
    throw Error(ErrorKind::invalid_argument, "soliton index " + std::to_string(a) + " outside 1.." + std::to_string(soliton_count(s)));
}
}  // namespace detail

// M_a / M_1 in regime I. For the odd family this uses the argument (a-1) pi (pi-gamma)/(H pi-(H+1) gamma),
// which reproduces the rank-specific a3 and a5 results; mass_ratio_general_printed keeps the general
// display with a pi.
inline double mass_ratio(const ModelSpec& s, int a) {
  detail::check_soliton(s, a);
  if (a == 1) return 1.0;
  const int H = coxeter(s);
  if (!s.odd()) return std::sin(a * pi / H) / std::sin(pi / H);
  const double g = s.gamma;
  return 2 * std::sin((a - 1) * pi * (pi - g) / (H * pi - (H + 1) * g));
}

inline double mass_ratio_general_printed(const ModelSpec& s, int a) {
  detail::check_soliton(s, a);
  const int H = coxeter(s);
  if (!s.odd()) return std::sin(a * pi / H) / std::sin(pi / H);
  if (a == 1) return 1.0;
  const double g = s.gamma;
  return 2 * std::sin(a * pi * (pi - g) / (H * pi - (H + 1) * g));
}

inline std::vector<double> mass_ratios(const ModelSpec& s) {
  std::vector<double> m;
  for (int a = 1; a <= soliton_count(s); ++a) m.push_back(mass_ratio(s, a));
  return m;
}

// the two a3 expressions: from the hole source pole, and in Gandenberger-McKay variables
inline double a3_mass_ratio_lattice(double g) { return 2 * std::cos(pi / 2 * (pi - 2 * g) / (3 * pi - 4 * g)); }
inline double a3_lambda_gk(double g) { return pi / g - 4.0 / 3.0; }
inline double a3_mass_ratio_gk(double g) {
  double lam = a3_lambda_gk(g);
  return 2 * std::cos(pi / 3 * (0.5 - 1 / (3 * lam)));
}

// kappa in M ~ exp(-Lambda kappa)
inline double mass_scale_exponent(const ModelSpec& s, Regime r) {
  const double g = s.gamma;
  const int H = coxeter(s);
  if (r == Regime::I) return s.odd() ? 2 / (H - (H + 1) * g / pi) : 2 / (H * (1 - g / pi));
  if (r == Regime::II && s.N == 3) return 2 / (3 * g / pi - 1);
  throw Error(ErrorKind::not_catalogued, std::string("no mass scale for regime ") + to_string(r) + " N=" + std::to_string(s.N));
}

// d in [g] = [length]^d
inline double coupling_dimension(const ModelSpec& s, Regime r) {
  const double g = s.gamma;
  const int H = coxeter(s);
  switch (r) {
    case Regime::I: return s.odd() ? 2.0 * (H + 1) * g / (H * pi) - 2 : 2 * g / pi - 2;
    case Regime::II:
      if (s.N == 3) return 2.0 / 3 - 2 * g / pi;
      // regime I form with beta^2/8pi = (pi-gamma)/2pi
      if (s.odd()) return 2.0 * (H + 1) * (pi - g) / (H * pi) - 2;
      break;
    case Regime::III:
      if (s.N == 3) return -2.0 / 3 + 2 * g / pi;
      if (s.N == 4) return -2.0 / 3 + 8 * g / (3 * pi);
      break;
  }
  throw Error(ErrorKind::not_catalogued, std::string("no coupling dimension for regime ") + to_string(r) + " N=" + std::to_string(s.N));
}

// beta^2 / 8 pi
inline double beta_from_gamma(Regime r, double g) {
  if (r == Regime::I) return g / (2 * pi);
  if (r == Regime::II) return (pi - g) / (2 * pi);
  throw Error(ErrorKind::not_catalogued, "no Toda coupling identification in regime III");
}

struct BreatherReport {
  double T = 0;
  double ratio = 0;       // 2 sin(pi/(2T-3))
  double alternative = 0; // 2 cos((5g-3pi) pi/(2(3g-pi)))
  bool degenerate = false;
};

// a2 regime II breather to soliton mass ratio, gamma = pi - pi/T
inline BreatherReport breather_mass_ratio_a2_II(double g) {
  if (!(g > pi / 3 && g < pi)) throw Error(ErrorKind::invalid_argument, "breather formula needs gamma in (pi/3, pi)");
  BreatherReport b;
  b.T = pi / (pi - g);
  if (b.T <= 1.5) throw Error(ErrorKind::boundary, "T <= 3/2");
  b.ratio = 2 * std::sin(pi / (2 * b.T - 3));
  b.alternative = 2 * std::cos((5 * g - 3 * pi) * pi / (2 * (3 * g - pi)));
  // the first breather leaves the spectrum once pi/(2T-3) reaches pi
  b.degenerate = 2 * b.T - 3 <= 1 + 1e-12;
  return b;
}

// SO(N)_k / SO(N-1)_k
inline double coset_c(double N, double k) {
  double d = (k + N - 2) * (k + N - 3);
  if (std::abs(d) < 1e-300) throw Error(ErrorKind::pole, "coset_c denominator vanishes");
  return k / 2 * (N - 1) * (2 * k + N - 4) / d;
}

// SO(Nt)_1 x SO(Nt)_{l-1} / SO(Nt)_l
inline double gko_c(double Nt, double l) {
  double d = (Nt + l - 1) * (Nt + l - 2);
  if (std::abs(d) < 1e-300) throw Error(ErrorKind::pole, "gko_c denominator vanishes");
  return Nt / 2 * l * (l + 2 * Nt - 3) / d;
}

// so(2n+1) (series b) or so(2n) (series d), weight in the orthonormal basis
struct CasimirReport {
  double value = 0;       // lambda.(lambda + 2 rho) as printed
  double normalized = 0;  // value / 2, the normalisation in which lambda = 2 e1 gives N
  int N = 0;
};

inline CasimirReport casimir(char series, int n, const std::vector<int>& lambda) {
  if ((int)lambda.size() != n) throw Error(ErrorKind::invalid_argument, "weight must have n components");
  if (series != 'b' && series != 'd') throw Error(ErrorKind::invalid_argument, "series must be b or d");
  CasimirReport c;
  c.N = series == 'b' ? 2 * n + 1 : 2 * n;
  for (int i = 1; i <= n; ++i) {
    double li = lambda[i - 1];
    c.value += li * li + (series == 'b' ? 2 * n + 1 - 2 * i : 2 * n - 2 * i) * li;
  }
  c.normalized = c.value / 2;
  return c;
}

struct PerturbationReport {
  double delta = 0;          // N/(Nt+N-2)
  double delta_printed = 0;  // 1 - (Nt-2)/(Nt+N-2)
  double gamma = 0;          // pi/(N+Nt-2)
  double untwisted_sum = 0;  // 4/(N+Nt-2)
  double four_gamma_over_pi = 0;
};

inline PerturbationReport perturbation_weight(double N, double Nt) {
  if (!(N + Nt > 2)) throw Error(ErrorKind::invalid_argument, "need N + Nt > 2");
  PerturbationReport p;
  p.delta = N / (Nt + N - 2);
  p.delta_printed = 1 - (Nt - 2) / (Nt + N - 2);
  p.gamma = pi / (N + Nt - 2);
  p.untwisted_sum = 4 / (N + Nt - 2);
  p.four_gamma_over_pi = 4 * p.gamma / pi;
  return p;
}

inline double regime_boundary_gamma(double N, double Nt) {
  if (!(N + Nt > 2)) throw Error(ErrorKind::invalid_argument, "need N + Nt > 2");
  return pi / (N + Nt - 2);
}

// affine simple roots alpha_0..alpha_n (rows) and the marks with sum_i m_i alpha_i = 0
struct AffineRoots {
  Eigen::MatrixXd roots;
  std::vector<int> marks;
  double residual() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(roots.cols());
    for (size_t i = 0; i < marks.size(); ++i) v += marks[i] * roots.row(i).transpose();
    return v.cwiseAbs().maxCoeff();
  }
};

inline AffineRoots affine_roots(const ModelSpec& s) {
  const int n = s.n;
  AffineRoots a;
  a.roots = Eigen::MatrixXd::Zero(n + 1, n);
  for (int i = 1; i < n; ++i) a.roots(i, i - 1) = 1, a.roots(i, i) = -1;
  if (!s.odd()) {
    a.roots(n, n - 1) = 1;
    a.roots(0, 0) = -2;
    a.marks.assign(n + 1, 2);
    a.marks[0] = 1;
  } else {
    a.roots(n, n - 1) = 2;
    a.roots(0, 0) = -1;
    a.roots(0, 1) = -1;
    a.marks.assign(n + 1, 2);
    a.marks[0] = a.marks[1] = a.marks[n] = 1;
  }
  return a;
}

struct TodaCosetData {
  ModelSpec spec;
  Regime regime = Regime::I;
  int H = 0;
  std::vector<double> mass_ratios;
  double staggering_exponent = NAN;
  double coupling_exponent = NAN;
  double beta_sq_over_8pi = NAN;
  BosonContent bosons;
};

inline TodaCosetData toda_data(const ModelSpec& s, Regime r) {
  TodaCosetData d;
  d.spec = s;
  d.regime = r;
  d.H = coxeter(s);
  d.bosons = boson_content(s, r);
  if (r == Regime::I) d.mass_ratios = mass_ratios(s);
  auto opt = [](auto f) {
    try {
      return f();
    } catch (const Error& e) {
      if (e.kind != ErrorKind::not_catalogued) throw;
      return double(NAN);
    }
  };
  d.staggering_exponent = opt([&] { return mass_scale_exponent(s, r); });
  d.coupling_exponent = opt([&] { return coupling_dimension(s, r); });
  d.beta_sq_over_8pi = opt([&] { return beta_from_gamma(r, s.gamma); });
  return d;
}

}  // namespace tvm
