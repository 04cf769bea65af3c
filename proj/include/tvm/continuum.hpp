#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bethe.hpp"
#include "model.hpp"

namespace tvm {

// Fourier pair used throughout: f(w) = int dl e^{i l w} f(l), f(l) = (1/2pi) int dw e^{-i l w} f(w).
// With this normalisation rho(w=0) is the number of roots (or complexes) per site and the
// convolution theorem reads (K*rho)(w) = K(w) rho(w).

enum class HFun { sinh_, cosh_ };

// coef * prod num(a w) / prod den(a w), each factor sinh or cosh
struct HypTerm {
  double coef = 1;
  std::vector<std::pair<HFun, double>> num, den;
};

namespace detail {

// log f(z) for Re z >= 0; for sinh the 1/z is divided out (log sinh(z)/z)
inline cplx log_hyp(HFun f, cplx z) {
  if (f == HFun::cosh_) {
    if (z.real() < 20) return std::log(std::cosh(z));
    return z - std::log(2.0) + std::log(1.0 + std::exp(-2.0 * z));
  }
  if (std::abs(z) < 1e-3) {
    cplx z2 = z * z;
    return std::log(1.0 + z2 / 6.0 + z2 * z2 / 120.0);
  }
  if (z.real() < 20) return std::log(std::sinh(z) / z);
  return z - std::log(2.0) + std::log(1.0 - std::exp(-2.0 * z)) - std::log(z);
}

}  // namespace detail

inline cplx eval(const HypTerm& t, cplx w) {
  if (t.coef == 0) return 0.0;
  int nsinh = 0;
  for (auto& f : t.num) nsinh += f.first == HFun::sinh_;
  for (auto& f : t.den) nsinh += f.first == HFun::sinh_;
  if (nsinh % 2) throw Error(ErrorKind::invalid_argument, "odd hyperbolic term in an even catalogue");
  if (w.real() < 0 || (w.real() == 0 && w.imag() < 0)) w = -w;
  cplx lg = std::log(std::abs(t.coef));
  double sign = t.coef < 0 ? -1 : 1;
  int wpow = 0;
  auto add = [&](HFun f, double a, int s) {
    if (f == HFun::sinh_) {
      if (a == 0) {
        if (s > 0) sign = 0;
        else throw Error(ErrorKind::pole, "sinh(0 w) in a denominator");
        return;
      }
      if (a < 0) sign = -sign, a = -a;
      lg += double(s) * (std::log(a) + detail::log_hyp(f, a * w));
      wpow += s;
    } else {
      lg += double(s) * detail::log_hyp(f, std::abs(a) * w);
    }
  };
  for (auto& f : t.num) add(f.first, f.second, +1);
  for (auto& f : t.den) add(f.first, f.second, -1);
  if (sign == 0) return 0.0;
  if (wpow != 0) {
    if (std::abs(w) == 0) {
      if (wpow > 0) return 0.0;
      throw Error(ErrorKind::pole, "pole at w = 0");
    }
    lg += double(wpow) * std::log(w);
  }
  return sign * std::exp(lg);
}

// sum of terms
struct HypExpr {
  std::vector<HypTerm> terms;
  cplx operator()(cplx w) const {
    cplx s = 0;
    for (auto& t : terms) s += eval(t, w);
    return s;
  }
  double operator()(double w) const { return (*this)(cplx(w, 0)).real(); }
  bool sinh_ratios() const {
    for (auto& t : terms)
      if (t.num.size() != 1 || t.den.size() != 1 || t.num[0].first != HFun::sinh_ || t.den[0].first != HFun::sinh_)
        return false;
    return true;
  }
  // (1/2pi) int dw e^{-i l w} c sinh(a w)/sinh(b w), summed; needs |a| < b
  double real_space(double l) const {
    double s = 0;
    for (auto& t : terms) {
      if (t.num.size() != 1 || t.den.size() != 1) throw Error(ErrorKind::invalid_argument, "no closed real-space form");
      double a = t.num[0].second, b = t.den[0].second;
      if (b < 0) a = -a, b = -b;
      if (a == 0) continue;
      if (!(std::abs(a) < b)) throw Error(ErrorKind::pole, "|a| >= b: kernel not integrable");
      double th = pi * a / b;
      s += t.coef * std::sin(th) / (2 * b * (std::cosh(pi * l / b) + std::cos(th)));
    }
    return s;
  }
  // distance of the nearest real-space singularity from the real axis
  double strip() const {
    double d = INFINITY;
    for (auto& t : terms)
      if (t.num.size() == 1 && t.den.size() == 1 && t.num[0].second != 0)
        d = std::min(d, std::abs(t.den[0].second) - std::abs(t.num[0].second));
    return d;
  }
  HypExpr& operator+=(const HypExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
};

inline HypExpr operator+(HypExpr a, const HypExpr& b) { return a += b; }
inline HypExpr operator*(double c, HypExpr a) {
  for (auto& t : a.terms) t.coef *= c;
  return a;
}
inline HypExpr operator-(HypExpr a, const HypExpr& b) { return a += (-1.0) * b; }

// c sinh(a w)/sinh(b w)
inline HypExpr sh_ratio(double a, double b, double c = 1) { return {{HypTerm{c, {{HFun::sinh_, a}}, {{HFun::sinh_, b}}}}}; }
inline HypExpr hyp(double c, std::vector<std::pair<HFun, double>> num, std::vector<std::pair<HFun, double>> den) {
  return {{HypTerm{c, std::move(num), std::move(den)}}};
}

enum class KernelKind { bare, physical };

inline const char* to_string(KernelKind k) { return k == KernelKind::bare ? "bare" : "physical"; }

// rho + rho^h = s + K*rho (bare) or s + K*rho^h (physical). Some physical entries are printed with
// rho alone on the left; lhs_holes records which.
struct DensityKernel {
  ModelSpec spec;
  Regime regime = Regime::I;
  KernelKind kind = KernelKind::bare;
  int dim = 1;
  std::vector<HypExpr> source;
  std::vector<std::vector<HypExpr>> kernel;
  bool lhs_holes = true;
  std::string name;

  Eigen::VectorXcd s(cplx w) const {
    Eigen::VectorXcd v(dim);
    for (int j = 0; j < dim; ++j) v(j) = source[j](w);
    return v;
  }
  Eigen::MatrixXcd K(cplx w) const {
    Eigen::MatrixXcd m(dim, dim);
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k) m(j, k) = kernel[j][k](w);
    return m;
  }
  // ground state (no holes) in Fourier space
  Eigen::VectorXcd ground_state(cplx w) const {
    if (kind == KernelKind::physical) return s(w);
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(dim, dim) - K(w);
    return A.partialPivLu().solve(s(w));
  }
};

namespace detail {

inline DensityKernel empty_kernel(const ModelSpec& s, Regime r, KernelKind k, int dim, std::string name) {
  DensityKernel d;
  d.spec = s;
  d.regime = r;
  d.kind = k;
  d.dim = dim;
  d.name = std::move(name);
  d.source.assign(dim, HypExpr{});
  d.kernel.assign(dim, std::vector<HypExpr>(dim));
  return d;
}

[[noreturn]] inline void not_catalogued(const ModelSpec& s, Regime r, KernelKind k, const std::string& why = "") {
  throw Error(ErrorKind::not_catalogued, "no " + std::string(to_string(k)) + " density equations for N=" +
                                             std::to_string(s.N) + " regime " + to_string(r) +
                                             (why.empty() ? "" : " (" + why + ")"));
}

inline void require_integrable(const DensityKernel& d) {
  auto ok = [](const HypExpr& e) {
    for (auto& t : e.terms)
      if (t.num.size() == 1 && t.den.size() == 1 && std::abs(t.num[0].second) >= std::abs(t.den[0].second) &&
          t.num[0].second != 0)
        return false;
    return true;
  };
  for (int j = 0; j < d.dim; ++j) {
    if (!ok(d.source[j])) not_catalogued(d.spec, d.regime, d.kind, "source unbounded at this gamma");
    for (int k = 0; k < d.dim; ++k)
      if (!ok(d.kernel[j][k])) not_catalogued(d.spec, d.regime, d.kind, "kernel unbounded at this gamma");
  }
}

inline DensityKernel bare_kernel(const ModelSpec& s, Regime r) {
  const double g = s.gamma;
  const int n = s.n;
  const double h = pi / 2, q = pi / 4;
  if (r == Regime::I) {
    auto d = empty_kernel(s, r, KernelKind::bare, n, "regime I bare");
    d.source[0] = sh_ratio(g / 2, h);
    const int full = s.odd() ? n - 1 : n;
    for (int j = 0; j < full; ++j) {
      d.kernel[j][j] = sh_ratio(h - g, h);
      if (j + 1 < full) d.kernel[j][j + 1] = d.kernel[j + 1][j] = sh_ratio(g / 2, h);
    }
    if (s.odd()) {
      d.kernel[n - 2][n - 1] = d.kernel[n - 1][n - 2] = sh_ratio(g / 2, q);
      d.kernel[n - 1][n - 1] = sh_ratio(q - g, q);
    } else {
      d.kernel[n - 1][n - 1] += sh_ratio(g / 2, h);
    }
    return d;
  }
  auto d = empty_kernel(s, r, KernelKind::bare, 1, std::string("regime ") + to_string(r) + " bare, complexes");
  if (r == Regime::II) {
    if (s.odd()) {
      d.source[0] = sh_ratio(q + (n - 2) * g / 2, h) + sh_ratio(3 * q - n * g / 2, h);
      d.kernel[0][0] = (-1.0) * (sh_ratio(pi - n * g, h) + sh_ratio((n - 1) * g, h) + sh_ratio(h - g, h));
    } else {
      d.source[0] = sh_ratio(q + (2 * n - 3) * g / 4, h) + sh_ratio(3 * q - (2 * n + 1) * g / 4, h);
      d.kernel[0][0] = (-1.0) * (sh_ratio(pi - (2 * n + 1) * g / 2, h) + sh_ratio((2 * n - 1) * g / 2, h) + sh_ratio(h - g, h));
    }
  } else {
    if (s.odd()) {
      d.source[0] = sh_ratio(q + n * g / 2, h) - sh_ratio(q + (n - 2) * g / 2, h);
      d.kernel[0][0] = sh_ratio((n - 1) * g, h) + sh_ratio(h - g, h) - sh_ratio(n * g, h);
    } else {
      d.source[0] = sh_ratio(q + (2 * n + 1) * g / 4, h) - sh_ratio(q + (2 * n - 3) * g / 4, h);
      d.kernel[0][0] = sh_ratio((2 * n - 1) * g / 2, h) + sh_ratio(h - g, h) - sh_ratio((2 * n + 1) * g / 2, h);
    }
  }
  return d;
}

inline DensityKernel physical_kernel(const ModelSpec& s, Regime r) {
  const double g = s.gamma;
  using F = HFun;
  const F S = F::sinh_, C = F::cosh_;
  if (r == Regime::I && s.N == 3) {
    auto d = empty_kernel(s, r, KernelKind::physical, 1, "a2 regime I physical");
    const double u = pi - g;
    d.source[0] = hyp(1, {{C, u / 4}}, {{C, 3 * u / 4}});
    d.kernel[0][0] = hyp(-1, {{S, u / 2}, {C, (pi - 3 * g) / 4}}, {{S, g / 2}, {C, 3 * u / 4}});
    return d;
  }
  if (r == Regime::I && s.N == 4) {
    auto d = empty_kernel(s, r, KernelKind::physical, 2, "a3 regime I physical");
    const double D = 3 * pi / 4 - g;
    d.source[0] = hyp(1, {{C, pi / 4 - g / 2}}, {{C, D}});
    d.source[1] = hyp(0.5, {}, {{C, D}});
    d.kernel[0][0] = hyp(-1, {{S, (pi - g) / 2}, {C, g - pi / 4}}, {{S, g / 2}, {C, D}});
    d.kernel[0][1] = d.kernel[1][0] = hyp(-0.5, {{S, pi / 2}}, {{S, g / 2}, {C, D}});
    d.kernel[1][1] = hyp(-1, {{S, pi / 4 - g / 2}, {C, pi / 2 - g}}, {{S, g / 2}, {C, D}});
    return d;
  }
  if (r == Regime::II && s.N == 3) {
    auto d = empty_kernel(s, r, KernelKind::physical, 1, "a2 regime II physical");
    const double u = pi - g, v = 3 * g - pi;
    d.source[0] = hyp(0.5, {}, {{C, v / 4}});
    d.kernel[0][0] = hyp(0.25, {}, {{C, u / 4}, {C, u / 4}}) +
                     hyp(-0.25, {{S, (3 * g - 2 * pi) / 2}}, {{S, u / 2}, {C, u / 4}, {C, v / 4}});
    return d;
  }
  if (r == Regime::II && s.N == 4) {
    auto d = empty_kernel(s, r, KernelKind::physical, 1, "a3 regime II physical");
    d.lhs_holes = false;
    d.source[0] = hyp(0.5, {}, {{C, pi / 4 - g}});
    d.kernel[0][0] = hyp(-0.25, {{S, pi / 2}}, {{S, pi / 2 - g / 2}, {C, pi / 4 - g / 2}, {C, pi / 4 - g}});
    return d;
  }
  if (r == Regime::II && s.N == 5 && g > pi / 3) {
    // two densities of real parts once the level-1 strings have collapsed
    auto d = empty_kernel(s, r, KernelKind::physical, 2, "a4 regime II physical, gamma > pi/3");
    d.lhs_holes = false;
    const double c5 = (pi - 5 * g) / 4, c3 = (pi - 3 * g) / 4;
    d.source[0] = hyp(1, {{C, c3}}, {{C, c5}});
    d.source[1] = hyp(1, {}, {{C, c5}});
    d.kernel[0][0] = hyp(-1, {{C, c3}, {S, pi / 2}}, {{C, c5}, {S, pi / 2 - g / 2}});
    d.kernel[0][1] = hyp(-1, {{S, pi / 2}}, {{C, c5}, {S, pi / 2 - g / 2}});
    d.kernel[1][0] = hyp(-0.5, {{S, pi / 2}}, {{C, c5}, {S, pi / 2 - g / 2}});
    d.kernel[1][1] = hyp(-1, {{C, g / 2}, {S, pi / 2}}, {{C, c5}, {C, pi / 4 - g / 4}, {S, pi / 2 - g / 2}});
    return d;
  }
  if (r == Regime::III && s.N == 3) {
    auto d = empty_kernel(s, r, KernelKind::physical, 1, "a2 regime III physical");
    d.lhs_holes = false;
    d.source[0] = hyp(0.5, {}, {{C, (pi - 3 * g) / 4}});
    d.kernel[0][0] = hyp(-0.25, {{S, pi / 2}}, {{S, g / 2}, {C, (pi + g) / 4}, {C, (pi - 3 * g) / 4}});
    return d;
  }
  not_catalogued(s, r, KernelKind::physical);
}

inline void require_window(const ModelSpec& s, Regime r) {
  auto rs = regime_spec(s, r);
  if (!in_window(rs, s.gamma))
    throw Error(ErrorKind::boundary, "gamma=" + std::to_string(s.gamma) + " outside the regime " + to_string(r) +
                                         " window (" + std::to_string(rs.lo) + ", " + std::to_string(rs.hi) + ")");
}

}  // namespace detail

inline DensityKernel kernel_catalog(const ModelSpec& s, Regime r, KernelKind kind) {
  detail::require_window(s, r);
  if (kind == KernelKind::physical) return detail::physical_kernel(s, r);
  if (r == Regime::II && s.N == 5 && s.gamma > pi / 3)
    detail::not_catalogued(s, r, kind, "level-1 strings collapse above pi/3; only physical equations");
  auto d = detail::bare_kernel(s, r);
  detail::require_integrable(d);
  return d;
}

// 1 - K(0)
inline Eigen::MatrixXd k_zero(const ModelSpec& s, Regime r) {
  auto d = kernel_catalog(s, r, KernelKind::bare);
  return Eigen::MatrixXd::Identity(d.dim, d.dim) - d.K(0.0).real();
}

// ---------------------------------------------------------------------------------------------
// root data

enum class Series { b, c, d };

inline const char* to_string(Series s) { return s == Series::b ? "b" : s == Series::c ? "c" : "d"; }

struct CartanData {
  Series series = Series::b;
  int n = 1;
  Eigen::MatrixXd roots;  // row i = alpha_{i+1} in the orthonormal basis
  Eigen::MatrixXd gram;   // alpha_i . alpha_j
  Eigen::VectorXd omega1;
  Eigen::MatrixXd weight_generators;  // rows spanning the weight lattice over Z
};

inline CartanData cartan_matrix(Series sr, int n) {
  if (n < 1 || (sr == Series::d && n < 2)) throw Error(ErrorKind::invalid_argument, "rank too small");
  CartanData c;
  c.series = sr;
  c.n = n;
  c.roots = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) c.roots(i, i) = 1, c.roots(i, i + 1) = -1;
  switch (sr) {
    case Series::b: c.roots(n - 1, n - 1) = 1; break;
    case Series::c: c.roots(n - 1, n - 1) = 2; break;
    case Series::d: c.roots(n - 1, n - 2) = 1; c.roots(n - 1, n - 1) = 1; break;
  }
  c.gram = c.roots * c.roots.transpose();
  c.omega1 = Eigen::VectorXd::Unit(n, 0);
  const bool spinor = sr != Series::c;
  c.weight_generators = Eigen::MatrixXd::Identity(n + spinor, n);
  if (spinor) c.weight_generators.row(n) = Eigen::RowVectorXd::Constant(n, 0.5);
  return c;
}

// the algebra whose Cartan matrix appears in regime I
inline CartanData regime_one_cartan(const ModelSpec& s) { return cartan_matrix(s.odd() ? Series::c : Series::b, s.n); }

// Delta + Delta-bar = dm.R.dm/4 + dd.R^-1.dd, R = 1 - K(0).
// Regimes II/III: dm is the root-count change per level; it must be that of n_h removed complexes,
// and the scalar R acts on n_h.
inline double hole_weights(const ModelSpec& s, Regime r, const std::vector<int>& dm, const std::vector<int>& dd = {}) {
  auto R = k_zero(s, r);
  if (r == Regime::I) {
    if ((int)dm.size() != s.n || (!dd.empty() && (int)dd.size() != s.n))
      throw Error(ErrorKind::invalid_argument, "dm/dd must have one entry per level");
    Eigen::VectorXd m(s.n), d = Eigen::VectorXd::Zero(s.n);
    for (int j = 0; j < s.n; ++j) m(j) = dm[j];
    for (size_t j = 0; j < dd.size(); ++j) d(j) = dd[j];
    double val = 0.25 * m.dot(R * m);
    if (d.squaredNorm() > 0) val += d.dot(R.ldlt().solve(d));
    return val;
  }
  if ((int)dm.size() != s.n) throw Error(ErrorKind::invalid_argument, "dm must have one entry per level");
  if (dm[0] % 2) throw Error(ErrorKind::invalid_argument, "complexes carry two level-1 roots");
  const int nh = dm[0] / 2;
  if (hole_delta(s, r, nh) != dm) throw Error(ErrorKind::invalid_argument, "dm is not a whole number of complexes");
  double val = 0.25 * R(0, 0) * nh * nh;
  if (!dd.empty()) val += double(dd[0]) * dd[0] / R(0, 0);
  return val;
}

inline double hole_weights_scalar(const ModelSpec& s, Regime r, int n_h, int d = 0) {
  return hole_weights(s, r, hole_delta(s, r, n_h), {d});
}

// ---------------------------------------------------------------------------------------------
// closed-form ground-state densities

inline std::vector<HypExpr> ground_state_closed_form(const ModelSpec& s, Regime r) {
  detail::require_window(s, r);
  const double g = s.gamma;
  const int n = s.n;
  using F = HFun;
  const F C = F::cosh_;
  if (r == Regime::III || (r == Regime::II && !(s.N == 5 && g > pi / 3))) {
    double a = s.odd() ? (pi - 2 * n * g) / 4 : (pi - (2 * n + 1) * g) / 4;
    return {hyp(0.5, {}, {{C, a}})};
  }
  if (r == Regime::II) {
    const double c5 = (pi - 5 * g) / 4, c3 = (pi - 3 * g) / 4;
    return {hyp(1, {{C, c3}}, {{C, c5}}), hyp(1, {}, {{C, c5}})};
  }
  const double u = pi - g;
  switch (s.N) {
    case 3: return {hyp(1, {{C, u / 4}}, {{C, 3 * u / 4}})};
    case 4: {
      const double D = 3 * pi / 4 - g;
      return {hyp(1, {{C, pi / 4 - g / 2}}, {{C, D}}), hyp(0.5, {}, {{C, D}})};
    }
    case 5: return {hyp(1, {{C, 3 * u / 4}}, {{C, 5 * u / 4}}), hyp(1, {{C, u / 4}}, {{C, 5 * u / 4}})};
    case 6: {
      const double D = 5 * pi / 4 - 3 * g / 2;
      return {hyp(1, {{C, 3 * pi / 4 - g}}, {{C, D}}), hyp(1, {{C, pi / 4 - g / 2}}, {{C, D}}), hyp(0.5, {}, {{C, D}})};
    }
  }
  detail::not_catalogued(s, r, KernelKind::physical, "no printed ground-state density");
}

inline std::vector<double> ground_state_density(const ModelSpec& s, Regime r, double w) {
  std::vector<double> out;
  for (auto& e : ground_state_closed_form(s, r)) out.push_back(e(w));
  return out;
}

// ---------------------------------------------------------------------------------------------
// numerical solution of the bare equations in rapidity space

namespace detail {

// first singularity of f on the negative imaginary axis; geometric steps, since the pole runs
// off to infinity at the regime edges
inline double nearest_pole(const std::function<cplx(cplx)>& f, double ymax = 1e5) {
  const double f0 = std::abs(f(0.0));
  const double dy = 1e-3, ratio = 1 + 1e-3;
  auto g = [&](double y) { return 1.0 / f(cplx(0, -y)).real(); };
  double yprev = dy, prev = g(dy);
  for (double y = std::max(2 * dy, dy * ratio); y < ymax; yprev = y, y = std::max(y + dy, y * ratio)) {
    double cur = g(y);
    if (std::isfinite(prev) && std::isfinite(cur) && (prev > 0) != (cur > 0)) {
      double lo = yprev, hi = y;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        ((g(mid) > 0) == (g(lo) > 0) ? lo : hi) = mid;
      }
      double yp = 0.5 * (lo + hi);
      // a pole, not a zero of f
      if (std::abs(f(cplx(0, -(yp - 1e-9)))) > 1e5 * f0) return yp;
    }
    prev = cur;
  }
  throw Error(ErrorKind::not_converged, "no pole of the density found on the imaginary axis");
}

}  // namespace detail

struct NumericDensity {
  double h = 0;
  std::vector<double> grid;
  Eigen::MatrixXd rho;  // rows: levels, columns: grid points
  double residual = 0;  // max |(1-K)rho - s| on the grid

  // Fourier transform back to w by the trapezoid rule
  double at(int level, double w) const {
    double s = 0;
    for (size_t i = 0; i < grid.size(); ++i) s += std::cos(w * grid[i]) * rho(level, i);
    return s * h;
  }
};

struct NystromOptions {
  double h = 0;        // 0 -> from the kernel strip width
  double cutoff = 0;   // 0 -> from the slowest decay
  double accuracy = 1e-13;
  long max_unknowns = 8000;
};

inline NumericDensity solve_bare_numeric(const DensityKernel& d, NystromOptions opt = {}) {
  if (d.kind != KernelKind::bare) throw Error(ErrorKind::invalid_argument, "numerical solve needs a bare kernel");
  double strip = INFINITY, slow = INFINITY;
  auto scan = [&](const HypExpr& e) {
    if (!e.sinh_ratios()) throw Error(ErrorKind::invalid_argument, "bare entries must be sinh ratios");
    strip = std::min(strip, e.strip());
    for (auto& t : e.terms) slow = std::min(slow, pi / std::abs(t.den[0].second));
  };
  for (int j = 0; j < d.dim; ++j) {
    scan(d.source[j]);
    for (int k = 0; k < d.dim; ++k) scan(d.kernel[j][k]);
  }
  // the density decays with the nearest pole of its transform
  try {
    slow = std::min(slow, detail::nearest_pole([&d](cplx w) { return d.ground_state(w)(0); }));
  } catch (const Error&) {
  }
  const double tau = -std::log(opt.accuracy);
  double h = opt.h > 0 ? opt.h : std::min(0.05, 2 * pi * strip / tau);
  double cut = opt.cutoff > 0 ? opt.cutoff : tau / slow + 2;
  const int M = 2 * static_cast<int>(std::ceil(cut / h)) + 1;
  // the kernel strip closes as gamma -> 0 in regimes II/III and the dense system grows like 1/gamma^2
  if (static_cast<long>(d.dim) * M > opt.max_unknowns)
    throw Error(ErrorKind::quadrature, "Nystrom grid needs " + std::to_string(long(d.dim) * M) + " unknowns (limit " +
                                           std::to_string(opt.max_unknowns) + ")");
  NumericDensity out;
  out.h = h;
  out.grid.resize(M);
  for (int i = 0; i < M; ++i) out.grid[i] = (i - (M - 1) / 2) * h;
  const int D = d.dim;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(D * M, D * M);
  Eigen::VectorXd b(D * M);
  for (int j = 0; j < D; ++j) {
    for (int i = 0; i < M; ++i) b(j * M + i) = d.source[j].real_space(out.grid[i]);
    for (int k = 0; k < D; ++k) {
      if (d.kernel[j][k].terms.empty()) continue;
      std::vector<double> kv(2 * M - 1);
      for (int t = 0; t < 2 * M - 1; ++t) kv[t] = d.kernel[j][k].real_space((t - (M - 1)) * h);
      for (int i = 0; i < M; ++i)
        for (int l = 0; l < M; ++l) A(j * M + i, k * M + l) -= h * kv[i - l + M - 1];
    }
  }
  Eigen::VectorXd x = A.partialPivLu().solve(b);
  out.residual = (A * x - b).cwiseAbs().maxCoeff();
  out.rho.resize(D, M);
  for (int j = 0; j < D; ++j)
    for (int i = 0; i < M; ++i) out.rho(j, i) = x(j * M + i);
  return out;
}

// ---------------------------------------------------------------------------------------------
// ground-state energy per site

namespace detail {

// bare energy of one level-1 root, or of the level-1 members of one complex, at real center x
inline double complex_energy(const ModelSpec& s, Regime r, double x) {
  double e = 0;
  for (double y : pattern_offsets(s, r, 0)) {
    cplx z = 2.0 * cplx(x, y);
    e += (std::sin(s.gamma) / (std::cosh(z) - std::cos(s.gamma))).real();
  }
  return e;
}

}  // namespace detail

// generic path: bare density solved numerically, then int dl rho(l) e0(l); E = lattice_sign convention
// of the regime (energy of H(lattice_sign) relative to the reference product state)
inline double gs_energy_density(const ModelSpec& s, Regime r, NystromOptions opt = {}) {
  auto d = kernel_catalog(s, r, KernelKind::bare);
  auto rs = regime_spec(s, r);
  auto nd = solve_bare_numeric(d, opt);
  double acc = 0;
  for (size_t i = 0; i < nd.grid.size(); ++i) acc += nd.rho(0, i) * detail::complex_energy(s, r, nd.grid[i]);
  return -double(rs.lattice_sign) * acc * nd.h;
}

template <class F>
inline double integrate_half_line(F f, double tol = 1e-14) {
  double err = 0;
  double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(),
                                                                          20, tol, &err);
  if (!std::isfinite(v) || err > 1e-9 * std::max(1e-3, std::abs(v)))
    throw Error(ErrorKind::quadrature, "adaptive quadrature did not reach the requested tolerance");
  return v;
}

// adaptive Gauss-Kronrod on [a, b] split into pieces of length at most `piece`
template <class F>
inline double integrate_interval(F f, double a, double b, double piece = 1.0, double tol = 1e-13) {
  const int K = std::max(1, static_cast<int>(std::ceil((b - a) / piece)));
  double total = 0, scale = 0;
  std::vector<double> errs;
  for (int k = 0; k < K; ++k) {
    double lo = a + (b - a) * k / K, hi = a + (b - a) * (k + 1) / K, err = 0;
    double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 10, tol, &err);
    total += v;
    scale += std::abs(v);
    errs.push_back(err);
  }
  double err = 0;
  for (double e : errs) err += e;
  if (!std::isfinite(total) || err > 1e-10 * std::max(scale, 1e-300))
    throw Error(ErrorKind::quadrature, "adaptive quadrature did not reach the requested tolerance");
  return total;
}

// the printed a4 regime III integrand, integrated adaptively
inline double a4_regime_three_energy(double g) {
  ModelSpec s(5, g);
  detail::require_window(s, Regime::III);
  const double a = pi - 5 * g;
  auto f = [&](double u) {
    // sech written with exp to stay finite for large u
    double sech = 2 * std::exp(-2 * pi * u / a) / (1 + std::exp(-4 * pi * u / a));
    double num = -4 * std::sin(g) * sech * (std::cos(g) - std::sin(1.5 * g) * std::cosh(2 * u));
    double den = a * (-2 * (std::sin(g / 2) + std::sin(2.5 * g)) * std::cosh(2 * u) + std::cos(2 * g) - std::cos(3 * g) +
                      std::cosh(4 * u) + 1);
    if (u > 150) return 0.0;
    return num / den;
  };
  return 2 * integrate_half_line(f);
}

// ---------------------------------------------------------------------------------------------
// Fermi velocity

struct VelocityReport {
  double v = 0;
  double pole = 0;      // nearest singularity of rho(w) at w = -i pole
  double contour = 0;   // Im w = -contour used for the inversion
  double lambda = 12;
};


// v = e'(l)/(2 pi rho(l)) at large l, with the dressed hole energy e(l) = pi rho(l); both are
// obtained by Fourier inversion on a contour shifted towards the nearest pole, so that the ratio is
// computed without cancellation deep in the tail
inline VelocityReport fermi_velocity_report(const ModelSpec& s, Regime r, double lambda = 12) {
  detail::require_window(s, r);
  std::function<cplx(cplx)> rho;
  try {
    auto cf = ground_state_closed_form(s, r);
    rho = [cf](cplx w) { return cf[0](w); };
  } catch (const Error& e) {
    if (e.kind != ErrorKind::not_catalogued) throw;
    auto d = kernel_catalog(s, r, KernelKind::bare);
    rho = [d](cplx w) { return d.ground_state(w)(0); };
  }
  VelocityReport rep;
  rep.lambda = lambda;
  rep.pole = detail::nearest_pole(rho);
  // leave a tail factor e^{-(pole - contour) lambda} of order 1e-4 at most
  rep.contour = rep.pole - std::min(0.25 * rep.pole, 9.0 / lambda);
  const double eta = rep.contour;
  // rho(l) e^{eta l} = (1/pi) Re int_0^inf dt e^{-i l t} rho(t - i eta)
  auto I0 = [&](double t) { return (std::exp(cplx(0, -lambda * t)) * rho(cplx(t, -eta))).real(); };
  auto I1 = [&](double t) {
    cplx w(t, -eta);
    return (-I * w * std::exp(cplx(0, -lambda * t)) * rho(w)).real();
  };
  const double top = std::abs(rho(cplx(0, -eta)));
  double T = 1;
  while (std::abs(rho(cplx(T, -eta))) > 1e-18 * top && T < 1e4) T *= 1.25;
  double r0 = integrate_interval(I0, 0, T, 0.5);
  double r1 = integrate_interval(I1, 0, T, 0.5);
  // e'/(2 pi rho) = pi rho'/(2 pi rho)
  rep.v = std::abs(r1 / r0) / 2;
  return rep;
}

inline double fermi_velocity(const ModelSpec& s, Regime r) { return fermi_velocity_report(s, r).v; }

// ---------------------------------------------------------------------------------------------
// finite-size fits

struct SizeRecord {
  int L = 0;
  double energy = 0;  // total ground-state energy
};

struct FitResult {
  double c_estimate = 0;
  double e_infinity = 0;
  double v_F = 0;
  double residual = 0;
  std::vector<int> Ls;
  std::vector<double> c_effective;  // pairwise, at consecutive sizes
  std::vector<double> L_mid;
  bool quartic = false;
  bool extrapolated = false;
};

struct FitOptions {
  bool quartic = false;       // add d/L^4
  bool extrapolate = false;   // quadratic fit in 1/L of pairwise c(L)
  std::vector<double> weights;
};

inline FitResult central_charge_fit(std::vector<SizeRecord> rec, double vF, FitOptions opt = {}) {
  std::sort(rec.begin(), rec.end(), [](auto& a, auto& b) { return a.L < b.L; });
  for (size_t i = 1; i < rec.size(); ++i)
    if (rec[i].L == rec[i - 1].L) throw Error(ErrorKind::rank_deficient, "repeated system size");
  if (rec.size() < 3) throw Error(ErrorKind::rank_deficient, "central-charge fit needs at least 3 sizes");
  if (!(vF > 0)) throw Error(ErrorKind::invalid_argument, "Fermi velocity must be positive");
  FitResult fr;
  fr.v_F = vF;
  fr.quartic = opt.quartic;
  for (auto& r : rec) fr.Ls.push_back(r.L);
  const int P = opt.quartic ? 3 : 2;
  const int M = static_cast<int>(rec.size());
  if (M < P) throw Error(ErrorKind::rank_deficient, "more parameters than sizes");
  Eigen::MatrixXd A(M, P);
  Eigen::VectorXd b(M);
  for (int i = 0; i < M; ++i) {
    double L = rec[i].L, w = opt.weights.empty() ? 1.0 : std::sqrt(opt.weights.at(i));
    A(i, 0) = w;
    A(i, 1) = w / (L * L);
    if (opt.quartic) A(i, 2) = w / (L * L * L * L);
    b(i) = w * rec[i].energy / L;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < P) throw Error(ErrorKind::rank_deficient, "design matrix is rank deficient");
  Eigen::VectorXd x = qr.solve(b);
  fr.e_infinity = x(0);
  fr.c_estimate = -6 * x(1) / (pi * vF);
  fr.residual = (A * x - b).norm() / std::sqrt(double(M));
  for (int i = 0; i + 1 < M; ++i) {
    double L1 = rec[i].L, L2 = rec[i + 1].L;
    double e1 = rec[i].energy / L1, e2 = rec[i + 1].energy / L2;
    fr.c_effective.push_back(6 * (e1 - e2) / (pi * vF * (1 / (L2 * L2) - 1 / (L1 * L1))));
    fr.L_mid.push_back(0.5 * (L1 + L2));
  }
  if (opt.extrapolate) {
    const int K = static_cast<int>(fr.c_effective.size());
    const int deg = std::min(2, K - 1);
    Eigen::MatrixXd B(K, deg + 1);
    Eigen::VectorXd y(K);
    for (int i = 0; i < K; ++i) {
      double u = 1 / fr.L_mid[i];
      for (int p = 0; p <= deg; ++p) B(i, p) = std::pow(u, p);
      y(i) = fr.c_effective[i];
    }
    Eigen::VectorXd z = B.colPivHouseholderQr().solve(y);
    fr.c_estimate = z(0);
    fr.extrapolated = true;
  }
  return fr;
}

}  // namespace tvm
