#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "chain.hpp"
#include "model.hpp"

namespace tvm {

enum class Regime { I, II, III };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::I: return "I";
    case Regime::II: return "II";
    case Regime::III: return "III";
  }
  return "?";
}

inline Regime regime_from_string(const std::string& s) {
  if (s == "I" || s == "1") return Regime::I;
  if (s == "II" || s == "2") return Regime::II;
  if (s == "III" || s == "3") return Regime::III;
  throw Error(ErrorKind::invalid_argument, "unknown regime '" + s + "'");
}

struct RegimeSpec {
  Regime label = Regime::I;
  int sign_N = -1;  // sign of the energy normalisation assigned by the regime table
  double lo = 0, hi = pi;
  // sign of the lattice Hamiltonian whose low-lying states carry this regime's root pattern
  int lattice_sign = -1;
};

inline RegimeSpec regime_spec(const ModelSpec& s, Regime r) {
  RegimeSpec rs;
  rs.label = r;
  const double b = s.odd() ? pi / (2 * s.n) : pi / (2 * s.n + 1);
  const double top = s.odd() ? pi / 2 : pi;
  switch (r) {
    case Regime::I: rs.sign_N = -1; rs.lo = 0; rs.hi = top; rs.lattice_sign = -1; break;
    case Regime::II: rs.sign_N = +1; rs.lo = b; rs.hi = top; rs.lattice_sign = +1; break;
    case Regime::III: rs.sign_N = +1; rs.lo = 0; rs.hi = b; rs.lattice_sign = -1; break;
  }
  return rs;
}

inline bool in_window(const RegimeSpec& r, double g) { return g > r.lo && g < r.hi; }

inline RegimeSpec classify_regime(const ModelSpec& s, double gamma, int sign_N, double tol = 1e-12) {
  if (!(gamma > 0 && gamma < pi)) throw Error(ErrorKind::invalid_argument, "gamma must lie in (0, pi)");
  if (sign_N != 1 && sign_N != -1) throw Error(ErrorKind::invalid_argument, "sign_N must be +1 or -1");
  const double b = s.odd() ? pi / (2 * s.n) : pi / (2 * s.n + 1);
  const double top = s.odd() ? pi / 2 : pi;
  if (std::abs(gamma - top) < tol || (sign_N > 0 && std::abs(gamma - b) < tol))
    throw Error(ErrorKind::boundary, "gamma=" + std::to_string(gamma) + " sits on a regime boundary");
  if (gamma > top) throw Error(ErrorKind::boundary, "gamma outside every regime window for this family");
  if (sign_N < 0) return regime_spec(s, Regime::I);
  return regime_spec(s, gamma > b ? Regime::II : Regime::III);
}

struct BetheState {
  ModelSpec spec;
  int L = 2;
  Regime regime = Regime::I;
  std::vector<int> m;
  std::vector<std::vector<cplx>> roots;
  std::vector<std::vector<long long>> branch;
  double stagger = 0;
  std::vector<double> trace;  // Newton residual history
  int total() const { return std::accumulate(m.begin(), m.end(), 0); }
};

// ---------------------------------------------------------------------------------------------
// log-form Bethe equations

namespace detail {

// pairwise factor list for levels (j, k): (coefficient, f, constant shift c, is_cosh)
struct Factor {
  double co;
  double f;
  double c;
  bool cosh_kind;
};

inline std::vector<Factor> factors(const ModelSpec& s, int j, int k) {
  const double g = s.gamma;
  const int n = s.n;
  std::vector<Factor> out;
  if (std::abs(j - k) == 1) {
    double f = (s.odd() && ((j == n - 2 && k == n - 1) || (j == n - 1 && k == n - 2))) ? 2.0 : 1.0;
    out.push_back({1.0, f, -g / 2, false});
    out.push_back({-1.0, f, g / 2, false});
  }
  if (j == k) {
    double f = (s.odd() && j == n - 1) ? 2.0 : 1.0;
    out.push_back({-1.0, f, -g, false});
    out.push_back({1.0, f, g, false});
    if (!s.odd() && j == n - 1) {
      // minus log cosh(l - m + i g/2) plus log cosh(l - m - i g/2)
      out.push_back({-1.0, 1.0, g / 2, true});
      out.push_back({1.0, 1.0, -g / 2, true});
    }
  }
  return out;
}

inline cplx lfun(cplx z, bool ch) { return ch ? std::log(std::cosh(z)) : std::log(std::sinh(z)); }
inline cplx dlfun(cplx z, bool ch) { return ch ? std::tanh(z) : 1.0 / std::tanh(z); }

}  // namespace detail

struct LogSystem {
  std::vector<cplx> F;  // principal-log value per root (flattened)
  Eigen::MatrixXcd J;   // dF/dlambda
};

inline std::vector<int> level_offsets(const std::vector<int>& m) {
  std::vector<int> off(m.size() + 1, 0);
  for (size_t j = 0; j < m.size(); ++j) off[j + 1] = off[j] + m[j];
  return off;
}

// sum of principal logs of every factor, with the analytic Jacobian if requested
inline LogSystem log_system(const ModelSpec& s, int L, const std::vector<std::vector<cplx>>& roots, double stagger,
                            bool jac) {
  const int n = s.n;
  std::vector<int> m(n);
  for (int j = 0; j < n; ++j) m[j] = static_cast<int>(roots[j].size());
  auto off = level_offsets(m);
  const int M = off[n];
  LogSystem out;
  out.F.assign(M, 0.0);
  if (jac) out.J = Eigen::MatrixXcd::Zero(M, M);
  const double g = s.gamma;
  std::vector<std::vector<std::vector<detail::Factor>>> fac(n, std::vector<std::vector<detail::Factor>>(n));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) fac[j][k] = detail::factors(s, j, k);
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < m[j]; ++a) {
      const int ra = off[j] + a;
      const cplx lam = roots[j][a];
      cplx t = 0, dt = 0;
      if (j == 0) {
        if (stagger == 0) {
          t += double(L) * (std::log(std::sinh(lam - I * (g / 2))) - std::log(std::sinh(lam + I * (g / 2))));
          if (jac) dt += double(L) * (1.0 / std::tanh(lam - I * (g / 2)) - 1.0 / std::tanh(lam + I * (g / 2)));
        } else {
          for (double sh : {stagger, -stagger}) {
            cplx z = lam + sh;
            t += 0.5 * L * (std::log(std::sinh(z - I * (g / 2))) - std::log(std::sinh(z + I * (g / 2))));
            if (jac) dt += 0.5 * L * (1.0 / std::tanh(z - I * (g / 2)) - 1.0 / std::tanh(z + I * (g / 2)));
          }
        }
      }
      for (int k = 0; k < n; ++k) {
        const auto& fl = fac[j][k];
        if (fl.empty()) continue;
        for (int b = 0; b < m[k]; ++b) {
          if (k == j && b == a) continue;
          const cplx d = lam - roots[k][b];
          cplx dd = 0;
          for (const auto& f : fl) {
            cplx z = f.f * (d + I * f.c);
            t += f.co * detail::lfun(z, f.cosh_kind);
            if (jac) dd += f.co * f.f * detail::dlfun(z, f.cosh_kind);
          }
          if (jac) {
            dt += dd;
            out.J(ra, off[k] + b) -= dd;
          }
        }
      }
      out.F[ra] = t;
      if (jac) out.J(ra, ra) += dt;
    }
  return out;
}

inline std::vector<cplx> flatten(const std::vector<std::vector<cplx>>& r) {
  std::vector<cplx> v;
  for (auto& l : r) v.insert(v.end(), l.begin(), l.end());
  return v;
}

inline std::vector<std::vector<cplx>> unflatten(const std::vector<cplx>& v, const std::vector<int>& m) {
  std::vector<std::vector<cplx>> r(m.size());
  size_t i = 0;
  for (size_t j = 0; j < m.size(); ++j)
    for (int a = 0; a < m[j]; ++a) r[j].push_back(v[i++]);
  return r;
}

inline double min_separation(const std::vector<std::vector<cplx>>& roots) {
  double best = INFINITY;
  for (auto& l : roots)
    for (size_t a = 0; a < l.size(); ++a)
      for (size_t b = a + 1; b < l.size(); ++b) best = std::min(best, std::abs(l[a] - l[b]));
  return best;
}

// branch integers read off the principal-log sums
inline std::vector<std::vector<long long>> branch_integers(const BetheState& st) {
  auto sys = log_system(st.spec, st.L, st.roots, st.stagger, false);
  std::vector<std::vector<long long>> br(st.m.size());
  size_t i = 0;
  for (size_t j = 0; j < st.m.size(); ++j)
    for (int a = 0; a < st.m[j]; ++a) br[j].push_back(std::llround(sys.F[i++].imag() / (2 * pi)));
  return br;
}

// log form minus 2 pi i (branch integer), as a real vector (re, im) per root
inline std::vector<double> residual(const BetheState& st, std::optional<double> stagger = std::nullopt) {
  if (min_separation(st.roots) < 1e-12) throw Error(ErrorKind::root_collision, "coincident roots at one level");
  double lam = stagger.value_or(st.stagger);
  auto sys = log_system(st.spec, st.L, st.roots, lam, false);
  std::vector<double> r;
  size_t i = 0;
  for (size_t j = 0; j < st.m.size(); ++j)
    for (int a = 0; a < st.m[j]; ++a) {
      cplx v = sys.F[i++];
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw Error(ErrorKind::pole, "Bethe factor evaluated at a pole");
      long long b = (j < st.branch.size() && a < (int)st.branch[j].size()) ? st.branch[j][a] : 0;
      v -= 2.0 * pi * I * double(b);
      r.push_back(v.real());
      r.push_back(v.imag());
    }
  return r;
}

inline double max_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// reduce imaginary parts: mod i pi into (-pi/2, pi/2], a_odd last level mod i pi/2 into (-pi/4, pi/4]
inline void reduce_roots(BetheState& st) {
  for (int j = 0; j < (int)st.roots.size(); ++j) {
    double per = (st.spec.odd() && j == st.spec.n - 1) ? pi / 2 : pi;
    for (auto& z : st.roots[j]) {
      double y = z.imag();
      double k = std::floor((y + per / 2) / per);
      y -= k * per;
      if (y <= -per / 2 + 1e-9) y += per;
      z = cplx(z.real(), y);
    }
  }
}

struct SolveOptions {
  double tol = 1e-12;
  int max_iter = 200;
  double floor = std::ldexp(1.0, -20);
  bool string_coordinates = true;
  double collision = 1e-9;
};

namespace detail {

// pairs (a, b) on the same level that form a conjugate 2-string
inline std::vector<std::pair<int, int>> string_pairs(const std::vector<std::vector<cplx>>& roots) {
  std::vector<std::pair<int, int>> out;
  int off = 0;
  for (auto& l : roots) {
    std::vector<bool> used(l.size(), false);
    for (size_t a = 0; a < l.size(); ++a) {
      if (used[a] || l[a].imag() <= 1e-6 || std::abs(l[a].imag() - pi / 2) < 1e-6 ||
          std::abs(l[a].imag() - pi / 4) < 1e-6)
        continue;
      int best = -1;
      double bd = 1e-1;
      for (size_t b = 0; b < l.size(); ++b) {
        if (b == a || used[b] || l[b].imag() >= -1e-6) continue;
        double d = std::abs(l[a] - std::conj(l[b]));
        if (d < bd) bd = d, best = static_cast<int>(b);
      }
      if (best >= 0) {
        used[a] = used[best] = true;
        out.push_back({off + static_cast<int>(a), off + best});
      }
    }
    off += static_cast<int>(l.size());
  }
  return out;
}

}  // namespace detail

// damped Newton on the log-form residual with analytic Jacobian
inline BetheState solve(const BetheState& seed, std::optional<double> stagger = std::nullopt, SolveOptions opt = {}) {
  BetheState st = seed;
  st.stagger = stagger.value_or(seed.stagger);
  st.trace.clear();
  const int M = st.total();
  if (M == 0) {
    st.branch.assign(st.m.size(), {});
    return st;
  }
  bool retried = false, nudged = false;
  for (;;) {
    if (min_separation(st.roots) < opt.collision) {
      if (retried) throw Error(ErrorKind::root_collision, "roots closer than collision guard after retry");
      retried = true;
      for (auto& l : st.roots)
        for (size_t a = 0; a < l.size(); ++a) l[a] += cplx(1e-6 * (double(a) + 1.0), 0.0);
    }
    auto v = flatten(st.roots);
    auto sys0 = log_system(st.spec, st.L, st.roots, st.stagger, false);
    std::vector<double> target(M);
    for (int i = 0; i < M; ++i) target[i] = std::round(sys0.F[i].imag() / (2 * pi));
    auto eval = [&](const std::vector<cplx>& x, bool jac, Eigen::VectorXcd& r, Eigen::MatrixXcd* J) {
      auto sys = log_system(st.spec, st.L, unflatten(x, st.m), st.stagger, jac);
      r.resize(M);
      for (int i = 0; i < M; ++i) {
        cplx f = sys.F[i];
        double k = std::round((f.imag() - 2 * pi * target[i]) / (2 * pi));
        r(i) = f - 2.0 * pi * I * (target[i] + k);
      }
      if (J) *J = sys.J;
    };
    auto norm_of = [](const Eigen::VectorXcd& r) -> double {
      double m = 0;
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (!std::isfinite(r(i).real()) || !std::isfinite(r(i).imag())) return INFINITY;
        m = std::max(m, std::abs(r(i)));
      }
      return m;
    };
    Eigen::VectorXcd r;
    Eigen::MatrixXcd J;
    eval(v, true, r, &J);
    double rn = norm_of(r);
    if (!std::isfinite(rn)) {
      // exact string spacing can put a factor on sinh(0); retry once with a level-dependent ulp offset
      if (nudged) throw Error(ErrorKind::pole, "seed residual not finite");
      nudged = true;
      for (size_t j = 0; j < st.roots.size(); ++j)
        for (auto& z : st.roots[j])
          if (z.imag() != 0) z += cplx(0, (z.imag() > 0 ? 2e-16 : -2e-16) * double(j + 1));
      continue;
    }
    st.trace.push_back(rn);
    bool collided = false;
    for (int it = 0; it < opt.max_iter && rn >= opt.tol; ++it) {
      Eigen::MatrixXcd Jw = J;
      Eigen::MatrixXcd Tm;
      bool use_t = false;
      if (opt.string_coordinates) {
        // (center, half-gap) unknowns for conjugate pairs
        auto pairs = detail::string_pairs(unflatten(v, st.m));
        if (!pairs.empty()) {
          Tm = Eigen::MatrixXcd::Identity(M, M);
          for (auto [a, b] : pairs) {
            Tm(a, a) = 1.0;
            Tm(a, b) = I;
            Tm(b, a) = 1.0;
            Tm(b, b) = -I;
          }
          Jw = J * Tm;
          use_t = true;
        }
      }
      Eigen::VectorXcd step = Jw.fullPivLu().solve(-r);
      if (use_t) step = Tm * step;
      if (!step.allFinite()) throw Error(ErrorKind::not_converged, "singular Jacobian in Newton step");
      double lamb = 1.0;
      std::vector<cplx> vn(M);
      Eigen::VectorXcd rn_vec;
      double rnew = INFINITY;
      while (lamb >= opt.floor) {
        for (int i = 0; i < M; ++i) vn[i] = v[i] + lamb * step(i);
        eval(vn, false, rn_vec, nullptr);
        rnew = norm_of(rn_vec);
        if (rnew < rn) break;
        lamb /= 2;
      }
      if (lamb < opt.floor) {
        throw Error(ErrorKind::not_converged,
                    "step-halving floor reached at residual " + std::to_string(rn) + " after " + std::to_string(it) +
                        " iterations");
      }
      v = vn;
      if (min_separation(unflatten(v, st.m)) < opt.collision) {
        collided = true;
        break;
      }
      eval(v, true, r, &J);
      rn = norm_of(r);
      st.trace.push_back(rn);
    }
    if (collided) {
      if (retried) throw Error(ErrorKind::root_collision, "root collision during Newton iteration");
      retried = true;
      st.roots = unflatten(v, st.m);
      continue;
    }
    if (rn >= opt.tol)
      throw Error(ErrorKind::not_converged, "Newton did not reach tolerance, residual " + std::to_string(rn));
    st.roots = unflatten(v, st.m);
    break;
  }
  reduce_roots(st);
  st.branch = branch_integers(st);
  return st;
}

// raw energy sum  sum_j sin g / (cosh 2 l_j - cos g) over level one
inline cplx raw_energy(const BetheState& st) {
  cplx e = 0;
  const double g = st.spec.gamma;
  if (st.roots.empty()) return e;
  for (auto z : st.roots[0]) {
    cplx den = std::cosh(2.0 * z) - std::cos(g);
    if (std::abs(den) < 1e-300) throw Error(ErrorKind::pole, "root at the energy pole cosh 2l = cos g");
    e += std::sin(g) / den;
  }
  return e;
}

inline double bethe_energy(const BetheState& st, int sign_N) { return -double(sign_N) * raw_energy(st).real(); }

// ---------------------------------------------------------------------------------------------
// string-center (reduced) equations for roots on fixed imaginary parts

struct Member {
  int level;
  double y;  // imaginary offset from the real center
};

struct Group {
  std::vector<Member> members;
  int count = 0;
};

struct ReducedSystem {
  ModelSpec spec;
  int L = 2;
  double stagger = 0;
  std::vector<Group> groups;
};

namespace detail {

struct PairTerm {
  double co, f, cc;
};

inline std::vector<PairTerm> pair_terms(const ModelSpec& s, const Group& g, const Group& h) {
  std::vector<PairTerm> out;
  for (auto& a : g.members)
    for (auto& b : h.members)
      for (auto& f : factors(s, a.level, b.level)) {
        double cc = f.f * (a.y - b.y + f.c) + (f.cosh_kind ? pi / 2 : 0.0);
        if (std::abs(std::sin(cc)) < 1e-10) continue;  // step factors cancel between string members
        out.push_back({f.co, f.f, cc});
      }
  return out;
}

inline double phase(double cc, double t) { return std::atan2(std::sin(cc), std::cos(cc) * std::tanh(t)); }
inline double dphase(double cc, double t) { return std::imag(1.0 / std::tanh(cplx(t, cc))); }

}  // namespace detail

// counting phases theta and Jacobian for real centers x (all groups stacked)
inline void reduced_theta(const ReducedSystem& R, const Eigen::VectorXd& x, Eigen::VectorXd& T, Eigen::MatrixXd& J) {
  const int G = static_cast<int>(R.groups.size());
  std::vector<int> off(G + 1, 0);
  for (int g = 0; g < G; ++g) off[g + 1] = off[g] + R.groups[g].count;
  const int K = off[G];
  T = Eigen::VectorXd::Zero(K);
  J = Eigen::MatrixXd::Zero(K, K);
  const double gam = R.spec.gamma;
  for (int g = 0; g < G; ++g) {
    std::vector<std::pair<double, double>> src;
    for (auto& mb : R.groups[g].members)
      if (mb.level == 0) {
        src.push_back({1.0, mb.y - gam / 2});
        src.push_back({-1.0, mb.y + gam / 2});
      }
    for (int k = off[g]; k < off[g + 1]; ++k) {
      for (auto [co, cc] : src) {
        if (R.stagger == 0) {
          T(k) += co * R.L * detail::phase(cc, x(k));
          J(k, k) += co * R.L * detail::dphase(cc, x(k));
        } else {
          for (double sh : {R.stagger, -R.stagger}) {
            T(k) += co * 0.5 * R.L * detail::phase(cc, x(k) + sh);
            J(k, k) += co * 0.5 * R.L * detail::dphase(cc, x(k) + sh);
          }
        }
      }
    }
    for (int h = 0; h < G; ++h) {
      auto terms = detail::pair_terms(R.spec, R.groups[g], R.groups[h]);
      for (int k = off[g]; k < off[g + 1]; ++k)
        for (int l = off[h]; l < off[h + 1]; ++l) {
          if (k == l) continue;
          double d = x(k) - x(l);
          for (auto& t : terms) {
            T(k) += t.co * detail::phase(t.cc, t.f * d);
            double q = t.co * t.f * detail::dphase(t.cc, t.f * d);
            J(k, k) += q;
            J(k, l) -= q;
          }
        }
    }
  }
}

inline Eigen::VectorXd quantile_seed(int K, double scale = 0.5) {
  Eigen::VectorXd x(K);
  for (int k = 0; k < K; ++k) {
    double p = (k + 0.5) / K;
    x(k) = scale * std::log(std::tan(pi * p / 2));
  }
  return x;
}

// symmetric consecutive quantum numbers per group
inline Eigen::VectorXd reduced_quantum_numbers(const ReducedSystem& R, const Eigen::VectorXd& x) {
  Eigen::VectorXd T;
  Eigen::MatrixXd J;
  reduced_theta(R, x, T, J);
  Eigen::VectorXd Iq(x.size());
  int off = 0;
  for (auto& g : R.groups) {
    const int K = g.count;
    std::vector<int> o(K);
    std::iota(o.begin(), o.end(), 0);
    std::sort(o.begin(), o.end(), [&](int a, int b) { return x(off + a) < x(off + b); });
    double C = 0, sg = 0;
    for (int a = 0; a < K; ++a) {
      C += T(off + o[a]) + T(off + o[K - 1 - a]);
      sg += J(off + a, off + a);
    }
    C /= (4 * pi * K);
    sg = sg >= 0 ? 1.0 : -1.0;
    C = std::round(2 * C) / 2;
    for (int a = 0; a < K; ++a) Iq(off + o[a]) = C + sg * (a - (K - 1) / 2.0);
    off += K;
  }
  return Iq;
}

struct ReducedSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd quantum;
  double residual = 0;
  int iterations = 0;
};

inline ReducedSolution solve_reduced(const ReducedSystem& R, Eigen::VectorXd x0, std::optional<Eigen::VectorXd> Iq = {},
                                     double tol = 1e-12, int max_iter = 300) {
  ReducedSolution out;
  if (x0.size() == 0) {
    out.x = x0;
    out.quantum = x0;
    return out;
  }
  if (!Iq) Iq = reduced_quantum_numbers(R, x0);
  Eigen::VectorXd x = x0, T;
  Eigen::MatrixXd J;
  double rn = INFINITY;
  int it = 0;
  for (; it < max_iter; ++it) {
    reduced_theta(R, x, T, J);
    Eigen::VectorXd r = T - 2 * pi * (*Iq);
    rn = r.cwiseAbs().maxCoeff();
    if (rn < tol) break;
    Eigen::VectorXd st = J.fullPivLu().solve(-r);
    double lam = 1.0;
    Eigen::VectorXd xn = x;
    bool ok = false;
    while (lam > std::ldexp(1.0, -20)) {
      xn = x + lam * st;
      Eigen::VectorXd Tn;
      Eigen::MatrixXd Jn;
      reduced_theta(R, xn, Tn, Jn);
      if ((Tn - 2 * pi * (*Iq)).cwiseAbs().maxCoeff() < rn) {
        ok = true;
        break;
      }
      lam /= 2;
    }
    if (!ok) throw Error(ErrorKind::not_converged, "reduced equations: step-halving floor at residual " + std::to_string(rn));
    x = xn;
  }
  if (rn >= tol) throw Error(ErrorKind::not_converged, "reduced equations did not converge, residual " + std::to_string(rn));
  out.x = x;
  out.quantum = *Iq;
  out.residual = rn;
  out.iterations = it;
  return out;
}

// ---------------------------------------------------------------------------------------------
// regime patterns

// asymptotic imaginary parts of the string members of level j (regimes II, III), or the line of level j (I)
inline std::vector<double> pattern_offsets(const ModelSpec& s, Regime r, int j) {
  const double g = s.gamma;
  const int n = s.n;
  const int a = j + 1;
  if (r == Regime::I) {
    if (s.odd() && j == n - 1) return {pi / 4};
    return {j % 2 == 0 ? pi / 2 : 0.0};
  }
  if (s.odd()) {
    if (j == n - 1) return {pi / 4};
    double y = pi / 4 - (n - a) * g / 2;
    return {y, -y};
  }
  double y = pi / 4 - (2 * (n - a) + 1) * g / 4;
  return {y, -y};
}

// root counts of the singlet with removed roots per level
inline std::vector<int> singlet_counts(const ModelSpec& s, int L) {
  std::vector<int> m(s.n, L);
  if (s.odd()) m[s.n - 1] = L / 2;
  return m;
}

// remove n_h holes: regime I one root per level (a_odd last level: half), II/III one complex
inline std::vector<int> hole_delta(const ModelSpec& s, Regime r, int n_holes) {
  std::vector<int> dm(s.n, 0);
  for (int j = 0; j < s.n; ++j) {
    bool last_odd = s.odd() && j == s.n - 1;
    if (r == Regime::I) dm[j] = n_holes;
    else dm[j] = last_odd ? n_holes : 2 * n_holes;
  }
  return dm;
}

inline ReducedSystem reduced_system(const ModelSpec& s, Regime r, int L, const std::vector<int>& m, double stagger = 0) {
  ReducedSystem R;
  R.spec = s;
  R.L = L;
  R.stagger = stagger;
  if (r == Regime::I) {
    for (int j = 0; j < s.n; ++j) {
      Group g;
      g.members.push_back({j, pattern_offsets(s, r, j)[0]});
      g.count = m[j];
      R.groups.push_back(g);
    }
    return R;
  }
  // one complex type; the count is set by the string levels
  Group g;
  int cnt = -1;
  for (int j = 0; j < s.n; ++j) {
    auto ys = pattern_offsets(s, r, j);
    for (double y : ys) g.members.push_back({j, y});
    int per = static_cast<int>(ys.size());
    if (m[j] % per) throw Error(ErrorKind::infeasible_sector, "root count not divisible by string length");
    int c = m[j] / per;
    if (cnt >= 0 && c != cnt) throw Error(ErrorKind::infeasible_sector, "string levels need equal complex counts");
    cnt = c;
  }
  g.count = cnt;
  R.groups.push_back(g);
  return R;
}

inline BetheState state_from_centers(const ModelSpec& s, Regime r, int L, const ReducedSystem& R, const Eigen::VectorXd& x,
                                     double gap_shift = 0) {
  BetheState st;
  st.spec = s;
  st.L = L;
  st.regime = r;
  st.stagger = R.stagger;
  st.m.assign(s.n, 0);
  st.roots.assign(s.n, {});
  int off = 0;
  for (auto& g : R.groups) {
    for (int k = 0; k < g.count; ++k)
      for (auto& mb : g.members) {
        double y = mb.y;
        if (r != Regime::I && std::abs(y) > 1e-12 && std::abs(std::abs(y) - pi / 4) > 1e-12)
          y += (y > 0 ? gap_shift : -gap_shift);
        st.roots[mb.level].push_back(cplx(x(off + k), y));
      }
    off += g.count;
  }
  for (int j = 0; j < s.n; ++j) st.m[j] = static_cast<int>(st.roots[j].size());
  return st;
}

// seed configuration for the regime pattern; real centers from the reduced equations
// regime-III a_odd strings sit on an exact pattern that the shift destroys
inline double default_gap_shift(const ModelSpec& s, Regime r) { return s.odd() && r != Regime::III ? 1e-3 : 0.0; }

// gap_shift moves string members off the exact pattern; for a_odd some factors vanish there identically
inline BetheState seed_roots(const ModelSpec& s, Regime r, int L, int n_holes = 0, double stagger = 0,
                             std::optional<double> gap_shift = std::nullopt) {
  if (L < 2 || L % 2) throw Error(ErrorKind::invalid_argument, "L must be even");
  auto m = singlet_counts(s, L);
  auto dm = hole_delta(s, r, n_holes);
  for (int j = 0; j < s.n; ++j) {
    m[j] -= dm[j];
    if (m[j] < 0) throw Error(ErrorKind::infeasible_sector, "too many holes for L=" + std::to_string(L));
  }
  auto R = reduced_system(s, r, L, m, stagger);
  int K = 0;
  for (auto& g : R.groups) K += g.count;
  Eigen::VectorXd x0(K);
  int off = 0;
  for (auto& g : R.groups) {
    x0.segment(off, g.count) = quantile_seed(g.count);
    off += g.count;
  }
  Eigen::VectorXd x = x0;
  try {
    x = solve_reduced(R, x0).x;
  } catch (const Error&) {
    // fall back to the quantiles when the reduced system has no solution for these counts
  }
  return state_from_centers(s, r, L, R, x, gap_shift.value_or(default_gap_shift(s, r)));
}

inline BetheState seed_roots_dm(const ModelSpec& s, Regime r, int L, const std::vector<int>& dm, double stagger = 0) {
  auto m = singlet_counts(s, L);
  for (int j = 0; j < s.n; ++j) m[j] -= dm[j];
  for (int v : m)
    if (v < 0) throw Error(ErrorKind::infeasible_sector, "negative root count");
  auto R = reduced_system(s, r, L, m, stagger);
  int K = 0;
  for (auto& g : R.groups) K += g.count;
  Eigen::VectorXd x0(K);
  int off = 0;
  for (auto& g : R.groups) {
    x0.segment(off, g.count) = quantile_seed(g.count);
    off += g.count;
  }
  auto sol = solve_reduced(R, x0);
  return state_from_centers(s, r, L, R, sol.x);
}

// ---------------------------------------------------------------------------------------------
// string content

struct StringReport {
  int strings = 0;      // conjugate pairs
  int real = 0;         // Im = 0
  int shifted = 0;      // Im = pi/2
  int quarter = 0;      // Im = pi/4 (a_odd last level)
  int other = 0;
  std::vector<int> strings_per_level, real_per_level;
  std::vector<double> deviations;  // per string: |Im - asymptotic| + |Re difference|/2
  double max_deviation = 0, median_deviation = 0, central_deviation = 0;
};

inline StringReport classify_strings(const BetheState& st, double tol = 1e-6) {
  StringReport rep;
  const int n = st.spec.n;
  rep.strings_per_level.assign(n, 0);
  rep.real_per_level.assign(n, 0);
  std::vector<std::pair<double, double>> devs;  // (center, deviation)
  for (int j = 0; j < n; ++j) {
    auto lv = st.roots[j];
    std::vector<bool> used(lv.size(), false);
    auto ys = pattern_offsets(st.spec, st.regime == Regime::I ? Regime::II : st.regime, j);
    double yas = std::abs(ys[0]);
    for (size_t a = 0; a < lv.size(); ++a) {
      if (used[a]) continue;
      double y = lv[a].imag();
      if (std::abs(y) < tol) {
        used[a] = true;
        rep.real++;
        rep.real_per_level[j]++;
        continue;
      }
      if (std::abs(std::abs(y) - pi / 2) < tol) {
        used[a] = true;
        rep.shifted++;
        continue;
      }
      if (std::abs(std::abs(y) - pi / 4) < tol && st.spec.odd() && j == n - 1) {
        used[a] = true;
        rep.quarter++;
        continue;
      }
      int best = -1;
      double bd = INFINITY;
      for (size_t b = 0; b < lv.size(); ++b) {
        if (b == a || used[b]) continue;
        if (lv[b].imag() * y >= 0) continue;
        double d = std::abs(lv[a] - std::conj(lv[b]));
        if (d < bd) bd = d, best = static_cast<int>(b);
      }
      if (best >= 0 && bd < 0.5) {
        used[a] = used[best] = true;
        rep.strings++;
        rep.strings_per_level[j]++;
        double dev = std::abs(std::abs(y) - yas) / 2 + std::abs(std::abs(lv[best].imag()) - yas) / 2 +
                     std::abs(lv[a].real() - lv[best].real()) / 2;
        devs.push_back({(lv[a].real() + lv[best].real()) / 2, dev});
      } else {
        used[a] = true;
        rep.other++;
      }
    }
  }
  for (auto& d : devs) rep.deviations.push_back(d.second);
  if (!devs.empty()) {
    std::vector<double> v = rep.deviations;
    std::sort(v.begin(), v.end());
    rep.max_deviation = v.back();
    rep.median_deviation = v[v.size() / 2];
    auto it = std::min_element(devs.begin(), devs.end(),
                               [](auto& a, auto& b) { return std::abs(a.first) < std::abs(b.first); });
    rep.central_deviation = it->second;
  }
  return rep;
}

}  // namespace tvm

namespace tvm {

namespace detail {

// per-member offsets of a string solution from its center, ordered by center
struct Profile {
  std::vector<double> pos;                 // normalised rank in [0, 1]
  std::vector<std::vector<cplx>> offsets;  // per complex: offsets of members (pattern order)
};

inline Profile string_profile(const BetheState& st, const ReducedSystem& R) {
  Profile p;
  const auto& g = R.groups[0];
  std::vector<std::vector<cplx>> pool = st.roots;
  std::vector<std::vector<bool>> used(pool.size());
  for (size_t j = 0; j < pool.size(); ++j) used[j].assign(pool[j].size(), false);
  // anchor: members with positive imaginary part on level one, or the first member
  struct C {
    double x;
    std::vector<cplx> off;
  };
  std::vector<C> cs;
  const auto& a0 = g.members[0];
  for (size_t a = 0; a < pool[a0.level].size(); ++a) {
    cplx z = pool[a0.level][a];
    if ((a0.y > 0 && z.imag() <= 0) || (a0.y < 0 && z.imag() >= 0)) continue;
    double x = z.real();
    std::vector<cplx> mem;
    for (auto& mb : g.members) {
      int best = -1;
      double bd = INFINITY;
      for (size_t b = 0; b < pool[mb.level].size(); ++b) {
        if (used[mb.level][b]) continue;
        double d = std::abs(pool[mb.level][b] - cplx(x, mb.y));
        if (d < bd) bd = d, best = static_cast<int>(b);
      }
      used[mb.level][best] = true;
      mem.push_back(pool[mb.level][best]);
    }
    double cx = 0;
    for (auto z2 : mem) cx += z2.real();
    cx /= mem.size();
    C c{cx, {}};
    for (size_t i = 0; i < mem.size(); ++i) c.off.push_back(mem[i] - cplx(cx, g.members[i].y));
    cs.push_back(c);
  }
  std::sort(cs.begin(), cs.end(), [](auto& a, auto& b) { return a.x < b.x; });
  for (size_t k = 0; k < cs.size(); ++k) {
    p.pos.push_back(cs.size() > 1 ? double(k) / (cs.size() - 1) : 0.5);
    p.offsets.push_back(cs[k].off);
  }
  return p;
}

inline std::vector<cplx> interpolate(const Profile& p, double t) {
  if (p.pos.size() == 1) return p.offsets[0];
  size_t i = 0;
  while (i + 2 < p.pos.size() && p.pos[i + 1] < t) ++i;
  double w = (t - p.pos[i]) / (p.pos[i + 1] - p.pos[i]);
  w = std::clamp(w, 0.0, 1.0);
  std::vector<cplx> out;
  for (size_t k = 0; k < p.offsets[i].size(); ++k) out.push_back((1 - w) * p.offsets[i][k] + w * p.offsets[i + 1][k]);
  return out;
}

}  // namespace detail

// ground-state-type solutions for an increasing list of even L, each seeded from the previous string profile
inline std::vector<BetheState> solve_continued(const ModelSpec& s, Regime r, const std::vector<int>& Ls, int n_holes = 0,
                                               SolveOptions opt = {}, std::optional<double> gap_shift = std::nullopt) {
  std::vector<BetheState> out;
  std::optional<detail::Profile> prof;
  for (int L : Ls) {
    BetheState seed = seed_roots(s, r, L, n_holes, 0, gap_shift);
    if (r != Regime::I && prof && !prof->pos.empty()) {
      auto m = seed.m;
      auto R = reduced_system(s, r, L, m);
      const auto& g = R.groups[0];
      // centers from the seed, offsets from the profile
      auto base = detail::string_profile(seed, R);
      std::vector<double> centers;
      {
        std::vector<cplx> lv = seed.roots[g.members[0].level];
        for (auto z : lv)
          if ((g.members[0].y > 0) == (z.imag() > 0)) centers.push_back(z.real());
        std::sort(centers.begin(), centers.end());
      }
      BetheState st = seed;
      for (auto& l : st.roots) l.clear();
      const int K = static_cast<int>(centers.size());
      for (int k = 0; k < K; ++k) {
        auto off = detail::interpolate(*prof, K > 1 ? double(k) / (K - 1) : 0.5);
        for (size_t i = 0; i < g.members.size(); ++i)
          st.roots[g.members[i].level].push_back(cplx(centers[k], g.members[i].y) + off[i]);
      }
      (void)base;
      seed = st;
    }
    BetheState sol = solve(seed, std::nullopt, opt);
    if (r != Regime::I) prof = detail::string_profile(sol, reduced_system(s, r, L, sol.m));
    out.push_back(sol);
  }
  return out;
}

}  // namespace tvm

namespace tvm {

// direct solve from the regime seed; on failure, continue in L from the smallest feasible size
inline BetheState solve_pattern(const ModelSpec& s, Regime r, int L, int n_holes = 0, SolveOptions opt = {}) {
  std::vector<std::optional<double>> shifts = {std::nullopt};
  if (r != Regime::I) shifts.insert(shifts.end(), {1e-3, -1e-3});
  for (size_t k = 0; k < shifts.size(); ++k) {
    try {
      return solve(seed_roots(s, r, L, n_holes, 0, shifts[k]), std::nullopt, opt);
    } catch (const Error& e) {
      if (e.kind == ErrorKind::infeasible_sector || (r == Regime::I && k + 1 == shifts.size())) throw;
    }
  }
  std::vector<int> Ls;
  for (int l = 2; l <= L; l += 2) {
    try {
      seed_roots(s, r, l, n_holes);
      Ls.push_back(l);
    } catch (const Error&) {
    }
  }
  return solve_continued(s, r, Ls, n_holes, opt).back();
}

// continue a solved state in gamma; when Newton fails, the level-one strings closest to the real
// axis are split into real pairs (the regime-II a4 collapse), retried a few steps further since
// convergence is poor right at the collapse
inline BetheState continue_in_gamma(BetheState st, double g1, double dg = 0.02, SolveOptions opt = {}) {
  const int N = st.spec.N;
  double g = st.spec.gamma;
  const double dir = g1 > g ? 1.0 : -1.0;
  auto next = [&](double from, double step) { return dir * (g1 - from) > step ? from + dir * step : g1; };
  while (dir * (g1 - g) > 1e-15) {
    double gn = next(g, dg);
    BetheState seed = st;
    seed.spec = ModelSpec(N, gn);
    try {
      st = solve(seed, std::nullopt, opt);
      g = gn;
      continue;
    } catch (const Error&) {
    }
    double ymin = INFINITY;
    for (auto z : st.roots[0])
      if (z.imag() > 1e-9) ymin = std::min(ymin, z.imag());
    if (!std::isfinite(ymin)) throw Error(ErrorKind::not_converged, "gamma continuation failed without strings to split");
    bool ok = false;
    for (int k = 1; k <= 4 && !ok; ++k) {
      double gt = next(g, k * dg);
      for (double d : {ymin, 0.02, 0.05}) {
        BetheState sp = st;
        sp.spec = ModelSpec(N, gt);
        for (auto& z : sp.roots[0])
          if (std::abs(z.imag()) > 1e-9 && std::abs(z.imag()) <= 1.5 * ymin)
            z = cplx(z.real() + (z.imag() > 0 ? d : -d), 0.0);
        try {
          st = solve(sp, std::nullopt, opt);
          g = gt;
          ok = true;
          break;
        } catch (const Error&) {
        }
      }
      if (gt == g1) break;
    }
    if (!ok) throw Error(ErrorKind::not_converged, "gamma continuation failed near " + std::to_string(gn));
  }
  return st;
}

}  // namespace tvm
