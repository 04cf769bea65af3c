#pragma once

#include <map>
#include <vector>

#include "bethe.hpp"
#include "chain.hpp"

namespace tvm {

struct MatchEntry {
  Sector sector;
  double raw = 0;
  double bethe = 0;  // calibrated energy
  cplx exact = 0;    // closest sector eigenvalue
  double distance = 0;
};

struct Calibration {
  double scale = 1, shift = 0;
  double residual = 0;  // max |calibrated - exact| over states
  double fitted_scale = 1, fitted_shift = 0;
  std::vector<MatchEntry> entries;
};

namespace detail {

inline std::vector<cplx> sector_eigenvalues(const ModelSpec& s, int L, int sign, const Sector& h,
                                            std::map<Sector, std::vector<cplx>>& cache) {
  auto it = cache.find(h);
  if (it != cache.end()) return it->second;
  auto H = hamiltonian(s, L, sign, h);
  auto ev = dense_spectrum(H);
  cache[h] = ev;
  return ev;
}

inline std::pair<cplx, double> nearest(const std::vector<cplx>& ev, double e) {
  cplx best = 0;
  double bd = INFINITY;
  for (auto z : ev) {
    double d = std::abs(z - e);
    if (d < bd) bd = d, best = z;
  }
  return {best, bd};
}

}  // namespace detail

// affine map E_H = scale * raw + shift against the exact sector spectra of H(sign). The empty state
// (no roots) is the reference product state, which fixes the shift; the scale is +-1 by the
// normalisation of H and the better of the two is kept
inline Calibration calibrate_energy(const ModelSpec& s, int L, int sign, const std::vector<BetheState>& states) {
  if (states.empty()) throw Error(ErrorKind::underdetermined, "calibration needs at least one solved state");
  std::map<Sector, std::vector<cplx>> cache;
  const double e0 = reference_energy(s, L, sign);
  std::vector<double> raws;
  std::vector<Sector> secs;
  for (auto& st : states) {
    raws.push_back(raw_energy(st).real());
    secs.push_back(charges_from_roots(s, L, st.m));
  }
  Calibration best;
  best.residual = INFINITY;
  for (double sc : {-double(sign), double(sign)}) {
    Calibration c;
    c.scale = sc;
    c.shift = e0;
    std::vector<cplx> ex(states.size());
    for (size_t i = 0; i < states.size(); ++i) {
      auto ev = detail::sector_eigenvalues(s, L, sign, secs[i], cache);
      ex[i] = detail::nearest(ev, sc * raws[i] + e0).first;
    }
    // least-squares refit on (raw, exact) pairs plus the reference point (0, e0), kept as a diagnostic
    const int P = static_cast<int>(states.size()) + 1;
    Eigen::MatrixXd A(P, 2);
    Eigen::VectorXd b(P);
    for (size_t i = 0; i < states.size(); ++i) {
      A(i, 0) = raws[i];
      A(i, 1) = 1;
      b(i) = ex[i].real();
    }
    A(P - 1, 0) = 0;
    A(P - 1, 1) = 1;
    b(P - 1) = e0;
    Eigen::Vector2d sol = A.colPivHouseholderQr().solve(b);
    c.fitted_scale = sol(0);
    c.fitted_shift = sol(1);
    c.residual = 0;
    for (size_t i = 0; i < states.size(); ++i) {
      MatchEntry m;
      m.sector = secs[i];
      m.raw = raws[i];
      m.bethe = c.scale * raws[i] + c.shift;
      auto ev = detail::sector_eigenvalues(s, L, sign, secs[i], cache);
      auto [z, d] = detail::nearest(ev, m.bethe);
      m.exact = z;
      m.distance = d;
      c.residual = std::max(c.residual, d);
      c.entries.push_back(m);
    }
    if (c.residual < best.residual) best = c;
  }
  return best;
}

}  // namespace tvm
