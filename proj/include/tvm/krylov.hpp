#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <complex>
#include <functional>
#include <random>
#include <sstream>
#include <vector>

#include "dense.hpp"
#include "model.hpp"

namespace tvm {

enum class Which { largest_modulus, largest_real, smallest_real };

struct KrylovOptions {
  int nev = 6;
  int ncv = 0;  // 0 -> max(2 nev + 1, 24)
  double tol = 1e-12;
  int max_restarts = 500;
  unsigned seed = 12345;
};

struct KrylovResult {
  std::vector<cplx> values;
  Eigen::MatrixXcd vectors;  // columns, same order as values
  int restarts = 0;
  int matvecs = 0;
  std::vector<double> history;  // max residual after each restart
};

struct KrylovError : Error {
  std::vector<double> history;
  KrylovError(const std::string& w, std::vector<double> h) : Error(ErrorKind::not_converged, w), history(std::move(h)) {}
};

namespace detail {

inline bool wanted_before(cplx a, cplx b, Which w) {
  switch (w) {
    case Which::largest_modulus: return std::abs(a) > std::abs(b);
    case Which::largest_real: return a.real() > b.real();
    case Which::smallest_real: return a.real() < b.real();
  }
  return false;
}

// swap diagonal entries k, k+1 of complex upper triangular T, updating Q (T = Q^H A Q form)
inline void schur_swap(Eigen::MatrixXcd& T, Eigen::MatrixXcd& Q, Eigen::Index k) {
  const Eigen::Index n = T.rows();
  cplx t11 = T(k, k), t22 = T(k + 1, k + 1), t12 = T(k, k + 1);
  cplx f = t12, g = t22 - t11;
  if (std::abs(f) == 0.0 && std::abs(g) == 0.0) return;
  Eigen::JacobiRotation<cplx> G;
  G.makeGivens(f, g);
  T.applyOnTheLeft(k, k + 1, G.adjoint());
  T.applyOnTheRight(k, k + 1, G);
  Q.applyOnTheRight(k, k + 1, G);
  T(k + 1, k) = 0.0;
  (void)n;
}

// bubble the wanted eigenvalues of T to the leading positions
inline void schur_sort(Eigen::MatrixXcd& T, Eigen::MatrixXcd& Q, Which w) {
  const Eigen::Index n = T.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = i;
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (wanted_before(T(j, j), T(best, best), w)) best = j;
    for (Eigen::Index j = best; j > i; --j) schur_swap(T, Q, j - 1);
  }
}

}  // namespace detail

using MatVec = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

// Krylov-Schur restarted Arnoldi
inline KrylovResult krylov_schur(const MatVec& op, Eigen::Index n, Which which, KrylovOptions opt = {}) {
  using MatX = Eigen::MatrixXcd;
  using VecX = Eigen::VectorXcd;
  const int nev = std::max(1, std::min<int>(opt.nev, static_cast<int>(n)));
  int m = opt.ncv > 0 ? opt.ncv : std::max(2 * nev + 1, 24);
  m = std::min<int>(m, static_cast<int>(n));
  KrylovResult res;
  if (m >= n || n <= 64) {
    MatX A(n, n);
    VecX e = VecX::Zero(n), col(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      e.setZero();
      e(j) = 1.0;
      op(e, col);
      A.col(j) = col;
    }
    res.matvecs = static_cast<int>(n);
    auto es = dense_eig(A, true);
    std::vector<Eigen::Index> ord(n);
    for (Eigen::Index i = 0; i < n; ++i) ord[i] = i;
    std::stable_sort(ord.begin(), ord.end(),
                     [&](auto a, auto b) { return detail::wanted_before(es.values[a], es.values[b], which); });
    res.vectors.resize(n, nev);
    for (int i = 0; i < nev; ++i) {
      res.values.push_back(es.values[ord[i]]);
      res.vectors.col(i) = es.vectors.col(ord[i]).normalized();
    }
    return res;
  }

  MatX V = MatX::Zero(n, m + 1);
  MatX H = MatX::Zero(m + 1, m);
  std::mt19937 gen(opt.seed);
  std::normal_distribution<double> nd;
  VecX v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(nd(gen), nd(gen));
  V.col(0) = v.normalized();
  int p = 0;
  VecX w(n);
  const int keep = std::min(m - 1, nev + (m - nev) / 2);

  for (int it = 0; it <= opt.max_restarts; ++it) {
    for (int j = p; j < m; ++j) {
      op(V.col(j), w);
      ++res.matvecs;
      for (int pass = 0; pass < 2; ++pass) {
        VecX h = V.leftCols(j + 1).adjoint() * w;
        w -= V.leftCols(j + 1) * h;
        H.col(j).head(j + 1) += h;
      }
      double beta = w.norm();
      H(j + 1, j) = beta;
      if (beta < 1e-300) {
        // invariant subspace: restart direction random, orthogonalised
        for (Eigen::Index i = 0; i < n; ++i) w(i) = cplx(nd(gen), nd(gen));
        for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * w);
        V.col(j + 1) = w.normalized();
        H(j + 1, j) = 0.0;
      } else {
        V.col(j + 1) = w / beta;
      }
    }
    Eigen::ComplexSchur<MatX> cs(H.topRows(m));
    MatX T = cs.matrixT();
    MatX Q = cs.matrixU();
    detail::schur_sort(T, Q, which);
    Eigen::RowVectorXcd b = H(m, m - 1) * Q.row(m - 1);
    double worst = 0;
    for (int i = 0; i < nev; ++i) worst = std::max(worst, std::abs(b(i)) / std::max(1.0, std::abs(T(i, i))));
    res.history.push_back(worst);
    res.restarts = it;
    if (worst < opt.tol) {
      MatX S = T.topLeftCorner(nev, nev);
      // eigenvectors of the leading triangular block
      MatX Y = MatX::Zero(nev, nev);
      for (int k = 0; k < nev; ++k) {
        Y(k, k) = 1.0;
        for (int i = k - 1; i >= 0; --i) {
          cplx s = 0;
          for (int l = i + 1; l <= k; ++l) s += S(i, l) * Y(l, k);
          cplx d = S(k, k) - S(i, i);
          if (std::abs(d) < 1e-14 * std::max(1.0, std::abs(S(k, k)))) d = 1e-14 * std::max(1.0, std::abs(S(k, k)));
          Y(i, k) = s / d;
        }
      }
      MatX X = V.leftCols(m) * (Q.leftCols(nev) * Y);
      res.vectors.resize(n, nev);
      for (int i = 0; i < nev; ++i) {
        res.values.push_back(T(i, i));
        res.vectors.col(i) = X.col(i).normalized();
      }
      return res;
    }
    // thick restart on the leading Schur vectors
    MatX Vk = V.leftCols(m) * Q.leftCols(keep);
    VecX vnext = V.col(m);
    V.setZero();
    V.leftCols(keep) = Vk;
    V.col(keep) = vnext;
    MatX Hn = MatX::Zero(m + 1, m);
    Hn.topLeftCorner(keep, keep) = T.topLeftCorner(keep, keep);
    Hn.row(keep).head(keep) = b.head(keep);
    H = Hn;
    p = keep;
  }
  std::ostringstream os;
  os << "Krylov-Schur did not converge after " << opt.max_restarts << " restarts, last residual "
     << (res.history.empty() ? 0.0 : res.history.back());
  throw KrylovError(os.str(), res.history);
}

// repeated Krylov-Schur runs on the complement of the converged Schur basis,
// so that degenerate eigenvalues are found with their multiplicity
inline KrylovResult krylov_schur_deflated(const MatVec& op, Eigen::Index n, Which which, KrylovOptions opt = {},
                                          int max_runs = 6) {
  using MatX = Eigen::MatrixXcd;
  using VecX = Eigen::VectorXcd;
  KrylovResult total;
  MatX Q(n, 0);
  std::vector<cplx> found;
  const int nev = opt.nev;
  for (int run = 0; run < max_runs; ++run) {
    Eigen::Index rest = n - Q.cols();
    if (rest <= 0) break;
    auto proj = [&](const VecX& v, VecX& w) {
      op(v, w);
      if (Q.cols()) w -= Q * (Q.adjoint() * w);
    };
    KrylovOptions o = opt;
    o.seed = opt.seed + 7919u * run;
    o.nev = static_cast<int>(std::min<Eigen::Index>(nev, rest));
    KrylovResult r;
    if (Q.cols() == 0) {
      r = krylov_schur(proj, n, which, o);
    } else {
      // work in an explicit orthonormal complement basis only through the projected operator
      auto proj2 = [&](const VecX& v, VecX& w) {
        VecX u = v - Q * (Q.adjoint() * v);
        proj(u, w);
      };
      r = krylov_schur(proj2, n, which, o);
    }
    total.matvecs += r.matvecs;
    total.restarts += r.restarts;
    total.history.insert(total.history.end(), r.history.begin(), r.history.end());
    // keep only directions outside span(Q); null-space Ritz values of the projector are spurious
    bool improved = false;
    std::vector<cplx> cur = found;
    std::sort(cur.begin(), cur.end(), [&](cplx a, cplx b) { return detail::wanted_before(a, b, which); });
    for (size_t i = 0; i < r.values.size(); ++i) {
      VecX v = r.vectors.col(i);
      if (Q.cols()) v -= Q * (Q.adjoint() * v);
      double nv = v.norm();
      if (nv < 1e-6) continue;
      // reject Ritz pairs that are not eigenpairs of the original operator restricted to the complement
      VecX w(n);
      proj(v / nv, w);
      if ((w - r.values[i] * (v / nv)).norm() > 1e-6 * std::max(1.0, std::abs(r.values[i]))) continue;
      if ((int)cur.size() < nev || detail::wanted_before(r.values[i], cur[std::min<size_t>(cur.size(), nev) - 1], which))
        improved = true;
      found.push_back(r.values[i]);
      Q.conservativeResize(n, Q.cols() + 1);
      VecX u = v / nv;
      for (int pass = 0; pass < 2 && Q.cols() > 1; ++pass) u -= Q.leftCols(Q.cols() - 1) * (Q.leftCols(Q.cols() - 1).adjoint() * u);
      Q.col(Q.cols() - 1) = u.normalized();
    }
    if (!improved) break;
  }
  std::sort(found.begin(), found.end(), [&](cplx a, cplx b) { return detail::wanted_before(a, b, which); });
  if ((int)found.size() > nev) found.resize(nev);
  total.values = found;
  return total;
}

}  // namespace tvm
