#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "model.hpp"

namespace tvm {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

enum class Role { PS, PA, P0, B, Binv, E, R1, R2, identity, permutation };

struct TwoSiteOperator {
  Role role;
  Mat m;
};

inline double max_abs(const Mat& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

// divide by the entry of largest modulus
inline Mat unit_normalized(const Mat& a, double* scale = nullptr) {
  Eigen::Index r = 0, c = 0;
  a.cwiseAbs().maxCoeff(&r, &c);
  cplx s = a(r, c);
  if (scale) *scale = std::abs(s);
  if (s == 0.0) return a;
  return a / s;
}

// best scalar s (least squares) with a ~ s b, returns max |a - s b|
inline double scalar_mismatch(const Mat& a, const Mat& b) {
  cplx den = (b.array().conjugate() * b.array()).sum();
  if (std::abs(den) == 0.0) return max_abs(a);
  cplx s = (b.array().conjugate() * a.array()).sum() / den;
  return max_abs(a - s * b);
}

inline int two(int N, int a, int b) { return a * N + b; }  // 0-based

inline Mat identity_op(int N) { return Mat::Identity(N * N, N * N); }

inline Mat permutation_op(int N) {
  Mat P = Mat::Zero(N * N, N * N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) P(two(N, b, a), two(N, a, b)) = 1.0;
  return P;
}

// alpha-bar offsets (1-based alpha)
inline double alpha_bar(int a, int N) {
  double h = (N + 1) / 2.0;
  if (a < h) return a + 0.5;
  if (a == h) return a;
  return a - 0.5;
}

// explicit polynomial form of the a_{N-1}^(2) R-check matrix
inline Mat r2_explicit(const ModelSpec& s, cplx x) {
  const int N = s.N;
  const cplx q = s.q, xi = s.xi, q2 = q * q;
  Mat R = Mat::Zero(N * N, N * N);
  auto idx = [N](int a, int b) { return (a - 1) * N + (b - 1); };
  auto pr = [N](int a) { return N + 1 - a; };
  for (int a = 1; a <= N; ++a)
    if (a != pr(a)) R(idx(a, a), idx(a, a)) += (x - xi) * (x - q2);
  for (int a = 1; a <= N; ++a)
    for (int b = 1; b <= N; ++b) {
      if (a != b && a != pr(b)) R(idx(b, a), idx(a, b)) += q * (x - 1.0) * (x - xi);
      if (a < b && a != pr(b)) R(idx(a, b), idx(a, b)) += x * (1.0 - q2) * (x - xi);
      if (a > b && a != pr(b)) R(idx(a, b), idx(a, b)) += (1.0 - q2) * (x - xi);
    }
  for (int a = 1; a <= N; ++a)
    for (int b = 1; b <= N; ++b) {
      cplx d;
      double dab = (a == pr(b)) ? 1.0 : 0.0;
      cplx qab = std::exp(I * (s.gamma * (alpha_bar(a, N) - alpha_bar(b, N))));
      if (a == b && b == pr(b))
        d = q * (x - 1.0) * (x - xi) + x * (q2 - 1.0) * (xi - 1.0);
      else if (a == b)
        d = (x - 1.0) * (q2 * x - xi);
      else if (a < b)
        d = (q2 - 1.0) * (xi * (x - 1.0) * qab - dab * (x - xi));
      else
        d = (q2 - 1.0) * x * ((x - 1.0) * qab - dab * (x - xi));
      R(idx(pr(a), a), idx(b, pr(b))) += d;
    }
  return R;
}

struct BraidMonoid {
  Mat B, Binv, E;
};

// B from the x -> 0 limit of the explicit matrix, E from the skein relation
inline BraidMonoid braid_and_monoid(const ModelSpec& s) {
  if (std::abs(s.q - 1.0 / s.q) < 1e-14)
    throw Error(ErrorKind::singular_deformation, "q = 1/q, braid limit undefined");
  BraidMonoid bm;
  bm.B = r2_explicit(s, 0.0) / (s.xi * s.q);
  bm.Binv = bm.B.partialPivLu().inverse();
  const int D = s.N * s.N;
  bm.E = Mat::Identity(D, D) - (bm.B - bm.Binv) / (s.q - 1.0 / s.q);
  return bm;
}

struct Projectors {
  Mat PS, PA, P0;
};

inline Projectors projectors(const ModelSpec& s) {
  const cplx q = s.q;
  if (std::abs(q + 1.0 / q) < 1e-12) {
    // q and -1/q coincide, so B cannot separate PS from PA
    throw Error(ErrorKind::degenerate_spectrum,
                "braid eigenvalues q and -1/q coincide (q+1/q=0) at gamma=" + std::to_string(s.gamma));
  }
  auto bm = braid_and_monoid(s);
  const int D = s.N * s.N;
  const Mat Id = Mat::Identity(D, D);
  cplx loop = 1.0 + quantum_number(s.N - 1, s);
  if (std::abs(loop) < 1e-12)
    throw Error(ErrorKind::degenerate_spectrum, "loop weight 1+[N-1] vanishes");
  Projectors p;
  p.P0 = bm.E / loop;
  cplx q1n = ipow(q, 1 - s.N);
  p.PS = (bm.B + Id / q - (1.0 / q + q1n) * p.P0) / (q + 1.0 / q);
  p.PA = Id - p.PS - p.P0;
  return p;
}

// projector (BMW) form of the second Baxterisation
inline Mat r2_projector(const ModelSpec& s, cplx x) {
  auto bm = braid_and_monoid(s);
  const int D = s.N * s.N;
  cplx qN = ipow(s.q, s.N);
  return Mat::Identity(D, D) + (x - 1.0) / (x + 1.0) * (qN - x) / (qN + x) * bm.E +
         (1.0 - x) / (1.0 + x) / (s.q - 1.0 / s.q) * (bm.B + bm.Binv);
}

inline Mat build_r2(const ModelSpec& s, cplx x) { return r2_explicit(s, x); }

// so(N)^(1) Baxterisation in the same BMW generators
inline Mat build_r1(const ModelSpec& s, cplx x) {
  auto bm = braid_and_monoid(s);
  const int D = s.N * s.N;
  cplx qN2 = ipow(s.q, s.N - 2);
  return Mat::Identity(D, D) + (x - 1.0) / (x + 1.0) * (qN2 + x) / (qN2 - x) * bm.E +
         (1.0 - x) / (1.0 + x) / (s.q - 1.0 / s.q) * (bm.B + bm.Binv);
}

// agreement of the two constructions of R2 up to one scalar, relative
inline double r2_dual_mismatch(const ModelSpec& s, cplx x) {
  Mat a = unit_normalized(r2_explicit(s, x));
  Mat b = unit_normalized(r2_projector(s, x));
  return scalar_mismatch(a, b);
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

struct BmwReport {
  std::map<std::string, double> residuals;
  double max() const {
    double m = 0;
    for (auto& [k, v] : residuals) m = std::max(m, v);
    return m;
  }
};

inline BmwReport check_bmw(const ModelSpec& s) {
  auto bm = braid_and_monoid(s);
  const int N = s.N, D = N * N;
  const Mat I1 = Mat::Identity(N, N);
  const cplx q = s.q;
  cplx loop = 1.0 + quantum_number(N - 1, s);
  cplx d = ipow(q, 1 - N), dinv = ipow(q, N - 1);
  BmwReport r;
  r.residuals["skein"] = max_abs(bm.B - bm.Binv - (q - 1.0 / q) * (Mat::Identity(D, D) - bm.E));
  r.residuals["idempotent"] = max_abs(bm.E * bm.E - loop * bm.E);
  r.residuals["delooping_BE"] = max_abs(bm.B * bm.E - d * bm.E);
  r.residuals["delooping_EB"] = max_abs(bm.E * bm.B - d * bm.E);
  Mat B1 = kron(bm.B, I1), B2 = kron(I1, bm.B);
  Mat E1 = kron(bm.E, I1), E2 = kron(I1, bm.E);
  r.residuals["braid"] = max_abs(B1 * B2 * B1 - B2 * B1 * B2);
  r.residuals["delooping_EBE_plus"] = max_abs(E1 * B2 * E1 - dinv * E1);
  r.residuals["delooping_EBE_minus"] = max_abs(E2 * B1 * E2 - dinv * E2);
  r.residuals["tangle_EEE_plus"] = max_abs(E1 * E2 * E1 - E1);
  r.residuals["tangle_EEE_minus"] = max_abs(E2 * E1 * E2 - E2);
  r.residuals["tangle_BBE_plus"] = max_abs(B1 * B2 * E1 - E2 * E1);
  r.residuals["tangle_BBE_minus"] = max_abs(B2 * B1 * E2 - E1 * E2);
  return r;
}

struct ProjectorReport {
  double completeness = 0, idempotency = 0, orthogonality = 0;
  double max() const { return std::max({completeness, idempotency, orthogonality}); }
};

inline ProjectorReport check_projectors(const ModelSpec& s) {
  auto p = projectors(s);
  const int D = s.N * s.N;
  ProjectorReport r;
  r.completeness = max_abs(p.PS + p.PA + p.P0 - Mat::Identity(D, D));
  r.idempotency = std::max({max_abs(p.PS * p.PS - p.PS), max_abs(p.PA * p.PA - p.PA), max_abs(p.P0 * p.P0 - p.P0)});
  r.orthogonality = std::max({max_abs(p.PS * p.PA), max_abs(p.PA * p.PS), max_abs(p.PS * p.P0),
                              max_abs(p.P0 * p.PS), max_abs(p.PA * p.P0), max_abs(p.P0 * p.PA)});
  return r;
}

using RBuilder = std::function<Mat(const ModelSpec&, cplx)>;

struct YbeResult {
  double residual = 0;
  bool pole_warning = false;
};

// R12(x) R23(xy) R12(y) = R23(y) R12(xy) R23(x) in the R-check convention
inline YbeResult check_ybe(const RBuilder& build, const ModelSpec& s, cplx x, cplx y) {
  const Mat I1 = Mat::Identity(s.N, s.N);
  YbeResult out;
  auto norm = [&](cplx z) {
    double sc = 0;
    Mat m = unit_normalized(build(s, z), &sc);
    if (sc < 1e-8) out.pole_warning = true;
    return m;
  };
  Mat Rx = norm(x), Ry = norm(y), Rxy = norm(x * y);
  Mat L = kron(Rx, I1) * kron(I1, Rxy) * kron(Ry, I1);
  Mat R = kron(I1, Ry) * kron(Rxy, I1) * kron(I1, Rx);
  out.residual = scalar_mismatch(unit_normalized(L), R);
  return out;
}

struct DualityReport {
  cplx q;
  double identity_residual = 0;   // |q^{N-1} + q^{-(Nt-1)}|
  double loop_weight_residual = 0;  // |[N-1] - [Nt-1]|
  double delooping_residual = 0;  // |q^{1-N} q^{1-Nt} + 1|
  cplx loop_N, loop_Nt, deloop_N, deloop_Nt;
};

// so(N) BMW data at q = exp(i pi/(N+Nt-2)) against so(Nt) data at the same q
inline DualityReport duality_check(double N, double Nt) {
  if (N < 2 || Nt < 2) throw Error(ErrorKind::invalid_argument, "duality_check needs N, Nt >= 2");
  DualityReport r;
  double g = pi / (N + Nt - 2);
  r.q = std::polar(1.0, g);
  auto qp = [&](double e) { return std::polar(1.0, g * e); };
  r.identity_residual = std::abs(qp(N - 1) + qp(-(Nt - 1)));
  auto qn = [&](double m) { return std::sin(m * g) / std::sin(g); };
  r.loop_N = 1.0 + qn(N - 1);
  r.loop_Nt = 1.0 + qn(Nt - 1);
  r.loop_weight_residual = std::abs(r.loop_N - r.loop_Nt);
  r.deloop_N = qp(1 - N);
  r.deloop_Nt = qp(1 - Nt);
  r.delooping_residual = std::abs(r.deloop_N * r.deloop_Nt + 1.0);
  return r;
}

}  // namespace tvm
