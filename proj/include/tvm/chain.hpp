#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "algebra.hpp"
#include "dense.hpp"
#include "krylov.hpp"

namespace tvm {

using Sector = std::vector<int>;

inline std::pair<cplx, cplx> isotropic_points(const ModelSpec& s) {
  double a = s.N * s.gamma / 4.0;
  return {std::exp(2.0 * I * (a - pi / 4)), std::exp(2.0 * I * (a + pi / 4))};
}

// single-site weights of h_1..h_n: w_j(alpha) = delta(alpha, j) - delta(alpha, N+1-j)
inline std::vector<std::vector<int>> site_charges(const ModelSpec& s) {
  std::vector<std::vector<int>> w(s.n, std::vector<int>(s.N, 0));
  for (int j = 0; j < s.n; ++j) {
    w[j][j] += 1;
    w[j][s.N - 1 - j] -= 1;
  }
  return w;
}

// charges from root counts: h1 = L - m1, h_j = m_{j-1} - m_j, a_odd h_n = m_{n-1} - 2 m_n
inline Sector charges_from_roots(const ModelSpec& s, int L, const std::vector<int>& m) {
  Sector h(s.n);
  for (int j = 0; j < s.n; ++j) {
    int prev = (j == 0) ? L : m[j - 1];
    int f = (s.odd() && j == s.n - 1) ? 2 : 1;
    h[j] = prev - f * m[j];
  }
  return h;
}

inline std::optional<std::vector<int>> roots_for_sector(const ModelSpec& s, int L, const Sector& h) {
  std::vector<int> m(s.n);
  int prev = L;
  for (int j = 0; j < s.n; ++j) {
    int f = (s.odd() && j == s.n - 1) ? 2 : 1;
    int d = prev - h[j];
    if (d < 0 || d % f != 0) return std::nullopt;
    m[j] = d / f;
    prev = m[j];
  }
  return m;
}

inline std::int64_t ipow_int(int b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// basis states as digit strings, site 0 most significant
struct Basis {
  int N = 3, L = 2;
  std::vector<std::int64_t> states;
  std::unordered_map<std::int64_t, std::int64_t> index;
  std::optional<Sector> sector;
  std::int64_t dim() const { return static_cast<std::int64_t>(states.size()); }
  std::int64_t find(std::int64_t st) const {
    auto it = index.find(st);
    return it == index.end() ? -1 : it->second;
  }
};

inline Sector state_charges(const ModelSpec& s, int L, std::int64_t st) {
  auto w = site_charges(s);
  Sector h(s.n, 0);
  for (int i = L - 1; i >= 0; --i) {
    int d = static_cast<int>(st % s.N);
    st /= s.N;
    for (int j = 0; j < s.n; ++j) h[j] += w[j][d];
  }
  return h;
}

inline std::int64_t default_max_dim() { return 20000000; }

inline Basis make_basis(const ModelSpec& s, int L, const std::optional<Sector>& sec = std::nullopt,
                        std::int64_t max_dim = default_max_dim()) {
  Basis b;
  b.N = s.N;
  b.L = L;
  b.sector = sec;
  const std::int64_t D = ipow_int(s.N, L);
  if (!sec && D > max_dim)
    throw Error(ErrorKind::dimension_overflow, "full space dimension " + std::to_string(D));
  if (!sec) {
    b.states.resize(D);
    std::iota(b.states.begin(), b.states.end(), 0);
  } else {
    if ((int)sec->size() != s.n) throw Error(ErrorKind::invalid_argument, "sector length must equal rank");
    // depth-first enumeration with running charges
    auto w = site_charges(s);
    std::vector<int> h(s.n, 0);
    std::vector<std::int64_t> out;
    std::function<void(int, std::int64_t)> rec = [&](int i, std::int64_t st) {
      if (i == L) {
        if (std::equal(h.begin(), h.end(), sec->begin())) out.push_back(st);
        return;
      }
      for (int a = 0; a < s.N; ++a) {
        bool ok = true;
        for (int j = 0; j < s.n; ++j) {
          h[j] += w[j][a];
          if (std::abs(h[j] - (*sec)[j]) > L - i - 1) ok = false;
        }
        if (ok) rec(i + 1, st * s.N + a);
        for (int j = 0; j < s.n; ++j) h[j] -= w[j][a];
      }
    };
    rec(0, 0);
    if ((std::int64_t)out.size() > max_dim)
      throw Error(ErrorKind::dimension_overflow, "sector dimension " + std::to_string(out.size()));
    b.states = std::move(out);
  }
  b.index.reserve(b.states.size() * 2);
  for (std::int64_t k = 0; k < b.dim(); ++k) b.index[b.states[k]] = k;
  return b;
}

// all sectors that occur at size L
inline std::vector<Sector> all_sectors(const ModelSpec& s, int L) {
  std::vector<Sector> out;
  auto w = site_charges(s);
  std::function<void(int, Sector&)> rec = [&](int j, Sector& h) {
    if (j == s.n) {
      out.push_back(h);
      return;
    }
    for (int v = -L; v <= L; ++v) {
      h[j] = v;
      rec(j + 1, h);
    }
  };
  Sector h(s.n);
  rec(0, h);
  std::vector<Sector> nonempty;
  for (auto& sec : out) {
    // quick feasibility: count via enumeration is expensive, filter with parity and bounds
    int tot = 0;
    for (int v : sec) tot += std::abs(v);
    if (tot > 2 * L) continue;
    if (make_basis(s, L, sec).dim() > 0) nonempty.push_back(sec);
  }
  return nonempty;
}

// sparse two-site operator: for each input pair, list of (output pair, amplitude)
struct LocalOp {
  int N;
  std::vector<std::vector<std::pair<int, cplx>>> cols;
};

inline LocalOp to_local(const Mat& m, int N, double cut = 1e-15) {
  LocalOp op{N, std::vector<std::vector<std::pair<int, cplx>>>(N * N)};
  double sc = max_abs(m);
  for (int c = 0; c < N * N; ++c)
    for (int r = 0; r < N * N; ++r)
      if (std::abs(m(r, c)) > cut * sc) op.cols[c].push_back({r, m(r, c)});
  return op;
}

// d/dx R(x) at x = 1 divided by the identity scalar of R(1)
inline Mat local_hamiltonian_density(const ModelSpec& s) {
  Mat R0 = r2_explicit(s, 0.0), R1 = r2_explicit(s, 1.0), R2 = r2_explicit(s, 2.0);
  Mat A2 = (R2 - 2.0 * R1 + R0) / 2.0;
  Mat A1 = R1 - R0 - A2;
  cplx c = (1.0 - s.q * s.q) * (1.0 - s.xi);
  return (A1 + 2.0 * A2) / c;
}

struct ChainOperator {
  int L = 2;
  ModelSpec spec;
  Basis basis;
  bool dense = false;
  Mat D;  // dense storage
  Eigen::SparseMatrix<cplx, Eigen::RowMajor> S;
  std::string kind;  // "transfer" or "hamiltonian"
  cplx x{0, 0};
  int sign = 0;
  std::int64_t dim() const { return basis.dim(); }
  void apply(const Vec& v, Vec& out) const {
    if (dense) out = D * v;
    else out = S * v;
  }
  Mat to_dense() const { return dense ? D : Mat(S); }
};

inline constexpr std::int64_t dense_threshold = 4096;
// above this size a dense eigensolve costs more than Krylov-Schur
inline constexpr std::int64_t dense_solve_threshold = 600;

// H = -sign * i * (sum_b e_b - L), periodic
inline ChainOperator hamiltonian(const ModelSpec& s, int L, int sign, const std::optional<Sector>& sec = std::nullopt,
                                 std::int64_t max_dim = default_max_dim()) {
  if (L < 2 || L % 2) throw Error(ErrorKind::invalid_argument, "L must be even and >= 2");
  if (sign != 1 && sign != -1) throw Error(ErrorKind::invalid_argument, "sign must be +1 or -1");
  ChainOperator H;
  H.L = L;
  H.spec = s;
  H.kind = "hamiltonian";
  H.sign = sign;
  H.basis = make_basis(s, L, sec, max_dim);
  const int N = s.N;
  Mat e = local_hamiltonian_density(s) - Mat::Identity(N * N, N * N);
  LocalOp lop = to_local(e, N);
  const cplx pref = -static_cast<double>(sign) * I;
  std::vector<std::int64_t> pw(L);
  for (int i = 0; i < L; ++i) pw[i] = ipow_int(N, L - 1 - i);
  std::vector<Eigen::Triplet<cplx>> trip;
  const std::int64_t dim = H.basis.dim();
  trip.reserve(dim * L * 4);
  std::unordered_map<std::int64_t, cplx> row;
  for (std::int64_t k = 0; k < dim; ++k) {
    std::int64_t st = H.basis.states[k];
    row.clear();
    for (int b = 0; b < L; ++b) {
      int i = b, j = (b + 1) % L;
      int di = static_cast<int>((st / pw[i]) % N), dj = static_cast<int>((st / pw[j]) % N);
      std::int64_t rest = st - di * pw[i] - dj * pw[j];
      for (auto& [r, amp] : lop.cols[di * N + dj]) {
        int oi = r / N, oj = r % N;
        row[rest + oi * pw[i] + oj * pw[j]] += pref * amp;
      }
    }
    for (auto& [st2, amp] : row) {
      std::int64_t r = H.basis.find(st2);
      if (r < 0) throw Error(ErrorKind::invalid_argument, "Hamiltonian leaves the sector");
      if (std::abs(amp) > 0) trip.emplace_back(r, k, amp);
    }
  }
  H.S.resize(dim, dim);
  H.S.setFromTriplets(trip.begin(), trip.end());
  if (dim <= dense_threshold) {
    H.dense = true;
    H.D = Mat(H.S);
  }
  return H;
}

// T(x) v with R = P R-check acting on (aux, site), sites fed in order 1..L
inline void transfer_apply(const ModelSpec& s, int L, const Mat& Rcheck, const Vec& v, Vec& out) {
  const int N = s.N;
  const std::int64_t D = ipow_int(N, L);
  Mat R = permutation_op(N) * Rcheck;  // rows (aux', site'), cols (aux, site)
  LocalOp lop = to_local(R, N);
  out = Vec::Zero(D);
  std::vector<std::int64_t> pw(L);
  for (int i = 0; i < L; ++i) pw[i] = ipow_int(N, L - 1 - i);
  Vec cur(D * N), nxt(D * N);  // index aux * D + sites
  for (int a0 = 0; a0 < N; ++a0) {
    cur.setZero();
    cur.segment(a0 * D, D) = v;
    for (int i = 0; i < L; ++i) {
      nxt.setZero();
      for (std::int64_t idx = 0; idx < D * N; ++idx) {
        cplx amp = cur(idx);
        if (amp == 0.0) continue;
        int a = static_cast<int>(idx / D);
        std::int64_t st = idx % D;
        int d = static_cast<int>((st / pw[i]) % N);
        std::int64_t rest = st - d * pw[i];
        for (auto& [r, val] : lop.cols[a * N + d]) {
          int a2 = r / N, d2 = r % N;
          nxt(a2 * D + rest + d2 * pw[i]) += val * amp;
        }
      }
      std::swap(cur, nxt);
    }
    out += cur.segment(a0 * D, D);
  }
}

// dense matrix of T(x), optionally restricted to a charge sector
inline ChainOperator build_transfer(const ModelSpec& s, int L, cplx x, const std::optional<Sector>& sec = std::nullopt,
                                    std::int64_t max_dim = 8192, bool normalize_r = true) {
  if (L < 2 || L % 2) throw Error(ErrorKind::invalid_argument, "L must be even and >= 2");
  ChainOperator T;
  T.L = L;
  T.spec = s;
  T.kind = "transfer";
  T.x = x;
  T.basis = make_basis(s, L, sec);
  if (T.basis.dim() > max_dim)
    throw Error(ErrorKind::dimension_overflow, "transfer block dimension " + std::to_string(T.basis.dim()));
  Mat Rc = r2_explicit(s, x);
  if (normalize_r) Rc = unit_normalized(Rc);
  const std::int64_t D = ipow_int(s.N, L);
  const std::int64_t d = T.basis.dim();
  T.dense = true;
  T.D = Mat::Zero(d, d);
  Vec e(D), col(D);
  for (std::int64_t k = 0; k < d; ++k) {
    e.setZero();
    e(T.basis.states[k]) = 1.0;
    transfer_apply(s, L, Rc, e, col);
    for (std::int64_t r = 0; r < d; ++r) T.D(r, k) = col(T.basis.states[r]);
  }
  return T;
}

struct SpectrumRecord {
  int N = 3;
  double gamma = 0;
  int L = 2;
  std::string tag;  // "hamiltonian", "x_plus", "x_minus" or "x"
  cplx x{0, 0};
  int sign = 0;
  Sector sector;
  std::vector<cplx> eigenvalues;
};

inline void sort_spectrum(std::vector<cplx>& ev, bool by_modulus) {
  std::stable_sort(ev.begin(), ev.end(), [&](cplx a, cplx b) {
    if (by_modulus) {
      double ma = std::abs(a), mb = std::abs(b);
      if (std::abs(ma - mb) > 1e-12 * std::max(1.0, ma)) return ma > mb;
    } else {
      if (std::abs(a.real() - b.real()) > 1e-12 * std::max(1.0, std::abs(a.real()))) return a.real() < b.real();
    }
    return std::arg(a) < std::arg(b);
  });
}

// top-k by modulus (transfer) or lowest-k by real part (Hamiltonian)
inline SpectrumRecord spectrum(const ChainOperator& op, int k, KrylovOptions opt = {}) {
  if (k > op.dim()) throw Error(ErrorKind::invalid_argument, "k exceeds dimension");
  SpectrumRecord rec;
  rec.N = op.spec.N;
  rec.gamma = op.spec.gamma;
  rec.L = op.L;
  rec.tag = op.kind == "hamiltonian" ? "hamiltonian" : "x";
  rec.x = op.x;
  rec.sign = op.sign;
  rec.sector = op.basis.sector.value_or(Sector{});
  bool bymod = op.kind != "hamiltonian";
  if (op.dim() <= dense_solve_threshold) {
    Mat A = op.to_dense();
    std::vector<cplx> ev = dense_eig(A).values;
    sort_spectrum(ev, bymod);
    ev.resize(k);
    rec.eigenvalues = ev;
    return rec;
  }
  opt.nev = k;
  auto mv = [&](const Vec& a, Vec& b) { op.apply(a, b); };
  auto r = krylov_schur_deflated(mv, op.dim(), bymod ? Which::largest_modulus : Which::smallest_real, opt);
  rec.eigenvalues = r.values;
  sort_spectrum(rec.eigenvalues, bymod);
  return rec;
}

// full dense spectrum of an operator regardless of size threshold
inline std::vector<cplx> dense_spectrum(const ChainOperator& op) {
  std::vector<cplx> ev = dense_eig(op.to_dense()).values;
  sort_spectrum(ev, op.kind != "hamiltonian");
  return ev;
}

// the reference state |11..1> spans the sector h = (L, 0, .., 0); its energy is the additive offset
inline double reference_energy(const ModelSpec& s, int L, int sign) {
  Sector h(s.n, 0);
  h[0] = L;
  auto H = hamiltonian(s, L, sign, h);
  return H.to_dense()(0, 0).real();
}

}  // namespace tvm
