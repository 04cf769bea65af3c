#pragma once

#include <complex>
#include <vector>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapack.h>

#include <Eigen/Dense>

#include "model.hpp"

namespace tvm {

struct DenseEigen {
  std::vector<cplx> values;
  Eigen::MatrixXcd vectors;  // right eigenvectors, columns
};

// general complex eigenproblem through zgeev
inline DenseEigen dense_eig(const Eigen::MatrixXcd& A, bool vectors = false) {
  if (A.rows() != A.cols()) throw Error(ErrorKind::invalid_argument, "dense_eig needs a square matrix");
  lapack_int n = static_cast<lapack_int>(A.rows());
  DenseEigen out;
  if (n == 0) return out;
  Eigen::MatrixXcd a = A;
  std::vector<cplx> w(n);
  Eigen::MatrixXcd vr(vectors ? n : 1, vectors ? n : 1);
  cplx vl_dummy;
  lapack_int one = 1, ldvr = vectors ? n : 1, info = 0, lwork = -1;
  std::vector<double> rwork(2 * n);
  cplx wq;
  const char jl = 'N', jr = vectors ? 'V' : 'N';
  LAPACK_zgeev(&jl, &jr, &n, a.data(), &n, w.data(), &vl_dummy, &one, vr.data(), &ldvr, &wq, &lwork, rwork.data(), &info);
  lwork = std::max<lapack_int>(1, static_cast<lapack_int>(wq.real()));
  std::vector<cplx> work(lwork);
  LAPACK_zgeev(&jl, &jr, &n, a.data(), &n, w.data(), &vl_dummy, &one, vr.data(), &ldvr, work.data(), &lwork,
               rwork.data(), &info);
  if (info != 0) throw Error(ErrorKind::not_converged, "zgeev failed, info=" + std::to_string(info));
  out.values = w;
  if (vectors) out.vectors = vr;
  return out;
}

}  // namespace tvm
