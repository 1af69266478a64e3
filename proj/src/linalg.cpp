#include "synsem/linalg.hpp"

#ifdef SYNSEM_HAVE_LAPACKE
#include <lapacke.h>
#endif

#include <string>

namespace synsem {

SymmetricEigen symmetric_eigen(Matrix&& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("symmetric_eigen: matrix is not square");
  const Index n = a.rows();
  SymmetricEigen out;
  if (n == 0) return out;
#ifdef SYNSEM_HAVE_LAPACKE
  out.values.resize(n);
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n), a.data(),
                     static_cast<lapack_int>(n), out.values.data());
  if (info != 0) throw std::runtime_error("dsyevd failed with info=" + std::to_string(info));
  out.vectors = std::move(a);
#else
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
#endif
  return out;
}

}  // namespace synsem
