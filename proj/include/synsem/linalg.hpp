#pragma once

#include "synsem/common.hpp"

namespace synsem {

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // columns are eigenvectors
};

/// Eigendecomposition of a symmetric matrix. Only the lower triangle is
/// read; `a` is consumed.
SymmetricEigen symmetric_eigen(Matrix&& a);

}  // namespace synsem
