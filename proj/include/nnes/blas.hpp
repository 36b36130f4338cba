#pragma once

#include "nnes/types.hpp"

namespace nnes::blas {

/// C = A*B. Routes through OpenBLAS zgemm3m above a small-size cutoff,
/// plain Eigen below it.
cmat mul(const cmat& a, const cmat& b);

/// C = A^H * B.
cmat mul_adjoint_left(const cmat& a, const cmat& b);

/// C = A * B^H.
cmat mul_adjoint_right(const cmat& a, const cmat& b);

struct HermEig {
  cmat vecs;   // columns = eigenvectors
  rvec vals;
};

/// Eigendecomposition of a Hermitian matrix (zheevd, Eigen fallback).
/// Only the lower triangle is referenced.
HermEig herm_eig(const cmat& h);

/// Largest singular value. Exact (zgesdd) for small matrices, power
/// iteration on A^H A with relative tolerance `tol` for large ones.
double spectral_norm(const cmat& a, double tol = 1e-7);

}  // namespace nnes::blas
