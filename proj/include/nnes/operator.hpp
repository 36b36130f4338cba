#pragma once

#include <string>
#include <vector>

#include "nnes/layout.hpp"
#include "nnes/types.hpp"

namespace nnes {

/// Dense operator on the full tensor-product space, tagged with its layout.
/// Immutable by convention: all operations return fresh values.
struct Operator {
  LayoutPtr layout;
  cmat mat;
  std::string label;

  Operator() = default;
  Operator(LayoutPtr lay, cmat m, std::string lab = {});

  long dim() const { return mat.rows(); }
  Operator adjoint() const { return Operator(layout, mat.adjoint(), label); }
  bool is_hermitian(double tol = 1e-12) const;
};

void require_same_layout(const Operator& a, const Operator& b, const char* where);

Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(const Operator& a, const Operator& b);
Operator operator*(cplx s, const Operator& a);

/// Kronecker product of two dense matrices (row/col order matches layout order).
cmat kron(const cmat& a, const cmat& b);

/// Kronecker product of one factor per subsystem, in layout order.
Operator tensor(const std::vector<cmat>& factors, LayoutPtr layout);

/// `local` at subsystem slot a, identity elsewhere.
Operator embed(const cmat& local, int subsystem, LayoutPtr layout);

/// Embed an operator acting on a list of site slots. Sites are addressed as
/// (subsystem, site index); `local` lives on the product of the listed sites
/// in the listed order. Used for couplings on Sigma x (reservoir boundary).
struct SiteRef {
  int subsystem = 0;
  int site = 0;
};
Operator embed_on_sites(const cmat& local, const std::vector<SiteRef>& sites,
                        LayoutPtr layout);

Operator commutator(const Operator& a, const Operator& b);

/// C*-norm: largest singular value.
double op_norm(const Operator& a);
double op_norm(const cmat& a);

/// U = exp(-i H t) via eigendecomposition. Rejects non-Hermitian H
/// (tolerance 1e-12 * ||H||).
Operator expm_hermitian(const Operator& h, double t);

/// Partial trace over the Sigma slot, normalized by 1/n: exact on elementary
/// tensors, partial_trace_sigma(X (x) Y) = (tr X / n) Y.
cmat partial_trace_sigma(const Operator& a);

/// 1_0 (x) partial_trace_sigma(A): the Sigma-average of A on the full space.
Operator sigma_average(const Operator& a);

/// Embed a reservoir-part matrix as 1_0 (x) Y.
Operator embed_reservoir_part(const cmat& y, LayoutPtr layout);

Operator identity(LayoutPtr layout);
Operator zero(LayoutPtr layout);

}  // namespace nnes
