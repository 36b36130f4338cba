#pragma once

#include <vector>

#include "nnes/operator.hpp"
#include "nnes/states.hpp"

namespace nnes {

/// Finite exponential sum F(z) = sum c_mn e^{i z (E_n - E_m)} built from the
/// spectral data of one Gibbs factor: entire in z, with the KMS boundary
/// identities F(t) = sigma(B breve^t A) and F(t + i beta) = sigma(breve^t A B).
struct StripFunction {
  struct Term {
    double e_m, e_n;
    cplx coeff;
  };
  std::vector<Term> terms;
  double beta = 0.0;

  cplx eval(cplx z) const;
};

/// Spectral construction of the KMS correlation function for one reservoir
/// factor. H must be Hermitian, beta > 0.
StripFunction kms_function(const cmat& a, const cmat& b, const cmat& h, double beta);

/// Direct evaluations used as oracles against a StripFunction:
/// sigma(B breve^t A) and sigma(breve^t A B) with sigma = Gibbs(H, beta).
cplx kms_direct_left(const cmat& a, const cmat& b, const cmat& h, double beta, double t);
cplx kms_direct_right(const cmat& a, const cmat& b, const cmat& h, double beta, double t);

/// Operator on the reservoir part A_> given as a sum of elementary tensors
/// sum_j (x)_a B_{ja}: carries the ||.||_1 bound from this decomposition
/// (the infimum over all decompositions is not computed).
struct FactoredOperator {
  std::vector<std::vector<cmat>> terms;  // terms[j][a]: factor for reservoir a

  double bound_1() const;
  cmat assemble() const;
  int reservoir_count() const;
};

struct MultiStripReport {
  double max_boundary_residual = 0.0;  // over all eta in {0,1}^m and t-grid
  double max_abs_interior = 0.0;       // |F| over the sampled open strip
  double max_abs_strip = 0.0;          // |F| over all sampled points
  double max_abs_boundary = 0.0;       // |F| over the sampled eta-faces
  double bound = 0.0;                  // ||A|| * ||B||_1
  bool bound_satisfied = false;

  struct Sample {
    std::vector<double> re, im;
    double abs_f;
    bool boundary;
    double residual;  // |F - direct| on boundary faces, 0 elsewhere
  };
  std::vector<Sample> samples;
};

/// Prop-3.1-type several-variable check on uncoupled reservoirs with product
/// Gibbs state: builds F(z_1,...,z_m) from per-factor strip functions,
/// verifies every eta-boundary identity against direct expectations, and the
/// bound |F| <= ||A|| ||B||_1. Grid: n_re points on [-t_span, t_span] per
/// real axis, n_im points per imaginary axis.
MultiStripReport multi_strip_check(const FactoredOperator& a, const FactoredOperator& b,
                                   const std::vector<cmat>& h_factors,
                                   const std::vector<double>& betas, int n_re = 16,
                                   int n_im = 8, double t_span = 5.0);

/// rho^{it} A rho^{-it} via the eigendecomposition of a full-rank density.
Operator modular_flow(const StateFunctional& rho, const Operator& a, double t);

}  // namespace nnes
