#pragma once

#include "nnes/model.hpp"
#include "nnes/operator.hpp"

namespace nnes {

/// A density matrix on the scenario layout exposing expectation evaluation.
struct StateFunctional {
  enum class Kind { gibbs_product, sigma0_variant, custom };

  cmat density;
  Kind kind = Kind::custom;
  LayoutPtr layout;

  cplx expect(const Operator& a) const;
  cplx expect(const cmat& a) const;
};

/// e^{-beta H} / Z via eigendecomposition (max-eigenvalue shifted).
cmat gibbs_density(const cmat& h, double beta);

/// Product state sigma = sigma_0 (x) sigma_1 (x) ... with per-reservoir Gibbs
/// factors; sigma_0 from the scenario's sigma0 choice unless overridden.
StateFunctional product_state(const Scenario& sc);
StateFunctional product_state(const Scenario& sc, const Sigma0Choice& sigma0);

/// Validates positivity and unit trace (within 1e-12); throws otherwise.
void validate_state(const StateFunctional& s);

}  // namespace nnes
