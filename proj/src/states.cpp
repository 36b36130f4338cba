#include "nnes/states.hpp"

#include <cmath>

#include "nnes/blas.hpp"

namespace nnes {

cplx StateFunctional::expect(const Operator& a) const {
  if (layout && a.layout && !(*layout == *a.layout))
    throw Error("StateFunctional::expect: layout mismatch");
  return expect(a.mat);
}

cplx StateFunctional::expect(const cmat& a) const {
  if (a.rows() != density.rows()) throw Error("StateFunctional::expect: size mismatch");
  return (density.transpose().cwiseProduct(a)).sum();  // tr(rho A)
}

cmat gibbs_density(const cmat& h, double beta) {
  if (beta <= 0) throw Error("gibbs_density: beta must be > 0");
  double scale = std::max(1e-300, h.cwiseAbs().maxCoeff());
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error("gibbs_density: Hamiltonian is not Hermitian");
  auto eig = blas::herm_eig(h);
  const double e0 = eig.vals.minCoeff();
  rvec w(eig.vals.size());
  double z = 0;
  for (Eigen::Index k = 0; k < eig.vals.size(); ++k) {
    w(k) = std::exp(-beta * (eig.vals(k) - e0));
    z += w(k);
  }
  w /= z;
  cmat scaled = eig.vecs * w.asDiagonal();
  return blas::mul_adjoint_right(scaled, eig.vecs);
}

StateFunctional product_state(const Scenario& sc) { return product_state(sc, sc.sigma0); }

StateFunctional product_state(const Scenario& sc, const Sigma0Choice& sigma0) {
  const int n = sc.sigma_dim();
  cmat rho0;
  if (sigma0.kind == Sigma0Choice::Kind::maximally_mixed)
    rho0 = cmat::Identity(n, n) / static_cast<double>(n);
  else
    rho0 = gibbs_density(sc.h_sys, sigma0.beta);

  cmat rho = rho0;
  for (size_t a = 0; a < sc.reservoir_h.size(); ++a)
    rho = kron(rho, gibbs_density(sc.reservoir_h[a], sc.reservoirs[a].beta));

  StateFunctional s;
  s.density = std::move(rho);
  s.kind = sigma0.kind == Sigma0Choice::Kind::maximally_mixed
               ? StateFunctional::Kind::gibbs_product
               : StateFunctional::Kind::sigma0_variant;
  s.layout = sc.layout;
  validate_state(s);
  return s;
}

void validate_state(const StateFunctional& s) {
  const cplx tr = s.density.trace();
  if (std::abs(tr - cplx(1, 0)) > 1e-12)
    throw Error("StateFunctional: trace differs from 1");
  auto eig = blas::herm_eig(0.5 * (s.density + s.density.adjoint()));
  if (eig.vals.minCoeff() < -1e-12)
    throw Error("StateFunctional: density has a negative eigenvalue");
}

}  // namespace nnes
