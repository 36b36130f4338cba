#include "nnes/kms.hpp"

#include <cmath>

#include "nnes/blas.hpp"
#include "nnes/evolution.hpp"

namespace nnes {

cplx StripFunction::eval(cplx z) const {
  cplx out = 0;
  for (const auto& t : terms) out += t.coeff * std::exp(I_UNIT * z * (t.e_n - t.e_m));
  return out;
}

namespace {

struct GibbsSpectral {
  blas::HermEig eig;
  rvec weights;  // e^{-beta(E - E0)} / Z
};

GibbsSpectral gibbs_spectral(const cmat& h, double beta) {
  if (beta <= 0) throw Error("kms: beta must be > 0");
  double scale = std::max(1e-300, h.cwiseAbs().maxCoeff());
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error("kms: Hamiltonian is not Hermitian");
  GibbsSpectral g{blas::herm_eig(h), {}};
  const double e0 = g.eig.vals.minCoeff();
  g.weights.resize(g.eig.vals.size());
  double z = 0;
  for (Eigen::Index k = 0; k < g.eig.vals.size(); ++k) {
    g.weights(k) = std::exp(-beta * (g.eig.vals(k) - e0));
    z += g.weights(k);
  }
  g.weights /= z;
  return g;
}

}  // namespace

StripFunction kms_function(const cmat& a, const cmat& b, const cmat& h, double beta) {
  if (a.rows() != h.rows() || b.rows() != h.rows())
    throw Error("kms_function: operator size does not match the Hamiltonian");
  auto g = gibbs_spectral(h, beta);
  cmat at = to_basis(g.eig.vecs, a);
  cmat bt = to_basis(g.eig.vecs, b);
  StripFunction f;
  f.beta = beta;
  const Eigen::Index d = h.rows();
  f.terms.reserve(static_cast<size_t>(d * d));
  for (Eigen::Index m = 0; m < d; ++m)
    for (Eigen::Index n = 0; n < d; ++n) {
      const cplx c = g.weights(m) * bt(m, n) * at(n, m);
      if (std::abs(c) > 1e-300)
        f.terms.push_back({g.eig.vals(m), g.eig.vals(n), c});
    }
  return f;
}

cplx kms_direct_left(const cmat& a, const cmat& b, const cmat& h, double beta, double t) {
  auto g = gibbs_spectral(h, beta);
  cmat evolved_a = spectral_heisenberg(g.eig, a, t);
  cmat rho = g.eig.vecs * g.weights.asDiagonal() * g.eig.vecs.adjoint();
  return (rho * b * evolved_a).trace();
}

cplx kms_direct_right(const cmat& a, const cmat& b, const cmat& h, double beta, double t) {
  auto g = gibbs_spectral(h, beta);
  cmat evolved_a = spectral_heisenberg(g.eig, a, t);
  cmat rho = g.eig.vecs * g.weights.asDiagonal() * g.eig.vecs.adjoint();
  return (rho * evolved_a * b).trace();
}

// ---------------------------------------------------------------------------

int FactoredOperator::reservoir_count() const {
  if (terms.empty()) throw Error("FactoredOperator: no terms supplied");
  return static_cast<int>(terms[0].size());
}

double FactoredOperator::bound_1() const {
  if (terms.empty()) throw Error("FactoredOperator: no terms supplied");
  double sum = 0;
  for (const auto& term : terms) {
    double prod = 1;
    for (const auto& f : term) prod *= blas::spectral_norm(f);
    sum += prod;
  }
  return sum;
}

cmat FactoredOperator::assemble() const {
  if (terms.empty()) throw Error("FactoredOperator: no terms supplied");
  cmat out;
  for (size_t j = 0; j < terms.size(); ++j) {
    cmat t = cmat::Identity(1, 1);
    for (const auto& f : terms[j]) t = kron(t, f);
    if (j == 0)
      out = t;
    else
      out += t;
  }
  return out;
}

MultiStripReport multi_strip_check(const FactoredOperator& a, const FactoredOperator& b,
                                   const std::vector<cmat>& h_factors,
                                   const std::vector<double>& betas, int n_re, int n_im,
                                   double t_span) {
  const int m = static_cast<int>(h_factors.size());
  if (m < 1) throw Error("multi_strip_check: need at least one reservoir");
  if (a.reservoir_count() != m || b.reservoir_count() != m)
    throw Error("multi_strip_check: factored operators do not match reservoir count");
  if (static_cast<int>(betas.size()) != m)
    throw Error("multi_strip_check: betas do not match reservoir count");
  for (int r = 0; r < m; ++r) {
    for (const auto& term : a.terms)
      if (term[static_cast<size_t>(r)].rows() != h_factors[static_cast<size_t>(r)].rows())
        throw Error("multi_strip_check: factor dimension mismatch in A");
    for (const auto& term : b.terms)
      if (term[static_cast<size_t>(r)].rows() != h_factors[static_cast<size_t>(r)].rows())
        throw Error("multi_strip_check: factor dimension mismatch in B");
  }

  // Per-(i, j, reservoir) strip functions: F(z) = sum_ij prod_r F_ijr(z_r).
  const size_t ni = a.terms.size(), nj = b.terms.size();
  std::vector<std::vector<std::vector<StripFunction>>> fs(ni);
  for (size_t i = 0; i < ni; ++i) {
    fs[i].resize(nj);
    for (size_t j = 0; j < nj; ++j) {
      fs[i][j].reserve(static_cast<size_t>(m));
      for (int r = 0; r < m; ++r)
        fs[i][j].push_back(kms_function(a.terms[i][static_cast<size_t>(r)],
                                        b.terms[j][static_cast<size_t>(r)],
                                        h_factors[static_cast<size_t>(r)],
                                        betas[static_cast<size_t>(r)]));
    }
  }
  auto eval_f = [&](const std::vector<cplx>& z) {
    cplx out = 0;
    for (size_t i = 0; i < ni; ++i)
      for (size_t j = 0; j < nj; ++j) {
        cplx prod = 1;
        for (int r = 0; r < m; ++r) prod *= fs[i][j][static_cast<size_t>(r)].eval(z[static_cast<size_t>(r)]);
        out += prod;
      }
    return out;
  };
  // Direct boundary oracle for eta in {0,1}^m: per factor, sigma_r(B breve A)
  // for eta_r = 0 and sigma_r(breve A B) for eta_r = 1, evaluated by explicit
  // matrix products.
  auto eval_direct = [&](const std::vector<double>& t, unsigned eta) {
    cplx out = 0;
    for (size_t i = 0; i < ni; ++i)
      for (size_t j = 0; j < nj; ++j) {
        cplx prod = 1;
        for (int r = 0; r < m; ++r) {
          const auto& af = a.terms[i][static_cast<size_t>(r)];
          const auto& bf = b.terms[j][static_cast<size_t>(r)];
          const auto& h = h_factors[static_cast<size_t>(r)];
          const double beta = betas[static_cast<size_t>(r)];
          prod *= (eta >> r) & 1u ? kms_direct_right(af, bf, h, beta, t[static_cast<size_t>(r)])
                                  : kms_direct_left(af, bf, h, beta, t[static_cast<size_t>(r)]);
        }
        out += prod;
      }
    return out;
  };

  MultiStripReport rep;
  rep.bound = blas::spectral_norm(a.assemble()) * b.bound_1();

  // Real grid per variable.
  std::vector<double> ts(static_cast<size_t>(n_re));
  for (int k = 0; k < n_re; ++k)
    ts[static_cast<size_t>(k)] = n_re == 1 ? 0.0 : -t_span + 2 * t_span * k / (n_re - 1);

  // eta-boundary faces: every corner of the polystrip against the oracle.
  std::vector<size_t> idx(static_cast<size_t>(m), 0);
  const long n_grid = static_cast<long>(std::pow(static_cast<double>(n_re), m));
  for (unsigned eta = 0; eta < (1u << m); ++eta) {
    for (long g = 0; g < n_grid; ++g) {
      long rest = g;
      std::vector<double> t(static_cast<size_t>(m));
      std::vector<cplx> z(static_cast<size_t>(m));
      for (int r = 0; r < m; ++r) {
        t[static_cast<size_t>(r)] = ts[static_cast<size_t>(rest % n_re)];
        rest /= n_re;
        const double y = ((eta >> r) & 1u) ? betas[static_cast<size_t>(r)] : 0.0;
        z[static_cast<size_t>(r)] = cplx(t[static_cast<size_t>(r)], y);
      }
      const cplx f = eval_f(z);
      const cplx d = eval_direct(t, eta);
      const double resid = std::abs(f - d);
      rep.max_boundary_residual = std::max(rep.max_boundary_residual, resid);
      rep.max_abs_boundary = std::max(rep.max_abs_boundary, std::abs(f));
      rep.max_abs_strip = std::max(rep.max_abs_strip, std::abs(f));
      MultiStripReport::Sample smp;
      smp.re = t;
      smp.im.resize(static_cast<size_t>(m));
      for (int r = 0; r < m; ++r)
        smp.im[static_cast<size_t>(r)] = ((eta >> r) & 1u) ? betas[static_cast<size_t>(r)] : 0.0;
      smp.abs_f = std::abs(f);
      smp.boundary = true;
      smp.residual = resid;
      rep.samples.push_back(std::move(smp));
    }
  }

  // Interior samples: product grid over (t, y) per variable with y strictly
  // inside (0, beta).
  std::vector<double> ys(static_cast<size_t>(n_im));
  const long n_full = static_cast<long>(std::pow(static_cast<double>(n_re * n_im), m));
  for (long g = 0; g < n_full; ++g) {
    long rest = g;
    std::vector<cplx> z(static_cast<size_t>(m));
    MultiStripReport::Sample smp;
    smp.re.resize(static_cast<size_t>(m));
    smp.im.resize(static_cast<size_t>(m));
    for (int r = 0; r < m; ++r) {
      const int kt = static_cast<int>(rest % n_re);
      rest /= n_re;
      const int ky = static_cast<int>(rest % n_im);
      rest /= n_im;
      const double beta = betas[static_cast<size_t>(r)];
      const double y = beta * (ky + 1) / (n_im + 1);
      smp.re[static_cast<size_t>(r)] = ts[static_cast<size_t>(kt)];
      smp.im[static_cast<size_t>(r)] = y;
      z[static_cast<size_t>(r)] = cplx(ts[static_cast<size_t>(kt)], y);
    }
    const double af = std::abs(eval_f(z));
    rep.max_abs_interior = std::max(rep.max_abs_interior, af);
    rep.max_abs_strip = std::max(rep.max_abs_strip, af);
    smp.abs_f = af;
    smp.boundary = false;
    smp.residual = 0.0;
    rep.samples.push_back(std::move(smp));
  }

  rep.bound_satisfied = rep.max_abs_strip <= rep.bound + 1e-10;
  return rep;
}

Operator modular_flow(const StateFunctional& rho, const Operator& a, double t) {
  if (rho.density.rows() != a.mat.rows())
    throw Error("modular_flow: state and operator dimensions differ");
  auto eig = blas::herm_eig(rho.density);
  const double pmax = eig.vals.maxCoeff();
  if (eig.vals.minCoeff() <= 1e-12 * pmax)
    throw Error("modular_flow: density is rank-deficient");
  rvec logs(eig.vals.size());
  for (Eigen::Index k = 0; k < eig.vals.size(); ++k) logs(k) = std::log(eig.vals(k));
  cmat at = to_basis(eig.vecs, a.mat);
  phase_conjugate_inplace(at, logs, t);
  return Operator(a.layout, from_basis(eig.vecs, at), "tau^t(" + a.label + ")");
}

}  // namespace nnes
