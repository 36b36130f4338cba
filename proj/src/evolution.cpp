#include "nnes/evolution.hpp"

#include <cmath>

#include "nnes/quadrature.hpp"

namespace nnes {

cmat to_basis(const cmat& v, const cmat& a) {
  return blas::mul_adjoint_left(v, blas::mul(a, v));
}

cmat from_basis(const cmat& v, const cmat& a) {
  return blas::mul(v, blas::mul_adjoint_right(a, v));
}

void phase_conjugate_inplace(cmat& a_eig, const rvec& vals, double tau) {
  const Eigen::Index n = a_eig.rows();
  cvec p(n);
  for (Eigen::Index k = 0; k < n; ++k) p(k) = std::exp(cplx(0, vals(k) * tau));
  a_eig = p.asDiagonal() * a_eig;
  a_eig = a_eig * p.conjugate().asDiagonal();
}

cmat spectral_heisenberg(const blas::HermEig& eig, const cmat& a, double tau) {
  cmat t = to_basis(eig.vecs, a);
  phase_conjugate_inplace(t, eig.vals, tau);
  return from_basis(eig.vecs, t);
}

cplx phase_pair_sum(const cmat& d, const rvec& vals, double tau) {
  const Eigen::Index n = d.rows();
  cvec p(n);
  for (Eigen::Index k = 0; k < n; ++k) p(k) = std::exp(cplx(0, vals(k) * tau));
  return p.dot(d * p);  // p^H D p = sum conj(p_k) D_kl p_l
}

// ---------------------------------------------------------------------------

struct Propagator::Cache {
  std::mutex mu;
  std::unique_ptr<blas::HermEig> full;
  std::vector<std::unique_ptr<blas::HermEig>> factors;
  std::map<std::vector<long long>, blas::HermEig> h_eigs;  // keyed by envelope values
  std::map<long long, cmat> grid_steps;                    // whole-dt factors by grid index
};

Propagator::Propagator(const Scenario& sc, Kind kind, bool force_stepped)
    : sc_(&sc), kind_(kind), cache_(std::make_shared<Cache>()) {
  spectral_ = (kind == Kind::free) ||
              (!sc.coupling.time_dependent() && !force_stepped);
  if (kind == Kind::free)
    cache_->factors.resize(static_cast<size_t>(sc.layout->factors()));
}

Propagator Propagator::free_evolution(const Scenario& sc) {
  return Propagator(sc, Kind::free, false);
}

Propagator Propagator::coupled(const Scenario& sc) {
  return Propagator(sc, Kind::coupled, false);
}

Propagator Propagator::coupled_stepped(const Scenario& sc) {
  return Propagator(sc, Kind::coupled, true);
}

const blas::HermEig& Propagator::factor_eig(int a) const {
  if (kind_ != Kind::free) throw Error("factor_eig: only the free propagator factorizes");
  std::lock_guard<std::mutex> lock(cache_->mu);
  auto& slot = cache_->factors.at(static_cast<size_t>(a));
  if (!slot) slot = std::make_unique<blas::HermEig>(blas::herm_eig(sc_->local_free(a)));
  return *slot;
}

const blas::HermEig& Propagator::eig() const {
  if (!spectral_) throw Error("Propagator::eig: no cached spectrum on the stepped path");
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (cache_->full) return *cache_->full;
  }
  blas::HermEig full;
  if (kind_ == Kind::free) {
    // Assemble from the per-factor decompositions: the free evolution is a
    // product, so no full-space diagonalization is needed.
    const int nf = sc_->layout->factors();
    std::vector<const blas::HermEig*> fe(static_cast<size_t>(nf));
    for (int a = 0; a < nf; ++a) fe[static_cast<size_t>(a)] = &factor_eig(a);
    cmat vecs = fe[0]->vecs;
    for (int a = 1; a < nf; ++a) vecs = kron(vecs, fe[static_cast<size_t>(a)]->vecs);
    const long total = sc_->layout->total();
    rvec vals(total);
    for (long idx = 0; idx < total; ++idx) {
      long rest = idx;
      double e = 0;
      for (int a = nf - 1; a >= 0; --a) {
        const int d = sc_->layout->dim(a);
        e += fe[static_cast<size_t>(a)]->vals(rest % d);
        rest /= d;
      }
      vals(idx) = e;
    }
    full.vecs = std::move(vecs);
    full.vals = std::move(vals);
  } else {
    full = blas::herm_eig(sc_->h_free.mat + sc_->coupling.static_part.mat);
  }
  std::lock_guard<std::mutex> lock(cache_->mu);
  if (!cache_->full) cache_->full = std::make_unique<blas::HermEig>(std::move(full));
  return *cache_->full;
}

cmat Propagator::step_factor(double x, double w) const {
  // Midpoint rule: U = exp(-i H(x + w/2) w), H from the envelope values at
  // the midpoint. Eigendecompositions are cached by quantized envelope
  // coefficients, which dedups saturated smooth-steps and constant drives.
  const double mid = x + w / 2;
  std::vector<long long> key;
  key.reserve(sc_->coupling.drive.size());
  std::vector<double> env(sc_->coupling.drive.size());
  for (size_t i = 0; i < sc_->coupling.drive.size(); ++i) {
    env[i] = sc_->coupling.drive[i].envelope(mid);
    key.push_back(std::llround(env[i] * 1e12));
  }
  const blas::HermEig* eig = nullptr;
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->h_eigs.find(key);
    if (it != cache_->h_eigs.end()) eig = &it->second;
  }
  if (!eig) {
    cmat h = sc_->h_free.mat + sc_->coupling.static_part.mat;
    for (size_t i = 0; i < sc_->coupling.drive.size(); ++i)
      h += env[i] * sc_->coupling.drive[i].op.mat;
    blas::HermEig e = blas::herm_eig(h);
    std::lock_guard<std::mutex> lock(cache_->mu);
    eig = &cache_->h_eigs.emplace(key, std::move(e)).first->second;
  }
  cvec p(eig->vals.size());
  for (Eigen::Index k = 0; k < eig->vals.size(); ++k)
    p(k) = std::exp(cplx(0, -eig->vals(k) * w));
  cmat scaled = eig->vecs * p.asDiagonal();
  return blas::mul_adjoint_right(scaled, eig->vecs);
}

cmat Propagator::schrodinger(double to, double from) const {
  const long total = sc_->layout->total();
  if (to == from) return cmat::Identity(total, total);

  if (spectral_) {
    const auto& e = eig();
    cvec p(e.vals.size());
    for (Eigen::Index k = 0; k < e.vals.size(); ++k)
      p(k) = std::exp(cplx(0, -e.vals(k) * (to - from)));
    cmat scaled = e.vecs * p.asDiagonal();
    return blas::mul_adjoint_right(scaled, e.vecs);
  }

  if (to < from) return schrodinger(from, to).adjoint();

  // Time-ordered product over the absolute dt grid (grid nodes at k*dt).
  const double dt = sc_->numerics.dt;
  const double eps = 1e-9 * dt;
  cmat u;
  bool have = false;
  double x = from;
  while (x < to - eps) {
    const double k_exact = x / dt;
    const long long k = std::llround(k_exact);
    const bool on_grid = std::abs(k_exact - static_cast<double>(k)) < 1e-9;
    double w;
    cmat f;
    if (on_grid && x + dt <= to + eps) {
      w = std::min(dt, to - x);
      if (std::abs(w - dt) < eps) {
        // whole grid step: cached
        {
          std::lock_guard<std::mutex> lock(cache_->mu);
          auto it = cache_->grid_steps.find(k);
          if (it != cache_->grid_steps.end()) f = it->second;
        }
        if (f.size() == 0) {
          f = step_factor(x, dt);
          std::lock_guard<std::mutex> lock(cache_->mu);
          cache_->grid_steps.emplace(k, f);
        }
        w = dt;
      } else {
        f = step_factor(x, w);
      }
    } else {
      // partial step up to the next grid node or the endpoint
      const double next_grid = (std::floor(x / dt + 1e-9) + 1.0) * dt;
      w = std::min(next_grid, to) - x;
      f = step_factor(x, w);
    }
    u = have ? blas::mul(f, u) : f;
    have = true;
    x += w;
  }
  if (!have) return cmat::Identity(total, total);
  return u;
}

Operator Propagator::evolve(const Operator& a, double t, double s) const {
  if (!(*a.layout == *sc_->layout))
    throw Error("Propagator::evolve: operator layout does not match scenario");
  if (t == s) return a;
  if (spectral_)
    return Operator(a.layout, spectral_heisenberg(eig(), a.mat, s - t), a.label);
  cmat u = schrodinger(s, t);
  return Operator(a.layout, blas::mul_adjoint_left(u, blas::mul(a.mat, u)), a.label);
}

Operator Propagator::group(const Operator& a, double t) const { return evolve(a, 0.0, t); }

cmat Propagator::evolve_local(const cmat& local, int a, double t, double s) const {
  return spectral_heisenberg(factor_eig(a), local, s - t);
}

// ---------------------------------------------------------------------------

Operator echo_plus(const Propagator& free_p, const Propagator& coupled_p,
                   const Operator& a, double t, double s) {
  return free_p.evolve(coupled_p.evolve(a, s, t), t, s);
}

Operator echo_minus(const Propagator& free_p, const Propagator& coupled_p,
                    const Operator& a, double t, double s) {
  return coupled_p.evolve(free_p.evolve(a, s, t), t, s);
}

namespace {

// Simpson sum of  int_s^t du outer(t,u)[h, inner(u,t)A]  for static h, with
// both propagators spectral. Works in the outer eigenbasis; per node this
// costs two gemms plus O(n^2) phase scalings. Requires Hermitian A.
cmat echo_quadrature_spectral_herm(const blas::HermEig& outer, const blas::HermEig& inner,
                                   const cmat& h, const cmat& a, double t, double s,
                                   double dt_hint) {
  const long n_nodes_l = std::llround(std::abs(t - s) / dt_hint);
  const int n_int = std::max<int>(1, static_cast<int>(n_nodes_l));
  const double dt = (t - s) / n_int;
  auto w = quad::simpson_weights(n_int + 1, dt);

  cmat a_in = to_basis(inner.vecs, a);
  cmat r = blas::mul_adjoint_left(outer.vecs, inner.vecs);
  cmat h_out = to_basis(outer.vecs, h);
  cmat sh = blas::mul(h_out, r);

  cmat acc = cmat::Zero(a.rows(), a.cols());
  for (int j = 0; j <= n_int; ++j) {
    const double u = s + j * dt;
    const double tau = t - u;
    cmat b = a_in;
    phase_conjugate_inplace(b, inner.vals, tau);
    cmat x = blas::mul_adjoint_right(blas::mul(sh, b), r);
    cmat f = x - x.adjoint();
    phase_conjugate_inplace(f, outer.vals, -tau);
    acc.noalias() += w[static_cast<size_t>(j)] * f;
  }
  return from_basis(outer.vecs, acc);
}

cmat echo_quadrature_spectral(const blas::HermEig& outer, const blas::HermEig& inner,
                              const cmat& h, const cmat& a, double t, double s,
                              double dt_hint) {
  cmat ah = 0.5 * (a + a.adjoint());
  cmat aah = cplx(0, -0.5) * (a - a.adjoint());
  const double scale = std::max(1e-300, a.cwiseAbs().maxCoeff());
  cmat out = cmat::Zero(a.rows(), a.cols());
  if (ah.cwiseAbs().maxCoeff() > 1e-15 * scale)
    out += echo_quadrature_spectral_herm(outer, inner, h, ah, t, s, dt_hint);
  if (aah.cwiseAbs().maxCoeff() > 1e-15 * scale)
    out += I_UNIT * echo_quadrature_spectral_herm(outer, inner, h, aah, t, s, dt_hint);
  return out;
}

// Generic path: incremental frame walking, valid for time-dependent h and
// stepped propagators.
cmat echo_quadrature_generic(const Propagator& outer, const Propagator& inner,
                             const Operator& a, double t, double s) {
  const Scenario& sc = outer.scenario();
  const long n_nodes_l = std::llround(std::abs(t - s) / sc.numerics.dt);
  const int n_int = std::max<int>(1, static_cast<int>(n_nodes_l));
  const double dt = (t - s) / n_int;
  auto w = quad::simpson_weights(n_int + 1, dt);

  cmat y = a.mat;                         // inner(u,t)A at u = t
  cmat v;                                 // U_outer(u, t)
  bool have_v = false;
  cmat acc = cmat::Zero(a.mat.rows(), a.mat.cols());
  for (int j = n_int; j >= 0; --j) {
    const double u = s + j * dt;
    cmat hmat = sc.coupling.at(u).mat;
    cmat c = blas::mul(hmat, y) - blas::mul(y, hmat);
    cmat f = have_v ? blas::mul_adjoint_left(v, blas::mul(c, v)) : std::move(c);
    acc.noalias() += w[static_cast<size_t>(j)] * f;
    if (j > 0) {
      const double u_prev = s + (j - 1) * dt;
      cmat step_in = inner.schrodinger(u, u_prev);
      y = blas::mul_adjoint_left(step_in, blas::mul(y, step_in));
      cmat step_out = outer.schrodinger(u_prev, u);
      v = have_v ? cmat(blas::mul(step_out, v)) : step_out;
      have_v = true;
    }
  }
  return acc;
}

bool fast_path(const Propagator& free_p, const Propagator& coupled_p) {
  return free_p.spectral() && coupled_p.spectral() &&
         !coupled_p.scenario().coupling.time_dependent();
}

}  // namespace

Operator echo_plus_quadrature(const Propagator& free_p, const Propagator& coupled_p,
                              const Operator& a, double t, double s) {
  const Scenario& sc = coupled_p.scenario();
  cmat integral =
      fast_path(free_p, coupled_p)
          ? echo_quadrature_spectral(free_p.eig(), coupled_p.eig(),
                                     sc.coupling.static_part.mat, a.mat, t, s,
                                     sc.numerics.dt)
          : echo_quadrature_generic(free_p, coupled_p, a, t, s);
  return Operator(a.layout, a.mat + I_UNIT * integral, a.label);
}

Operator echo_minus_quadrature(const Propagator& free_p, const Propagator& coupled_p,
                               const Operator& a, double t, double s) {
  const Scenario& sc = coupled_p.scenario();
  cmat integral =
      fast_path(free_p, coupled_p)
          ? echo_quadrature_spectral(coupled_p.eig(), free_p.eig(),
                                     sc.coupling.static_part.mat, a.mat, t, s,
                                     sc.numerics.dt)
          : echo_quadrature_generic(coupled_p, free_p, a, t, s);
  return Operator(a.layout, a.mat - I_UNIT * integral, a.label);
}

Operator echo_plus_derivative_rhs(const Propagator& free_p, const Propagator& coupled_p,
                                  const Operator& a, double s, double tprime) {
  Operator h = coupled_p.scenario().coupling.at(tprime);
  Operator inner = coupled_p.evolve(a, tprime, s);
  return cplx(0, -1) * free_p.evolve(commutator(h, inner), s, tprime);
}

Operator echo_minus_derivative_rhs(const Propagator& free_p, const Propagator& coupled_p,
                                   const Operator& a, double s, double tprime) {
  Operator h = coupled_p.scenario().coupling.at(tprime);
  Operator inner = free_p.evolve(a, tprime, s);
  return cplx(0, 1) * coupled_p.evolve(commutator(h, inner), s, tprime);
}

}  // namespace nnes
