#include "nnes/response.hpp"

#include <cmath>

#include "nnes/quadrature.hpp"

namespace nnes {

namespace {

EnvelopeSpec scaled_envelope(const EnvelopeSpec& env, double lambda) {
  EnvelopeSpec out = env;
  out.value *= lambda;
  out.amplitude *= lambda;
  return out;
}

struct Grid {
  int n_nodes;
  double dt;
  double start;  // first node
};

// Shared response grid: even interval count on [start, end], dt near the
// scenario step so error models compose with the NNES quadrature.
Grid response_grid(double start, double end, double dt_hint) {
  const double span = end - start;
  if (span <= 0) throw Error("response grid: empty integration window");
  long n = std::llround(span / dt_hint);
  if (n % 2 != 0) ++n;
  n = std::max<long>(2, n);
  return {static_cast<int>(n) + 1, span / static_cast<double>(n), start};
}

double tail_bound_from_series(const std::vector<double>& x, const std::vector<double>& av,
                              double window) {
  auto env = local_maxima(x, av);
  double x_hi = 0;
  for (double v : x) x_hi = std::max(x_hi, std::abs(v));
  const double p = fit_power_law(env, 0.5, x_hi);
  double g_end = 0;
  const int tailn = std::max<int>(2, static_cast<int>(av.size()) / 10);
  for (int i = std::max<int>(0, static_cast<int>(av.size()) - tailn);
       i < static_cast<int>(av.size()); ++i)
    g_end = std::max(g_end, av[static_cast<size_t>(i)]);
  return tail_from_fit(g_end, x.empty() ? 0.0 : x.back(), p, window);
}

}  // namespace

Scenario perturbed_scenario(const Scenario& sc, const CouplingSchedule& k, double lambda) {
  Scenario out = sc;
  out.coupling.static_part = out.coupling.static_part + lambda * k.static_part;
  for (const auto& term : k.drive)
    out.coupling.drive.push_back({term.op, scaled_envelope(term.envelope, lambda)});
  out.coupling.sup_norm_bound += std::abs(lambda) * k.sup_norm_bound;
  return out;
}

CouplingSchedule static_kick(const Operator& k) {
  if (!k.is_hermitian()) throw Error("static_kick: k must be self-adjoint");
  CouplingSchedule s;
  s.static_part = k;
  s.sup_norm_bound = op_norm(k);
  return s;
}

CouplingSchedule enveloped_kick(const Operator& k, const EnvelopeSpec& env) {
  if (!k.is_hermitian()) throw Error("enveloped_kick: k must be self-adjoint");
  CouplingSchedule s;
  s.static_part = zero(k.layout);
  s.drive.push_back({k, env});
  s.sup_norm_bound = env.sup_abs() * op_norm(k);
  return s;
}

ResponseEngine::ResponseEngine(const Scenario& sc)
    : sc_(&sc),
      free_(std::make_unique<Propagator>(Propagator::free_evolution(sc))),
      coupled_(std::make_unique<Propagator>(Propagator::coupled(sc))),
      nnes_(std::make_unique<NnesEngine>(sc, *free_, *coupled_)) {}

namespace {

Operator kick_at(const CouplingSchedule& k, double tau) { return k.at(tau); }

}  // namespace

Operator ResponseEngine::lambda_derivative(const Operator& a, double s, double t,
                                           const CouplingSchedule& k) const {
  if (s == t) return zero(a.layout);
  const Grid g = response_grid(std::min(s, t), std::max(s, t), sc_->numerics.dt);
  auto w = quad::simpson_weights(g.n_nodes, g.dt);
  const double sign = (t >= s) ? 1.0 : -1.0;

  const bool fast = coupled_->spectral() && !sc_->coupling.time_dependent();
  cmat acc = cmat::Zero(a.mat.rows(), a.mat.cols());
  if (fast) {
    const auto& eig = coupled_->eig();
    cmat a_q = to_basis(eig.vecs, a.mat);
    const bool k_static = !k.time_dependent();
    cmat k_q;
    if (k_static) k_q = to_basis(eig.vecs, k.static_part.mat);
    for (int j = 0; j < g.n_nodes; ++j) {
      const double tau = g.start + j * g.dt;
      cmat b = a_q;
      phase_conjugate_inplace(b, eig.vals, t - tau);
      if (!k_static) k_q = to_basis(eig.vecs, kick_at(k, tau).mat);
      cmat c = blas::mul(k_q, b) - blas::mul(b, k_q);
      phase_conjugate_inplace(c, eig.vals, tau - s);
      acc.noalias() += w[static_cast<size_t>(j)] * c;
    }
    acc = from_basis(eig.vecs, acc);
  } else {
    // ascending walk: Y(tau) = alpha(tau,t)A, V(tau) = U(tau,s)
    Operator y = coupled_->evolve(a, g.start, t);
    cmat v = coupled_->schrodinger(g.start, s);
    for (int j = 0; j < g.n_nodes; ++j) {
      const double tau = g.start + j * g.dt;
      cmat kt = kick_at(k, tau).mat;
      cmat c = blas::mul(kt, y.mat) - blas::mul(y.mat, kt);
      acc.noalias() +=
          w[static_cast<size_t>(j)] * blas::mul_adjoint_left(v, blas::mul(c, v));
      if (j + 1 < g.n_nodes) {
        // alpha(tau+dt, tau)X = U(tau, tau+dt)^H X U(tau, tau+dt) = S X S^H
        cmat step = coupled_->schrodinger(tau + g.dt, tau);
        y.mat = blas::mul(step, blas::mul_adjoint_right(y.mat, step));
        v = blas::mul(step, v);
      }
    }
  }
  return Operator(a.layout, (sign * I_UNIT) * acc, "dalpha/dlambda");
}

Operator ResponseEngine::lambda_derivative_fd(const Operator& a, double s, double t,
                                              const CouplingSchedule& k, double eps) const {
  Scenario plus = perturbed_scenario(*sc_, k, eps);
  Scenario minus = perturbed_scenario(*sc_, k, -eps);
  Propagator pp = Propagator::coupled(plus);
  Propagator pm = Propagator::coupled(minus);
  cmat diff = (pp.evolve(a, s, t).mat - pm.evolve(a, s, t).mat) / (2 * eps);
  return Operator(a.layout, std::move(diff), "fd dalpha/dlambda");
}

ResponseReport ResponseEngine::linear_response(const Operator& a, double t,
                                               const CouplingSchedule& k, double eps) const {
  const double horizon = sc_->numerics.horizon;
  const Grid g = response_grid(-horizon, t, sc_->numerics.dt);
  auto w = quad::simpson_weights(g.n_nodes, g.dt);

  ResponseReport rep;
  rep.order = 1;
  rep.epsilon = eps;
  rep.horizon = horizon;

  const bool fast = coupled_->spectral() && !sc_->coupling.time_dependent();
  cplx formula = 0;
  std::vector<double> taus(static_cast<size_t>(g.n_nodes)),
      avals(static_cast<size_t>(g.n_nodes));
  if (fast) {
    const auto& eig = coupled_->eig();
    const cmat& rho = nnes_->density(t);
    cmat gcom = blas::mul(a.mat, rho) - blas::mul(rho, a.mat);
    cmat g_q = to_basis(eig.vecs, gcom);
    const bool k_static = !k.time_dependent();
    cmat k_q, d;
    if (k_static) {
      k_q = to_basis(eig.vecs, k.static_part.mat);
      d = g_q.cwiseProduct(k_q.transpose()).transpose();
    }
    for (int j = 0; j < g.n_nodes; ++j) {
      const double tau = g.start + j * g.dt;
      if (!k_static) {
        k_q = to_basis(eig.vecs, kick_at(k, tau).mat);
        d = g_q.cwiseProduct(k_q.transpose()).transpose();
      }
      // tr(alpha(tau,t)[A,rho] k) = sum G_kl k_lk e^{i(L_k-L_l)(t-tau)}
      const cplx z = phase_pair_sum(d, eig.vals, t - tau);
      formula += w[static_cast<size_t>(j)] * z;
      taus[static_cast<size_t>(j)] = tau;
      avals[static_cast<size_t>(j)] = std::abs(z);
    }
  } else {
    const cmat& rho = nnes_->density(t);
    cmat x = blas::mul(a.mat, rho) - blas::mul(rho, a.mat);  // evolve backwards
    for (int j = g.n_nodes - 1; j >= 0; --j) {
      const double tau = g.start + j * g.dt;
      if (j < g.n_nodes - 1) {
        cmat step = coupled_->schrodinger(tau + g.dt, tau);
        x = blas::mul_adjoint_left(step, blas::mul(x, step));
      }
      const cplx z = (x.transpose().cwiseProduct(kick_at(k, tau).mat)).sum();
      formula += w[static_cast<size_t>(j)] * z;
      taus[static_cast<size_t>(j)] = tau;
      avals[static_cast<size_t>(j)] = std::abs(z);
    }
  }
  const cplx fval = I_UNIT * formula;
  rep.formula_value = fval.real();
  rep.formula_imag = fval.imag();
  rep.tail_bound = tail_bound_from_series(taus, avals, sc_->numerics.plateau_window);

  // Central finite difference with full NNES recomputation at h +- eps k.
  NnesValue base = nnes_->expect(a, t);
  Scenario plus = perturbed_scenario(*sc_, k, eps);
  Scenario minus = perturbed_scenario(*sc_, k, -eps);
  {
    Propagator fp = Propagator::free_evolution(plus);
    Propagator cp = Propagator::coupled(plus);
    NnesEngine ep(plus, fp, cp);
    NnesValue vp = ep.expect(a, t);
    Propagator fm = Propagator::free_evolution(minus);
    Propagator cm = Propagator::coupled(minus);
    NnesEngine em(minus, fm, cm);
    NnesValue vm = em.expect(a, t);
    rep.fd_value = (vp.value.real() - vm.value.real()) / (2 * eps);
    rep.fd_curvature =
        std::abs(vp.value - 2.0 * base.value + vm.value) / (eps * eps);
    rep.flagged = base.flagged || vp.flagged || vm.flagged;
  }
  rep.difference = std::abs(rep.formula_value - rep.fd_value);
  return rep;
}

ResponseReport ResponseEngine::steady_response(const Operator& a,
                                               const CouplingSchedule& k, double eps) const {
  if (sc_->coupling.time_dependent() || k.time_dependent())
    throw Error("steady_response: requires time-independent h and k");
  const double horizon = sc_->numerics.horizon;
  const Grid g = response_grid(0.0, horizon, sc_->numerics.dt);
  auto w = quad::simpson_weights(g.n_nodes, g.dt);

  ResponseReport rep;
  rep.order = 1;
  rep.epsilon = eps;
  rep.horizon = horizon;

  const auto& eig = coupled_->eig();
  const cmat& rho = nnes_->density(0.0);
  cmat gcom = blas::mul(a.mat, rho) - blas::mul(rho, a.mat);
  cmat g_q = to_basis(eig.vecs, gcom);
  cmat k_q = to_basis(eig.vecs, k.static_part.mat);
  cmat d = g_q.cwiseProduct(k_q.transpose()).transpose();

  cplx formula = 0;
  std::vector<double> ss(static_cast<size_t>(g.n_nodes)), avals(static_cast<size_t>(g.n_nodes));
  for (int j = 0; j < g.n_nodes; ++j) {
    const double s = g.start + j * g.dt;
    // rho([alpha^{-s}k, A]) = tr(alpha^s[A,rho] k)
    const cplx z = phase_pair_sum(d, eig.vals, s);
    formula += w[static_cast<size_t>(j)] * z;
    ss[static_cast<size_t>(j)] = -s;  // depth into the past, for the fit
    avals[static_cast<size_t>(j)] = std::abs(z);
  }
  const cplx fval = I_UNIT * formula;
  rep.formula_value = fval.real();
  rep.formula_imag = fval.imag();
  rep.tail_bound = tail_bound_from_series(ss, avals, sc_->numerics.plateau_window);

  ResponseReport lin = linear_response(a, 0.0, k, eps);
  rep.fd_value = lin.fd_value;
  rep.fd_curvature = lin.fd_curvature;
  rep.flagged = lin.flagged;
  rep.difference = std::abs(rep.formula_value - rep.fd_value);
  return rep;
}

cplx ResponseEngine::dyson_term(const Operator& a, double t, int order,
                                const CouplingSchedule& k) const {
  if (order < 1 || order > 3) throw Error("dyson_term: order must be 1, 2 or 3");
  const double horizon = sc_->numerics.horizon;
  const Grid g = response_grid(-horizon, t, sc_->numerics.dt);
  auto w = quad::simpson_weights(g.n_nodes, g.dt);

  const bool fast = coupled_->spectral() && !sc_->coupling.time_dependent() &&
                    !k.time_dependent();
  cplx outer = 0;
  if (fast) {
    const auto& eig = coupled_->eig();
    cmat rho_q = to_basis(eig.vecs, nnes_->density(t));
    cmat a_q = to_basis(eig.vecs, a.mat);
    cmat k_q = to_basis(eig.vecs, k.static_part.mat);
    cmat w_q = blas::mul(a_q, rho_q) - blas::mul(rho_q, a_q);  // [A, rho] for n = 1

    quad::CumulativeSimpson<cmat> cum1(g.dt), cum2(g.dt);
    // descending from tau = t
    for (int j = g.n_nodes - 1; j >= 0; --j) {
      const double tau = g.start + j * g.dt;
      cmat kt = k_q;
      phase_conjugate_inplace(kt, eig.vals, tau - t);  // alpha(t,tau)k in Q basis
      cmat m_prev;
      if (order >= 2) {
        cum1.add(blas::mul(kt, a_q) - blas::mul(a_q, kt));
        m_prev = cum1.current();
      }
      if (order >= 3) {
        cum2.add(blas::mul(kt, m_prev) - blas::mul(m_prev, kt));
        m_prev = cum2.current();
      }
      cplx z;
      if (order == 1) {
        z = (w_q.transpose().cwiseProduct(kt)).sum();  // tr([A,rho] K(tau))
      } else {
        cmat wm = blas::mul(m_prev, rho_q) - blas::mul(rho_q, m_prev);
        z = (wm.transpose().cwiseProduct(kt)).sum();
      }
      outer += w[static_cast<size_t>(j)] * z;
    }
  } else {
    // generic sweep in the t-frame with explicit unitaries
    const cmat& rho = nnes_->density(t);
    cmat w_mat = blas::mul(a.mat, rho) - blas::mul(rho, a.mat);
    quad::CumulativeSimpson<cmat> cum1(g.dt), cum2(g.dt);
    cmat u;  // U(tau, t)
    bool have_u = false;
    for (int j = g.n_nodes - 1; j >= 0; --j) {
      const double tau = g.start + j * g.dt;
      cmat km = kick_at(k, tau).mat;
      // alpha(t,tau)k = U(tau,t)^H k U(tau,t), with u = U(tau,t)
      cmat kt = have_u ? cmat(blas::mul_adjoint_left(u, blas::mul(km, u))) : km;
      cmat m_prev;
      if (order >= 2) {
        cum1.add(blas::mul(kt, a.mat) - blas::mul(a.mat, kt));
        m_prev = cum1.current();
      }
      if (order >= 3) {
        cum2.add(blas::mul(kt, m_prev) - blas::mul(m_prev, kt));
        m_prev = cum2.current();
      }
      cplx z;
      if (order == 1) {
        z = (w_mat.transpose().cwiseProduct(kt)).sum();
      } else {
        cmat wm = blas::mul(m_prev, rho) - blas::mul(rho, m_prev);
        z = (wm.transpose().cwiseProduct(kt)).sum();
      }
      outer += w[static_cast<size_t>(j)] * z;
      if (j > 0) {
        // U(tau-dt, t) = U(tau, tau-dt)^H U(tau, t)
        cmat step = coupled_->schrodinger(tau, tau - g.dt);
        u = have_u ? cmat(blas::mul_adjoint_left(step, u)) : cmat(step.adjoint());
        have_u = true;
      }
    }
  }

  double factorial = 1;
  for (int i = 2; i <= order; ++i) factorial *= i;
  cplx in = 1;
  for (int i = 0; i < order; ++i) in *= I_UNIT;
  return in * factorial * outer;
}

cplx ResponseEngine::response_intermediate(const Operator& a, double t,
                                           const CouplingSchedule& k, double s) const {
  if (!coupled_->spectral() || sc_->coupling.time_dependent())
    throw Error("response_intermediate: requires time-independent coupling");
  const Grid g = response_grid(s, t, sc_->numerics.dt);
  auto w = quad::simpson_weights(g.n_nodes, g.dt);
  const auto& eig = coupled_->eig();
  cmat a_q = to_basis(eig.vecs, a.mat);
  cmat sig_q = to_basis(eig.vecs, nnes_->sigma().density);
  const bool k_static = !k.time_dependent();
  cmat k_q;
  if (k_static) k_q = to_basis(eig.vecs, k.static_part.mat);

  cplx acc = 0;
  for (int j = 0; j < g.n_nodes; ++j) {
    const double tau = g.start + j * g.dt;
    cmat b = a_q;
    phase_conjugate_inplace(b, eig.vals, t - tau);
    if (!k_static) k_q = to_basis(eig.vecs, kick_at(k, tau).mat);
    cmat c = blas::mul(k_q, b) - blas::mul(b, k_q);
    phase_conjugate_inplace(c, eig.vals, tau - s);  // alpha(s,tau): e^{iH(tau-s)}(.)e^{-iH(tau-s)}
    acc += w[static_cast<size_t>(j)] * (sig_q.transpose().cwiseProduct(c)).sum();
  }
  return I_UNIT * acc;
}

}  // namespace nnes
