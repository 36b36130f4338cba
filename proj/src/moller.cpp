#include "nnes/moller.hpp"

#include <cmath>

#include "nnes/quadrature.hpp"

namespace nnes {

PlateauParams plateau_params(const Scenario& sc, double scale) {
  PlateauParams p;
  p.tol_rel = sc.numerics.tol_plateau;
  p.window = sc.numerics.plateau_window;
  p.scale = scale;
  return p;
}

namespace {

void finish_report_fit(PlateauReport& rep, double step, double window) {
  auto env = local_maxima(rep.s, rep.g);
  const double s_hi = rep.plateau_detected || !std::isfinite(rep.recurrence_onset)
                          ? (rep.s.empty() ? 0.0 : std::abs(rep.s.back()))
                          : std::abs(rep.recurrence_onset);
  rep.fit_exponent = fit_power_law(env, std::max(0.5, 2 * step), s_hi);
  double g_end = 0;
  const int env_win = std::max<int>(2, static_cast<int>(std::lround(window / (2 * step))));
  for (int i = std::max<int>(0, static_cast<int>(rep.g.size()) - env_win);
       i < static_cast<int>(rep.g.size()); ++i)
    g_end = std::max(g_end, rep.g[static_cast<size_t>(i)]);
  rep.tail_estimate =
      rep.s.empty() ? 0.0 : tail_from_fit(g_end, rep.s.back(), rep.fit_exponent, window);
}

}  // namespace

PlateauReport a5_diagnostic(const Propagator& prop, const Operator& a, Picture picture,
                            double horizon, std::optional<Operator> f,
                            std::optional<double> step_opt) {
  const Scenario& sc = prop.scenario();
  if ((picture == Picture::free) != (prop.kind() == Propagator::Kind::free))
    throw Error("a5_diagnostic: propagator kind does not match requested picture");
  const double step = step_opt.value_or(sc.numerics.plateau_step);
  const int n_samples = std::max(2, static_cast<int>(std::lround(horizon / step)) + 1);

  PlateauParams params = plateau_params(sc, std::max(1e-300, op_norm(a)));
  PlateauMonitor monitor(params, step);
  quad::CumulativeSimpson<double> integral(step);

  // Spectral shortcut: keep A in the eigenbasis, rotate back per sample.
  const bool fast = prop.spectral();
  cmat a_eig;
  if (fast) a_eig = to_basis(prop.eig().vecs, a.mat);

  PlateauReport rep;
  for (int k = 0; k < n_samples; ++k) {
    const double s = -k * step;
    Operator evolved =
        fast ? Operator(a.layout,
                        [&] {
                          cmat b = a_eig;
                          phase_conjugate_inplace(b, prop.eig().vals, -s);
                          return from_basis(prop.eig().vecs, b);
                        }())
             : prop.evolve(a, s, 0.0);
    Operator fk = f ? *f : sc.coupling.at(s);
    const double g = op_norm(commutator(fk, evolved));
    integral.add(g);
    monitor.add(s, g, integral.current());  // full-range diagnostic: no early stop
  }

  rep.s = monitor.svals();
  rep.g = monitor.gvals();
  rep.monitored = monitor.monitored();
  rep.running_integral = monitor.monitored();
  rep.plateau_detected = monitor.plateau();
  rep.plateau_index = monitor.plateau_index();
  if (rep.plateau_detected)
    rep.plateau_value = rep.running_integral[static_cast<size_t>(rep.plateau_index)];
  else if (!rep.running_integral.empty())
    rep.plateau_value = rep.running_integral.back();
  rep.recurrence_onset = monitor.recurrence_onset();
  rep.flagged = !rep.plateau_detected && monitor.recurrence();
  finish_report_fit(rep, step, sc.numerics.plateau_window);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

struct ScanOut {
  cmat average;  // in scan basis
  PlateauReport report;
  bool plateau;
  int index;
};

// Shared moller scan: samples W~(s_k) in a fixed basis, watches the
// per-sample drift ||W_k - W_{k-1}||, declares a plateau when every drift in
// the trailing window stays below tol*scale/(window samples), so the window
// variation is below tol*scale. g is reported as drift/step (it approximates
// ||[h(s), alpha(s,t)A]||, the exact |dW/ds|).
template <class Sampler>
ScanOut moller_scan(const Scenario& sc, Sampler&& sample_w, double t, double norm_a) {
  const double step = sc.numerics.plateau_step;
  const int n_samples =
      std::max(2, static_cast<int>(std::lround(sc.numerics.horizon / step)) + 1);
  const int win = std::max(2, static_cast<int>(std::lround(sc.numerics.plateau_window / step)) + 1);

  PlateauParams params = plateau_params(sc, norm_a);
  params.tol_rel /= static_cast<double>(win - 1);
  params.criterion = PlateauParams::Criterion::below_threshold;
  PlateauMonitor monitor(params, step);
  quad::CumulativeSimpson<double> integral(step);

  std::vector<cmat> ring;  // trailing window of W~ samples
  cmat prev;
  ScanOut out;
  int stop_index = -1;
  for (int k = 0; k < n_samples; ++k) {
    const double s = t - k * step;
    cmat w = sample_w(s);
    double drift = (k == 0) ? 0.0 : blas::spectral_norm(w - prev, 1e-8);
    prev = w;
    ring.push_back(std::move(w));
    if (static_cast<int>(ring.size()) > win) ring.erase(ring.begin());

    const double g = (k == 0) ? 0.0 : drift / step;
    integral.add(g);
    bool go = monitor.add(s, g, k == 0 ? 0.0 : drift);
    if (!go) {
      stop_index = k;
      break;
    }
  }

  out.plateau = monitor.plateau();
  out.index = stop_index < 0 ? n_samples - 1 : stop_index;
  cmat avg = ring[0];
  for (size_t i = 1; i < ring.size(); ++i) avg += ring[i];
  out.average = avg / static_cast<double>(ring.size());

  PlateauReport& rep = out.report;
  rep.s = monitor.svals();
  rep.g = monitor.gvals();
  rep.monitored = monitor.monitored();
  // running integral of g (= accumulated drift bound)
  {
    quad::CumulativeSimpson<double> ri(step);
    rep.running_integral.clear();
    for (double g : rep.g) {
      ri.add(g);
      rep.running_integral.push_back(ri.current());
    }
  }
  rep.plateau_detected = monitor.plateau();
  rep.plateau_index = monitor.plateau_index();
  if (!rep.running_integral.empty())
    rep.plateau_value = rep.plateau_detected
                            ? rep.running_integral[static_cast<size_t>(rep.plateau_index)]
                            : rep.running_integral.back();
  rep.recurrence_onset = monitor.recurrence_onset();
  rep.flagged = !monitor.plateau();
  finish_report_fit(rep, step, sc.numerics.plateau_window);
  return out;
}

}  // namespace

MollerResult moller_plus(const Propagator& free_p, const Propagator& coupled_p,
                         const Operator& a, double t) {
  const Scenario& sc = coupled_p.scenario();
  const double norm_a = std::max(1e-300, op_norm(a));
  const bool fast = free_p.spectral() && coupled_p.spectral() &&
                    !sc.coupling.time_dependent();

  MollerResult res;
  res.observable_norm = norm_a;

  if (fast) {
    // W~(s) in the free eigenbasis:
    //   D_M(tau) R (E_Lambda(tau) o A~) R^H D_M(tau)^H,  tau = t - s.
    const auto& fe = free_p.eig();
    const auto& ce = coupled_p.eig();
    cmat r = blas::mul_adjoint_left(fe.vecs, ce.vecs);
    cmat a_q = to_basis(ce.vecs, a.mat);
    auto sampler = [&](double s) {
      const double tau = t - s;
      cmat b = a_q;
      phase_conjugate_inplace(b, ce.vals, tau);
      cmat w = blas::mul_adjoint_right(blas::mul(r, b), r);
      phase_conjugate_inplace(w, fe.vals, -tau);
      return w;
    };
    ScanOut scan = moller_scan(sc, sampler, t, norm_a);
    // Sigma-triviality residual in the product eigenbasis (the free basis is
    // a product of per-factor rotations, so the Sigma partial trace commutes
    // with the basis change).
    Operator w_basis(a.layout, scan.average);
    cmat red = partial_trace_sigma(w_basis);
    res.sigma_triviality = blas::spectral_norm(
        scan.average - kron(cmat::Identity(sc.sigma_dim(), sc.sigma_dim()), red), 1e-8);
    // rotate back to the original basis
    res.value = Operator(a.layout, from_basis(fe.vecs, scan.average),
                         "moller_plus(" + a.label + ")");
    cmat p_res = cmat::Identity(1, 1);
    for (int f = 1; f < sc.layout->factors(); ++f)
      p_res = kron(p_res, free_p.factor_eig(f).vecs);
    res.reduced = from_basis(p_res, red);
    res.report = std::move(scan.report);
  } else {
    auto sampler = [&](double s) { return echo_plus(free_p, coupled_p, a, t, s).mat; };
    ScanOut scan = moller_scan(sc, sampler, t, norm_a);
    res.value = Operator(a.layout, scan.average, "moller_plus(" + a.label + ")");
    res.reduced = partial_trace_sigma(res.value);
    res.sigma_triviality = op_norm(res.value - sigma_average(res.value));
    res.report = std::move(scan.report);
  }
  return res;
}

MollerResult moller_minus(const Propagator& free_p, const Propagator& coupled_p,
                          const cmat& a_reservoir, double t) {
  const Scenario& sc = coupled_p.scenario();
  Operator start = embed_reservoir_part(a_reservoir, sc.layout);
  const double norm_a = std::max(1e-300, op_norm(start));
  const bool fast = free_p.spectral() && coupled_p.spectral() &&
                    !sc.coupling.time_dependent();

  MollerResult res;
  res.observable_norm = norm_a;

  if (fast) {
    // W~(s) in the coupled eigenbasis:
    //   D_Lambda(-tau) R^H (E_M(tau) o X~_Pf) R D_Lambda(-tau)^H.
    const auto& fe = free_p.eig();
    const auto& ce = coupled_p.eig();
    cmat r = blas::mul_adjoint_left(fe.vecs, ce.vecs);
    cmat x_pf = to_basis(fe.vecs, start.mat);
    auto sampler = [&](double s) {
      const double tau = t - s;
      cmat b = x_pf;
      phase_conjugate_inplace(b, fe.vals, tau);
      cmat w = blas::mul(blas::mul_adjoint_left(r, b), r);
      phase_conjugate_inplace(w, ce.vals, -tau);
      return w;
    };
    ScanOut scan = moller_scan(sc, sampler, t, norm_a);
    res.value = Operator(sc.layout, from_basis(ce.vecs, scan.average), "moller_minus");
    res.reduced = partial_trace_sigma(res.value);
    res.report = std::move(scan.report);
  } else {
    auto sampler = [&](double s) { return echo_minus(free_p, coupled_p, start, t, s).mat; };
    ScanOut scan = moller_scan(sc, sampler, t, norm_a);
    res.value = Operator(sc.layout, scan.average, "moller_minus");
    res.reduced = partial_trace_sigma(res.value);
    res.report = std::move(scan.report);
  }
  return res;
}

// ---------------------------------------------------------------------------

NnesEngine::NnesEngine(const Scenario& sc, const Propagator& free_p,
                       const Propagator& coupled_p)
    : NnesEngine(sc, free_p, coupled_p, sc.sigma0) {}

NnesEngine::NnesEngine(const Scenario& sc, const Propagator& free_p,
                       const Propagator& coupled_p, const Sigma0Choice& sigma0)
    : sc_(&sc), free_(&free_p), coupled_(&coupled_p),
      sigma_(product_state(sc, sigma0)) {}

const cmat& NnesEngine::comm_sigma_h_eig() const {
  std::lock_guard<std::mutex> lock(mu_);
  if (!comm_sigma_h_eig_) {
    const cmat& h = sc_->coupling.static_part.mat;
    cmat c = blas::mul(sigma_.density, h) - blas::mul(h, sigma_.density);
    comm_sigma_h_eig_ = std::make_unique<cmat>(to_basis(coupled_->eig().vecs, c));
  }
  return *comm_sigma_h_eig_;
}

const cmat& NnesEngine::sigma_eig() const {
  std::lock_guard<std::mutex> lock(mu_);
  if (!sigma_eig_)
    sigma_eig_ = std::make_unique<cmat>(to_basis(coupled_->eig().vecs, sigma_.density));
  return *sigma_eig_;
}

NnesValue NnesEngine::expect(const Operator& a, double t) const {
  const double horizon = sc_->numerics.horizon;
  const double span = t + horizon;
  if (span <= 0) throw Error("NnesEngine::expect: evaluation time before the past cutoff");
  long n_int = std::llround(span / sc_->numerics.dt);
  if (n_int % 2 != 0) ++n_int;
  n_int = std::max<long>(2, n_int);
  const double dt = span / static_cast<double>(n_int);
  const int n_nodes = static_cast<int>(n_int) + 1;

  const bool fast = coupled_->spectral() && !sc_->coupling.time_dependent();
  const double norm_a = std::max(1e-300, op_norm(a));

  NnesValue out;
  out.sigma_expect = sigma_.expect(a);

  // Node contributions c_j = sigma([h(u_j), alpha(u_j, t)A]), descending from
  // u = t so the running value v(s) = sigma(A) + i int_s^t is a plateau scan.
  std::vector<cplx> contrib(static_cast<size_t>(n_nodes));
  cmat d;              // fast path: D_kl = C_kl A~_lk
  cmat a_q;
  cmat y;              // stepped path frame
  if (fast) {
    a_q = to_basis(coupled_->eig().vecs, a.mat);
    const cmat& c = comm_sigma_h_eig();
    d = c.cwiseProduct(a_q.transpose());
  } else {
    y = a.mat;
  }

  const rvec* vals = fast ? &coupled_->eig().vals : nullptr;
  for (int j = 0; j < n_nodes; ++j) {
    const double u = t - j * dt;  // descending
    if (fast) {
      contrib[static_cast<size_t>(j)] = phase_pair_sum(d, *vals, t - u);
    } else {
      if (j > 0) {
        const double u_prev = t - (j - 1) * dt;
        cmat step = coupled_->schrodinger(u_prev, u);
        y = blas::mul_adjoint_left(step, blas::mul(y, step));
      }
      cmat h = sc_->coupling.at(u).mat;
      cmat c = blas::mul(sigma_.density, h) - blas::mul(h, sigma_.density);
      contrib[static_cast<size_t>(j)] = (c.transpose().cwiseProduct(y)).sum();
    }
  }

  // Plateau scan over the running value.
  PlateauParams params = plateau_params(*sc_, norm_a);
  const int env_win =
      std::max(2, static_cast<int>(std::lround(sc_->numerics.plateau_window / (2 * dt))));
  RecurrenceTracker tracker(params.recurrence_factor, env_win);
  quad::CumulativeSimpson<cplx> cum(dt);
  std::vector<double> vabs;
  std::vector<cplx> vrun;
  for (int j = 0; j < n_nodes; ++j) {
    cum.add(contrib[static_cast<size_t>(j)]);
    const cplx v = out.sigma_expect + I_UNIT * cum.current();
    vrun.push_back(v);
    vabs.push_back(std::abs(v));
    tracker.add(t - j * dt, std::abs(contrib[static_cast<size_t>(j)]));
  }
  // window variation of the complex running value
  const int win = std::max(2, static_cast<int>(std::lround(sc_->numerics.plateau_window / dt)) + 1);
  int plateau_idx = -1;
  double variation_at_plateau = 0;
  for (int k = win - 1; k < n_nodes; ++k) {
    cplx mean = 0;
    for (int i = k - win + 1; i <= k; ++i) mean += vrun[static_cast<size_t>(i)];
    mean /= static_cast<double>(win);
    double dev = 0;
    for (int i = k - win + 1; i <= k; ++i)
      dev = std::max(dev, std::abs(vrun[static_cast<size_t>(i)] - mean));
    if (2 * dev <= params.tol_rel * params.scale) {
      plateau_idx = k;
      variation_at_plateau = 2 * dev;
      break;
    }
  }

  auto w = quad::simpson_weights(n_nodes, dt);
  cplx integral = 0;
  for (int j = 0; j < n_nodes; ++j)
    integral += w[static_cast<size_t>(j)] * contrib[static_cast<size_t>(j)];
  out.value = out.sigma_expect + I_UNIT * integral;

  PlateauReport& rep = out.report;
  rep.s.resize(static_cast<size_t>(n_nodes));
  rep.g.resize(static_cast<size_t>(n_nodes));
  rep.running_integral.resize(static_cast<size_t>(n_nodes));
  for (int j = 0; j < n_nodes; ++j) {
    rep.s[static_cast<size_t>(j)] = t - j * dt;
    rep.g[static_cast<size_t>(j)] = std::abs(contrib[static_cast<size_t>(j)]);
  }
  {
    quad::CumulativeSimpson<double> ri(dt);
    for (int j = 0; j < n_nodes; ++j) {
      ri.add(rep.g[static_cast<size_t>(j)]);
      rep.running_integral[static_cast<size_t>(j)] = ri.current();
    }
  }
  rep.monitored = std::move(vabs);
  rep.plateau_detected = plateau_idx >= 0;
  rep.plateau_index = plateau_idx;
  if (plateau_idx >= 0)
    rep.plateau_value = rep.monitored[static_cast<size_t>(plateau_idx)];
  rep.recurrence_onset = tracker.onset();
  rep.flagged = plateau_idx < 0;
  finish_report_fit(rep, dt, sc_->numerics.plateau_window);

  out.flagged = rep.flagged;
  out.uncertainty = variation_at_plateau + rep.tail_estimate;
  if (plateau_idx < 0 && !vrun.empty()) {
    // no plateau: report the trailing window variation as the uncertainty
    cplx mean = 0;
    int k0 = std::max(0, n_nodes - win);
    for (int i = k0; i < n_nodes; ++i) mean += vrun[static_cast<size_t>(i)];
    mean /= static_cast<double>(n_nodes - k0);
    double dev = 0;
    for (int i = k0; i < n_nodes; ++i)
      dev = std::max(dev, std::abs(vrun[static_cast<size_t>(i)] - mean));
    out.uncertainty = 2 * dev + rep.tail_estimate;
  }
  return out;
}

cplx NnesEngine::oracle(const Operator& a, double t, double s) const {
  const bool fast = coupled_->spectral() && !sc_->coupling.time_dependent();
  if (fast) {
    cmat a_q = to_basis(coupled_->eig().vecs, a.mat);
    cmat d = sigma_eig().cwiseProduct(a_q.transpose());
    return phase_pair_sum(d, coupled_->eig().vals, t - s);
  }
  return sigma_.expect(coupled_->evolve(a, s, t));
}

cplx NnesEngine::oracle(const Operator& a, double t, double s,
                        const Sigma0Choice& sigma0) const {
  StateFunctional sig = product_state(*sc_, sigma0);
  return sig.expect(coupled_->evolve(a, s, t));
}

const cmat& NnesEngine::density(double t) const {
  const long long key = std::llround(t * 1e9);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = densities_.find(key);
    if (it != densities_.end()) return it->second;
  }

  const double horizon = sc_->numerics.horizon;
  const double span = t + horizon;
  if (span <= 0) throw Error("NnesEngine::density: evaluation time before the past cutoff");
  long n_int = std::llround(span / sc_->numerics.dt);
  if (n_int % 2 != 0) ++n_int;
  n_int = std::max<long>(2, n_int);
  const double dt = span / static_cast<double>(n_int);
  const int n_nodes = static_cast<int>(n_int) + 1;
  auto w = quad::simpson_weights(n_nodes, dt);

  const bool fast = coupled_->spectral() && !sc_->coupling.time_dependent();
  cmat rho;
  if (fast) {
    const cmat& c = comm_sigma_h_eig();
    const rvec& vals = coupled_->eig().vals;
    const Eigen::Index n = c.rows();
    cmat acc = cmat::Zero(n, n);
    cvec p(n);
    for (int j = 0; j < n_nodes; ++j) {
      const double tau = t - (-horizon + j * dt);
      for (Eigen::Index k = 0; k < n; ++k) p(k) = std::exp(cplx(0, vals(k) * tau));
      acc.noalias() +=
          w[static_cast<size_t>(j)] * (p.conjugate().asDiagonal() * c * p.asDiagonal());
    }
    rho = sigma_.density + I_UNIT * from_basis(coupled_->eig().vecs, acc);
  } else {
    // ascending pass: m(u_{k+1}) = S (m(u_k) + w_k C(u_k)) S^H
    cmat m = cmat::Zero(sigma_.density.rows(), sigma_.density.cols());
    for (int j = 0; j < n_nodes; ++j) {
      const double u = -horizon + j * dt;
      cmat h = sc_->coupling.at(u).mat;
      cmat c = blas::mul(sigma_.density, h) - blas::mul(h, sigma_.density);
      m += w[static_cast<size_t>(j)] * c;
      if (j + 1 < n_nodes) {
        cmat step = coupled_->schrodinger(u + dt, u);
        m = blas::mul(step, blas::mul_adjoint_right(m, step));
      }
    }
    rho = sigma_.density + I_UNIT * m;
  }

  std::lock_guard<std::mutex> lock(mu_);
  return densities_.emplace(key, std::move(rho)).first->second;
}

}  // namespace nnes
