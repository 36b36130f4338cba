#pragma once

#include <map>
#include <optional>

#include "nnes/evolution.hpp"
#include "nnes/plateau.hpp"
#include "nnes/states.hpp"

namespace nnes {

enum class Picture { coupled, free };

PlateauParams plateau_params(const Scenario& sc, double scale = 1.0);

/// (A5) surrogate scan: g(s) = ||[F(s), evolved(s) A]|| for s in [-horizon, 0]
/// with evolved(s) = alpha(s,0) (coupled) or breve(s,0) (free). F defaults to
/// the static coupling (h(s) when drives are present). Reports the running
/// integral, plateau/recurrence, and a power-law fit of the decay envelope.
PlateauReport a5_diagnostic(const Propagator& prop, const Operator& a, Picture picture,
                            double horizon, std::optional<Operator> f = std::nullopt,
                            std::optional<double> step = std::nullopt);

struct MollerResult {
  Operator value;           // plateau-window average of the echo composite
  PlateauReport report;
  double sigma_triviality = std::numeric_limits<double>::quiet_NaN();
  cmat reduced;             // partial_trace_sigma of `value` (moller_plus)
  double observable_norm = 0.0;
};

/// Moller-plus approximant: scans breve(t,s) alpha(s,t) A on a decreasing
/// s-grid until plateau or recurrence; the plateau-window average stands in
/// for omega_t^+ A. The Sigma-triviality residual
/// ||value - 1_0 (x) ptr_Sigma(value)|| is reported when a plateau exists.
MollerResult moller_plus(const Propagator& free_p, const Propagator& coupled_p,
                         const Operator& a, double t);

/// Moller-minus approximant from 1_0 (x) A_>: alpha(t,s) breve(s,t) (1 (x) A_>).
MollerResult moller_minus(const Propagator& free_p, const Propagator& coupled_p,
                          const cmat& a_reservoir, double t);

// ---------------------------------------------------------------------------
// Natural nonequilibrium state machinery (Eq.-(9)-type quadrature with an
// absolute past cutoff s_min = -horizon shared by all evaluation times).
// ---------------------------------------------------------------------------

struct NnesValue {
  cplx value;              // full-horizon quadrature value
  cplx sigma_expect;       // sigma(A)
  double uncertainty = 0;  // plateau window variation + tail estimate
  bool flagged = false;    // no plateau before recurrence
  PlateauReport report;    // monitored = running value Re/abs curve
};

class NnesEngine {
 public:
  NnesEngine(const Scenario& sc, const Propagator& free_p, const Propagator& coupled_p);
  NnesEngine(const Scenario& sc, const Propagator& free_p, const Propagator& coupled_p,
             const Sigma0Choice& sigma0);

  /// rho_t(A) = sigma(A) + i int_{-horizon}^t du sigma([h(u), alpha(u,t)A]),
  /// composite Simpson on the dt grid, running-value plateau scan included.
  NnesValue expect(const Operator& a, double t) const;

  /// sigma(alpha(s,t)A): the brute-force comparator (pre-limit form).
  cplx oracle(const Operator& a, double t, double s) const;
  cplx oracle(const Operator& a, double t, double s, const Sigma0Choice& sigma0) const;

  /// Density-matrix form of the same Simpson quadrature:
  /// rho_hat_t = sigma + i sum_j w_j U(t,u_j)[sigma, h(u_j)] U(t,u_j)^H,
  /// so that tr(rho_hat_t A) reproduces expect(A, t) up to round-off.
  /// Cached per evaluation time.
  const cmat& density(double t) const;

  const StateFunctional& sigma() const { return sigma_; }
  const Scenario& scenario() const { return *sc_; }
  const Propagator& coupled() const { return *coupled_; }
  const Propagator& free_prop() const { return *free_; }

 private:
  const Scenario* sc_;
  const Propagator* free_;
  const Propagator* coupled_;
  StateFunctional sigma_;

  mutable std::mutex mu_;
  mutable std::map<long long, cmat> densities_;
  mutable std::unique_ptr<cmat> comm_sigma_h_eig_;  // [sigma, h] in the coupled eigenbasis
  mutable std::unique_ptr<cmat> sigma_eig_;

  const cmat& comm_sigma_h_eig() const;
  const cmat& sigma_eig() const;
};

}  // namespace nnes
