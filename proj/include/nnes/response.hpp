#pragma once

#include <memory>

#include "nnes/moller.hpp"

namespace nnes {

struct ResponseReport {
  double formula_value = 0.0;   // real part; values are real for self-adjoint A, k
  double formula_imag = 0.0;    // consistency residual, should be ~0
  double fd_value = 0.0;
  double difference = 0.0;      // |formula - fd|
  double epsilon = 0.0;
  double horizon = 0.0;
  double tail_bound = 0.0;
  double fd_curvature = 0.0;    // |v(+eps) - 2 v(0) + v(-eps)| / eps^2
  int order = 1;
  bool flagged = false;         // plateau failure in an NNES run
};

/// Scenario with coupling h + lambda*k (static parts added, drives merged).
Scenario perturbed_scenario(const Scenario& sc, const CouplingSchedule& k, double lambda);

/// Kick schedule helpers.
CouplingSchedule static_kick(const Operator& k);
CouplingSchedule enveloped_kick(const Operator& k, const EnvelopeSpec& env);

/// Response machinery for one scenario: owns the propagators and the NNES
/// engine so repeated evaluations share spectral caches.
class ResponseEngine {
 public:
  explicit ResponseEngine(const Scenario& sc);

  const NnesEngine& nnes() const { return *nnes_; }
  const Propagator& coupled() const { return *coupled_; }
  const Propagator& free_prop() const { return *free_; }
  const Scenario& scenario() const { return *sc_; }

  /// Lemma-1.2 integral at lambda = 0:
  ///   i int_s^t dtau alpha(s,tau)[k(tau), alpha(tau,t)A].
  Operator lambda_derivative(const Operator& a, double s, double t,
                             const CouplingSchedule& k) const;

  /// Central finite difference (alpha^{+eps} - alpha^{-eps})(s,t)A / (2 eps)
  /// with propagators rebuilt at lambda = +-eps (the oracle for the above).
  Operator lambda_derivative_fd(const Operator& a, double s, double t,
                                const CouplingSchedule& k, double eps = 1e-4) const;

  /// Linear response formula
  ///   i int_{-horizon}^t dtau rho_t([alpha(t,tau)k(tau), A])
  /// against a central finite difference of the NNES at h +- eps k.
  ResponseReport linear_response(const Operator& a, double t, const CouplingSchedule& k,
                                 double eps = 1e-4) const;

  /// Steady-state form (time-independent h and k):
  ///   i int_0^horizon ds rho([alpha^{-s}k, A]),
  /// with a tail bound from the integrand envelope.
  ResponseReport steady_response(const Operator& a, const CouplingSchedule& k,
                                 double eps = 1e-4) const;

  /// n-th lambda-derivative of rho_t^lambda(A) at lambda = 0 via the
  /// time-ordered simplex quadrature (n in {1,2,3}); n = 1 reproduces the
  /// linear response formula through an independent integration route.
  cplx dyson_term(const Operator& a, double t, int order, const CouplingSchedule& k) const;

  /// Eq.-(13)-type intermediate: i int_s^t dtau sigma(alpha(s,tau)[k(tau),
  /// alpha(tau,t)A]) (internal-consistency check of the proof chain).
  cplx response_intermediate(const Operator& a, double t, const CouplingSchedule& k,
                             double s) const;

 private:
  const Scenario* sc_;
  std::unique_ptr<Propagator> free_;
  std::unique_ptr<Propagator> coupled_;
  std::unique_ptr<NnesEngine> nnes_;
};

}  // namespace nnes
