#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "nnes/blas.hpp"
#include "nnes/model.hpp"
#include "nnes/operator.hpp"

namespace nnes {

/// V^H A V  (into the eigenbasis given by columns of V).
cmat to_basis(const cmat& v, const cmat& a);
/// V A V^H.
cmat from_basis(const cmat& v, const cmat& a);
/// A_kl *= e^{i(vals_k - vals_l) tau}  — Heisenberg phases in an eigenbasis.
void phase_conjugate_inplace(cmat& a_eig, const rvec& vals, double tau);
/// e^{iH tau} A e^{-iH tau} given the eigendecomposition of H.
cmat spectral_heisenberg(const blas::HermEig& eig, const cmat& a, double tau);
/// sum_{kl} D_kl e^{i(vals_l - vals_k) tau}  via phase vectors (n^2 cost).
cplx phase_pair_sum(const cmat& d, const rvec& vals, double tau);

/// Two-parameter Heisenberg evolution family. The free kind is the product
/// group alpha-breve(t,s) = breve^{s-t}; the coupled kind is
/// alpha(t,s) = (alpha^t)^{-1} alpha^s generated by H(u) = H_free + h(u).
///
/// Time-independent coupling uses one cached eigendecomposition (the stepped
/// midpoint product collapses to it exactly); time-dependent coupling uses a
/// time-ordered product of midpoint-rule factors on the dt grid, with
/// factor and eigendecomposition caches. Caches are write-once behind a
/// mutex; evaluation is safe to call concurrently.
class Propagator {
 public:
  enum class Kind { free, coupled };

  static Propagator free_evolution(const Scenario& sc);
  static Propagator coupled(const Scenario& sc);
  /// Coupled evolution forced onto the stepped path even for static h
  /// (used to test the stepper against the spectral oracle).
  static Propagator coupled_stepped(const Scenario& sc);

  Kind kind() const { return kind_; }
  const Scenario& scenario() const { return *sc_; }
  bool spectral() const { return spectral_; }
  double dt() const { return sc_->numerics.dt; }

  /// alpha(t,s)A. alpha(t,t) = A; cocycle alpha(t,s) alpha(s,r) = alpha(t,r).
  Operator evolve(const Operator& a, double t, double s) const;
  /// alpha^t A = alpha(0,t)A.
  Operator group(const Operator& a, double t) const;

  /// Schroedinger propagator U(to,from) (time-ordered exponential).
  cmat schrodinger(double to, double from) const;

  /// Full-space eigendecomposition (spectral kinds only).
  const blas::HermEig& eig() const;

  /// Per-factor eigendecomposition / local evolution (free kind only).
  const blas::HermEig& factor_eig(int a) const;
  /// breve_a(t,s) applied to a matrix on subsystem a's own factor space.
  cmat evolve_local(const cmat& local, int a, double t, double s) const;

  /// Step factor U(x+w, x) of the midpoint rule (stepped path).
  cmat step_factor(double x, double w) const;

 private:
  Propagator(const Scenario& sc, Kind kind, bool force_stepped);

  const Scenario* sc_;
  Kind kind_;
  bool spectral_;

  struct Cache;
  std::shared_ptr<Cache> cache_;
};

// ---------------------------------------------------------------------------
// Echo composites (the pre-limits of the Moller morphisms) and their
// integral-equation forms, used as mutual cross-checks.
// ---------------------------------------------------------------------------

/// breve(t,s) alpha(s,t) A   (direct composition of the two propagators).
Operator echo_plus(const Propagator& free_p, const Propagator& coupled_p,
                   const Operator& a, double t, double s);

/// alpha(t,s) breve(s,t) A.
Operator echo_minus(const Propagator& free_p, const Propagator& coupled_p,
                    const Operator& a, double t, double s);

/// Integral form  A + i int_s^t du breve(t,u)[h(u), alpha(u,t)A]  by
/// composite Simpson on the dt grid.
Operator echo_plus_quadrature(const Propagator& free_p, const Propagator& coupled_p,
                              const Operator& a, double t, double s);

/// Integral form  A - i int_s^t du alpha(t,u)[h(u), breve(u,t)A].
Operator echo_minus_quadrature(const Propagator& free_p, const Propagator& coupled_p,
                               const Operator& a, double t, double s);

/// Analytic derivative of t' -> breve(s,t') alpha(t',s) A:
///   -i breve(s,t')[h(t'), alpha(t',s)A].
Operator echo_plus_derivative_rhs(const Propagator& free_p, const Propagator& coupled_p,
                                  const Operator& a, double s, double tprime);

/// Analytic derivative of t' -> alpha(s,t') breve(t',s) A:
///   +i alpha(s,t')[h(t'), breve(t',s)A].
Operator echo_minus_derivative_rhs(const Propagator& free_p, const Propagator& coupled_p,
                                   const Operator& a, double s, double tprime);

}  // namespace nnes
