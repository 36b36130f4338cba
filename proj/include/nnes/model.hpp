#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nnes/operator.hpp"

namespace nnes {

enum class ChainModel { xy, xxz, transverse_ising };

ChainModel chain_model_from_string(const std::string& s);

/// One reservoir: a finite nearest-neighbour spin chain at inverse
/// temperature beta. Site 0 is the boundary site coupled to Sigma.
struct ReservoirSpec {
  int length = 1;
  int site_dim = 2;
  ChainModel model = ChainModel::xy;
  std::map<std::string, double> params;
  double beta = 1.0;
};

/// Chain Hamiltonian on the reservoir's own factor space (open boundary).
/// xy: jx SxSx + jy SySy + hz sum Sz;  xxz: jxy (SxSx+SySy) + jz SzSz + hz;
/// transverse_ising: j SzSz + hx sum Sx.
cmat chain_hamiltonian(const ReservoirSpec& spec);

struct EnvelopeSpec {
  enum class Kind { constant, sinusoid, smooth_step };
  Kind kind = Kind::constant;
  double value = 0.0;      // constant
  double amplitude = 0.0;  // sinusoid / smooth_step
  double omega = 0.0;      // sinusoid
  double phase = 0.0;      // sinusoid
  double t0 = 0.0;         // smooth_step
  double width = 1.0;      // smooth_step

  double operator()(double t) const;
  double sup_abs() const;
};

struct CouplingTerm {
  Operator op;  // self-adjoint, supported on Sigma and/or one boundary site
  EnvelopeSpec envelope;
};

/// h(t) = static_part + sum_i envelope_i(t) * term_i. Constant envelopes are
/// folded into static_part at build time.
struct CouplingSchedule {
  Operator static_part;
  std::vector<CouplingTerm> drive;
  double sup_norm_bound = 0.0;

  bool time_dependent() const { return !drive.empty(); }
  Operator at(double t) const;
};

Operator coupling_at(const CouplingSchedule& schedule, double t);

struct Numerics {
  double dt = 0.01;
  double horizon = 8.0;          // absolute past cutoff: s_min = -horizon
  double plateau_window = 5.0;   // trailing window (time units)
  double plateau_step = 0.25;    // s-grid spacing for plateau scans
  double tol_quad = 1e-6;
  double tol_exact = 1e-10;
  double tol_plateau = 1e-4;     // relative
};

struct Sigma0Choice {
  enum class Kind { maximally_mixed, gibbs };
  Kind kind = Kind::maximally_mixed;
  double beta = 1.0;  // for gibbs
};

struct Scenario {
  LayoutPtr layout;
  cmat h_sys;                    // n x n
  std::vector<ReservoirSpec> reservoirs;
  std::vector<cmat> reservoir_h;  // chain Hamiltonians, one per reservoir factor
  Operator h_free;                // embedded H_sys + sum_a H_a
  CouplingSchedule coupling;
  Numerics numerics;
  Sigma0Choice sigma0;

  int sigma_dim() const { return layout->sigma_dim(); }
  double beta(int reservoir) const {
    return reservoirs.at(static_cast<size_t>(reservoir)).beta;
  }
  /// Local free Hamiltonian of subsystem a (a=0: Sigma).
  const cmat& local_free(int a) const;
};

/// Build a Scenario from the declarative JSON document described in the
/// README. Throws Error on schema violations, non-Hermitian user matrices,
/// and coupling terms with support outside Sigma + boundary sites.
Scenario build_scenario(const nlohmann::json& config);
Scenario load_scenario(const std::string& path);

/// Matrices serialize row-major with complex entries as [re, im] pairs.
nlohmann::json matrix_to_json(const cmat& m);
cmat matrix_from_json(const nlohmann::json& j);

}  // namespace nnes
