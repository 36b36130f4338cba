#pragma once

#include <cstdint>
#include <string>

#include "nnes/model.hpp"

namespace nnes {

/// Pauli on one site of a subsystem (site_dim 2 required there).
Operator site_pauli(const Scenario& sc, int subsystem, int site, char axis);

/// Energy current observable i[H_a, h_static] for reservoir a (positive
/// values: energy leaving the reservoir). Only the boundary terms of H_a
/// contribute; the rest commutes with the coupling.
Operator energy_current(const Scenario& sc, int reservoir);

/// Unit-norm random Hermitian operator from a seeded generator.
Operator random_hermitian(LayoutPtr layout, std::uint64_t seed);

/// Observable from a spec string:
///   pauli:sigma:<x|y|z>      Pauli on Sigma (dim 2)
///   pauli:r<a>:<site>:<x|y|z>  Pauli on reservoir a, given site
///   current:<a>              energy current of reservoir a
///   random:<index>           seeded random Hermitian (seed ^ index)
///   custom:<path>            dense matrix from a JSON file (full space)
Operator build_observable(const Scenario& sc, const std::string& spec, std::uint64_t seed);

}  // namespace nnes
