#pragma once

#include "nnes/types.hpp"

namespace nnes {

/// Spin operators for a site of dimension d (spin s = (d-1)/2).
struct SpinOps {
  cmat sx, sy, sz, sp, sm, id;
};

SpinOps spin_ops(int site_dim);

// Pauli matrices (= 2 * spin-1/2 operators).
cmat pauli_x();
cmat pauli_y();
cmat pauli_z();
cmat pauli(char axis);  // 'x', 'y', 'z', 'i'

}  // namespace nnes
