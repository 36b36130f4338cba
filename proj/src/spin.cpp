#include "nnes/spin.hpp"

#include <cmath>

namespace nnes {

SpinOps spin_ops(int d) {
  if (d < 2) throw Error("spin_ops: site dimension must be >= 2");
  const double s = (d - 1) / 2.0;
  SpinOps ops;
  ops.sz = cmat::Zero(d, d);
  ops.sp = cmat::Zero(d, d);
  for (int k = 0; k < d; ++k) ops.sz(k, k) = s - k;  // m = s, s-1, ..., -s
  for (int k = 1; k < d; ++k) {
    const double m = s - k;  // raising from |m> to |m+1>
    ops.sp(k - 1, k) = std::sqrt(s * (s + 1) - m * (m + 1));
  }
  ops.sm = ops.sp.adjoint();
  ops.sx = 0.5 * (ops.sp + ops.sm);
  ops.sy = cplx(0, -0.5) * (ops.sp - ops.sm);
  ops.id = cmat::Identity(d, d);
  return ops;
}

cmat pauli_x() {
  cmat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

cmat pauli_y() {
  cmat m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

cmat pauli_z() {
  cmat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

cmat pauli(char axis) {
  switch (axis) {
    case 'x': return pauli_x();
    case 'y': return pauli_y();
    case 'z': return pauli_z();
    case 'i': return cmat::Identity(2, 2);
    default: throw Error("pauli: unknown axis");
  }
}

}  // namespace nnes
