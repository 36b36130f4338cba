#include "nnes/quadrature.hpp"

namespace nnes::quad {

std::vector<double> simpson_weights(int n_nodes, double dt) {
  if (n_nodes < 1) throw Error("simpson_weights: need at least one node");
  std::vector<double> w(static_cast<size_t>(n_nodes), 0.0);
  const int m = n_nodes - 1;
  if (m == 0) return w;
  if (m == 1) {
    w[0] = w[1] = dt / 2.0;
    return w;
  }
  const int m_even = (m % 2 == 0) ? m : m - 1;
  for (int k = 0; k + 2 <= m_even; k += 2) {
    w[static_cast<size_t>(k)] += dt / 3.0;
    w[static_cast<size_t>(k + 1)] += 4.0 * dt / 3.0;
    w[static_cast<size_t>(k + 2)] += dt / 3.0;
  }
  if (m % 2 != 0) {
    w[static_cast<size_t>(m - 2)] += -dt / 12.0;
    w[static_cast<size_t>(m - 1)] += 8.0 * dt / 12.0;
    w[static_cast<size_t>(m)] += 5.0 * dt / 12.0;
  }
  return w;
}

}  // namespace nnes::quad
