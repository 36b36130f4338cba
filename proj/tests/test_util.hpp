#pragma once

#include <random>

#include <nlohmann/json.hpp>

#include "nnes/model.hpp"
#include "nnes/operator.hpp"
#include "nnes/spin.hpp"

namespace nnes::test {

inline cmat random_cmat(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  cmat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

inline cmat random_hermitian_mat(int n, std::uint64_t seed) {
  cmat m = random_cmat(n, seed);
  return 0.5 * (m + m.adjoint());
}

inline double max_abs_diff(const cmat& a, const cmat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// n=2 Sigma + one XY reservoir, static sigma_x x sigma_x boundary coupling.
// Total dimension 2^(length+1).
inline nlohmann::json tiny_config(int length = 2, double g = 0.2, double j_chain = 0.5,
                                  double dt = 0.02, double horizon = 4.0) {
  nlohmann::json c;
  c["sigma"] = {{"dim", 2},
                {"hamiltonian", matrix_to_json(0.25 * pauli_z())}};
  c["reservoirs"] = nlohmann::json::array({{{"model", "xy"},
                                            {"length", length},
                                            {"site_dim", 2},
                                            {"params", {{"jx", j_chain}, {"jy", j_chain}, {"hz", 0.0}}},
                                            {"beta", 0.8}}});
  c["coupling"] = {{"terms",
                    nlohmann::json::array(
                        {{{"site_support", {{"sigma", true}, {"reservoir", 1}, {"site", 0}}},
                          {"matrix", matrix_to_json(kron(pauli_x(), pauli_x()))},
                          {"envelope", {{"kind", "constant"}, {"value", g}}}}})}};
  c["numerics"] = {{"dt", dt},          {"horizon", horizon},
                   {"plateau_window", 1.0}, {"plateau_step", 0.1},
                   {"tol_quad", 1e-6},  {"tol_exact", 1e-10},
                   {"tol_plateau", 5e-3}};
  return c;
}

// Adds a sinusoidal drive term on Sigma to the tiny scenario.
inline nlohmann::json driven_config(double amp = 0.3, double omega = 1.3, double dt = 0.02) {
  nlohmann::json c = tiny_config(2, 0.2, 0.5, dt);
  c["coupling"]["terms"].push_back(
      {{"site_support", {{"sigma", true}}},
       {"matrix", matrix_to_json(pauli_x())},
       {"envelope", {{"kind", "sinusoid"}, {"amplitude", amp}, {"omega", omega}, {"phase", 0.2}}}});
  return c;
}

// Two XY reservoirs at different temperatures; dim 2 * 2^L * 2^L.
inline nlohmann::json two_temp_config(int length, double g = 0.1, double j_chain = 0.25,
                                      double dt = 0.01, double horizon = 8.0,
                                      double beta1 = 0.5, double beta2 = 1.0) {
  nlohmann::json c;
  c["sigma"] = {{"dim", 2}, {"hamiltonian", matrix_to_json(0.25 * pauli_z())}};
  auto reservoir = [&](double beta) {
    return nlohmann::json{{"model", "xy"},
                          {"length", length},
                          {"site_dim", 2},
                          {"params", {{"jx", j_chain}, {"jy", j_chain}, {"hz", 0.0}}},
                          {"beta", beta}};
  };
  c["reservoirs"] = nlohmann::json::array({reservoir(beta1), reservoir(beta2)});
  auto term = [&](int a) {
    return nlohmann::json{
        {"site_support", {{"sigma", true}, {"reservoir", a}, {"site", 0}}},
        {"matrix", matrix_to_json(kron(pauli_x(), pauli_x()))},
        {"envelope", {{"kind", "constant"}, {"value", g}}}};
  };
  c["coupling"] = {{"terms", nlohmann::json::array({term(1), term(2)})}};
  c["numerics"] = {{"dt", dt},          {"horizon", horizon},
                   {"plateau_window", 2.0}, {"plateau_step", 0.25},
                   {"tol_quad", 1e-3},  {"tol_exact", 1e-10},
                   {"tol_plateau", 5e-3}};
  return c;
}

}  // namespace nnes::test
