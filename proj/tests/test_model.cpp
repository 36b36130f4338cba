#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "nnes/model.hpp"
#include "nnes/operator.hpp"
#include "nnes/spin.hpp"
#include "test_util.hpp"

using namespace nnes;
using nlohmann::json;

TEST_CASE("spin operators: su(2) algebra and known matrices") {
  for (int d : {2, 3, 4}) {
    auto s = spin_ops(d);
    const double sval = (d - 1) / 2.0;
    CHECK(test::max_abs_diff(s.sx * s.sy - s.sy * s.sx, cplx(0, 1) * s.sz) < 1e-13);
    cmat casimir = s.sx * s.sx + s.sy * s.sy + s.sz * s.sz;
    CHECK(test::max_abs_diff(casimir, sval * (sval + 1) * cmat::Identity(d, d)) < 1e-13);
  }
  auto s3 = spin_ops(3);
  cmat sz3(3, 3);
  sz3 << 1, 0, 0, 0, 0, 0, 0, 0, -1;
  CHECK(test::max_abs_diff(s3.sz, sz3) == 0.0);
  CHECK(test::max_abs_diff(spin_ops(2).sx, 0.5 * pauli_x()) < 1e-15);
}

TEST_CASE("chain_hamiltonian: two-site XY expanded by hand") {
  ReservoirSpec spec;
  spec.length = 2;
  spec.site_dim = 2;
  spec.model = ChainModel::xy;
  spec.params = {{"jx", 1.0}, {"jy", 1.0}, {"hz", 0.0}};
  spec.beta = 1.0;
  cmat h = chain_hamiltonian(spec);
  // Sx Sx + Sy Sy = (1/2)(|01><10| + |10><01|)
  cmat expect = cmat::Zero(4, 4);
  expect(1, 2) = 0.5;
  expect(2, 1) = 0.5;
  CHECK(test::max_abs_diff(h, expect) < 1e-15);
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-15);

  spec.model = ChainModel::transverse_ising;
  spec.params = {{"j", 2.0}, {"hx", 0.7}};
  cmat hti = chain_hamiltonian(spec);
  auto so = spin_ops(2);
  cmat expect_ti = 2.0 * kron(so.sz, so.sz) + 0.7 * (kron(so.sx, cmat::Identity(2, 2)) +
                                                     kron(cmat::Identity(2, 2), so.sx));
  CHECK(test::max_abs_diff(hti, expect_ti) < 1e-15);
}

TEST_CASE("build_scenario: minimal instance and dimension arithmetic") {
  json c;
  c["sigma"] = {{"dim", 2}};
  c["reservoirs"] = json::array({{{"model", "xy"}, {"length", 1}, {"site_dim", 2}, {"beta", 1.0}}});
  Scenario sc = build_scenario(c);
  CHECK(sc.layout->total() == 4);
  CHECK(!sc.coupling.time_dependent());
  CHECK(op_norm(sc.coupling.static_part) == 0.0);

  Scenario big = build_scenario(test::two_temp_config(4, 0.3));
  CHECK(big.layout->total() == 512);  // 2 * 2^4 * 2^4
  CHECK(big.layout->factors() == 3);
  CHECK(big.beta(0) == 0.5);
  CHECK(big.beta(1) == 1.0);
}

TEST_CASE("build_scenario rejects bad inputs") {
  // coupling on a bulk reservoir site: locality violation
  json c = test::tiny_config();
  c["coupling"]["terms"][0]["site_support"]["site"] = 1;
  CHECK_THROWS_AS(build_scenario(c), Error);

  // non-Hermitian user Hamiltonian
  json c2 = test::tiny_config();
  c2["sigma"]["hamiltonian"] = matrix_to_json(test::random_cmat(2, 3));
  CHECK_THROWS_AS(build_scenario(c2), Error);

  // non-Hermitian coupling matrix
  json c3 = test::tiny_config();
  c3["coupling"]["terms"][0]["matrix"] = matrix_to_json(test::random_cmat(4, 4));
  CHECK_THROWS_AS(build_scenario(c3), Error);

  json c4 = test::tiny_config();
  c4["numerics"]["dt"] = -1.0;
  CHECK_THROWS_AS(build_scenario(c4), Error);

  json c5 = test::tiny_config();
  c5["coupling"]["terms"][0]["site_support"]["reservoir"] = 7;
  CHECK_THROWS_AS(build_scenario(c5), Error);
}

TEST_CASE("coupling_at: folding, envelopes, self-adjointness on a grid") {
  Scenario sc = build_scenario(test::driven_config(0.3, 1.3));
  // static part holds the folded constant term
  CHECK(op_norm(sc.coupling.static_part) > 0.0);
  CHECK(sc.coupling.drive.size() == 1);

  // all envelopes zero at t: sinusoid with phase 0.2 vanishes at t = -0.2/1.3
  const double t0 = -0.2 / 1.3;
  CHECK(test::max_abs_diff(coupling_at(sc.coupling, t0).mat, sc.coupling.static_part.mat) < 1e-12);

  // sinusoid at quarter period: static + A*K
  Scenario sq = build_scenario([] {
    json c = test::tiny_config();
    c["coupling"]["terms"].push_back(
        {{"site_support", {{"sigma", true}}},
         {"matrix", matrix_to_json(pauli_y())},
         {"envelope", {{"kind", "sinusoid"}, {"amplitude", 0.4}, {"omega", 2.0}, {"phase", 0.0}}}});
    return c;
  }());
  const double tq = M_PI / (2 * 2.0);
  Operator expect = sq.coupling.static_part + 0.4 * embed(pauli_y(), 0, sq.layout);
  CHECK(test::max_abs_diff(coupling_at(sq.coupling, tq).mat, expect.mat) < 1e-12);

  for (double t : {-3.0, -1.0, 0.0, 0.7, 2.5}) {
    Operator h = coupling_at(sc.coupling, t);
    CHECK(op_norm(h - h.adjoint()) < 1e-12);
    CHECK(op_norm(h) <= sc.coupling.sup_norm_bound + 1e-12);
  }
}

TEST_CASE("smooth_step envelope saturates") {
  EnvelopeSpec env;
  env.kind = EnvelopeSpec::Kind::smooth_step;
  env.amplitude = 2.0;
  env.t0 = 1.0;
  env.width = 2.0;
  CHECK(env(-5.0) == 0.0);
  CHECK(env(0.99) == 0.0);
  CHECK(env(2.0) == doctest::Approx(1.0));  // midpoint of the ramp
  CHECK(env(3.0) == 2.0);
  CHECK(env(100.0) == 2.0);
}

TEST_CASE("free Hamiltonian generates a product evolution") {
  Scenario sc = build_scenario(test::tiny_config(2));
  const double t = 1.37;
  Operator full = expm_hermitian(sc.h_free, t);
  cmat prod = kron(expm_hermitian(Operator(make_layout({2}), sc.h_sys), t).mat,
                   expm_hermitian(Operator(make_layout({4}), sc.reservoir_h[0]), t).mat);
  CHECK(test::max_abs_diff(full.mat, prod) < 1e-10);
}
