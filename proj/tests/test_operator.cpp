#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nnes/blas.hpp"
#include "nnes/operator.hpp"
#include "nnes/spin.hpp"
#include "test_util.hpp"

using namespace nnes;

TEST_CASE("tensor: identity, hand-expanded kron, zero factor") {
  auto lay = make_layout({2, 2});
  Operator id4 = tensor({cmat::Identity(2, 2), cmat::Identity(2, 2)}, lay);
  CHECK(test::max_abs_diff(id4.mat, cmat::Identity(4, 4)) == 0.0);

  // sigma_x (x) sigma_z expanded by hand from the Kronecker definition
  cmat expect(4, 4);
  expect << 0, 0, 1, 0,
            0, 0, 0, -1,
            1, 0, 0, 0,
            0, -1, 0, 0;
  Operator sxsz = tensor({pauli_x(), pauli_z()}, lay);
  CHECK(test::max_abs_diff(sxsz.mat, expect) == 0.0);

  Operator z = tensor({cmat::Zero(2, 2), test::random_cmat(2, 7)}, lay);
  CHECK(op_norm(z) == 0.0);

  CHECK_THROWS_AS(tensor({cmat::Identity(3, 3), cmat::Identity(2, 2)}, lay), Error);
}

TEST_CASE("embed: padding, identity, disjoint supports commute") {
  auto lay = make_layout({2, 2});
  Operator e = embed(pauli_z(), 0, lay);
  CHECK(test::max_abs_diff(e.mat, kron(pauli_z(), cmat::Identity(2, 2))) == 0.0);
  CHECK(test::max_abs_diff(embed(cmat::Identity(2, 2), 1, lay).mat, cmat::Identity(4, 4)) == 0.0);

  auto lay3 = make_layout({2, 3, 2});
  Operator x0 = embed(test::random_hermitian_mat(2, 1), 0, lay3);
  Operator y2 = embed(test::random_hermitian_mat(2, 2), 2, lay3);
  CHECK(op_norm(commutator(x0, y2)) < 1e-14);

  CHECK_THROWS_AS(embed(pauli_x(), 3, lay3), Error);
  CHECK_THROWS_AS(embed(pauli_x(), 1, lay3), Error);  // dimension mismatch
}

TEST_CASE("embed_on_sites agrees with single-site embeds and handles ordering") {
  auto lay = make_layout({2, 8}, {{2}, {2, 2, 2}});
  cmat p = test::random_cmat(2, 11), q = test::random_cmat(2, 12);
  // product on non-adjacent sites == product of single-site embeds
  Operator both = embed_on_sites(kron(p, q), {{0, 0}, {1, 1}}, lay);
  Operator a = embed_on_sites(p, {{0, 0}}, lay);
  Operator b = embed_on_sites(q, {{1, 1}}, lay);
  CHECK(test::max_abs_diff(both.mat, (a * b).mat) < 1e-13);

  // listed-site order is the factor order of `local`
  cmat swap(4, 4);
  swap << 1, 0, 0, 0,
          0, 0, 1, 0,
          0, 1, 0, 0,
          0, 0, 0, 1;
  cmat local = kron(p, q);
  Operator rev = embed_on_sites(swap * local * swap, {{1, 1}, {0, 0}}, lay);
  CHECK(test::max_abs_diff(rev.mat, both.mat) < 1e-13);

  // boundary-site embed on the first reservoir site equals a plain kron
  cmat m = test::random_cmat(4, 13);
  Operator direct = embed_on_sites(m, {{0, 0}, {1, 0}}, lay);
  cmat expect = kron(m, cmat::Identity(4, 4));
  CHECK(test::max_abs_diff(direct.mat, expect) < 1e-13);
}

TEST_CASE("commutator: antisymmetry, Pauli algebra, disjoint supports") {
  auto lay = make_layout({2});
  Operator x(lay, pauli_x()), y(lay, pauli_y()), z(lay, pauli_z());
  CHECK(op_norm(commutator(x, x)) == 0.0);
  // [sx, sy] = 2i sz by the Pauli algebra
  CHECK(test::max_abs_diff(commutator(x, y).mat, cplx(0, 2) * pauli_z()) < 1e-15);

  auto lay2 = make_layout({2, 2});
  CHECK(op_norm(commutator(tensor({pauli_x(), cmat::Identity(2, 2)}, lay2),
                           tensor({cmat::Identity(2, 2), pauli_y()}, lay2))) < 1e-15);
}

TEST_CASE("op_norm: identity, zero, sigma_x, C* identity, cross norm") {
  auto lay = make_layout({2});
  CHECK(op_norm(identity(lay)) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(op_norm(zero(lay)) == 0.0);
  CHECK(op_norm(Operator(lay, pauli_x())) == doctest::Approx(1.0).epsilon(1e-13));

  for (std::uint64_t seed : {21u, 22u, 23u}) {
    cmat a = test::random_cmat(5, seed);
    cmat b = test::random_cmat(7, seed + 100);
    // cross-norm property of the spatial C* tensor product
    CHECK(std::abs(op_norm(kron(a, b)) - op_norm(a) * op_norm(b)) < 1e-10);
    // C* identity
    CHECK(std::abs(op_norm(cmat(a.adjoint() * a)) - std::pow(op_norm(a), 2)) < 1e-10);
  }
}

TEST_CASE("op_norm power iteration matches exact route at large size") {
  cmat a = test::random_cmat(300, 33);  // above the exact-SVD cutoff
  double approx = blas::spectral_norm(a);
  double exact = a.jacobiSvd().singularValues()(0);
  CHECK(std::abs(approx - exact) < 1e-6 * exact);
}

TEST_CASE("expm_hermitian: diagonal case, group law, unitarity") {
  auto lay = make_layout({2});
  Operator hz(lay, pauli_z());
  Operator u0 = expm_hermitian(hz, 0.0);
  CHECK(test::max_abs_diff(u0.mat, cmat::Identity(2, 2)) < 1e-15);

  const double t = 0.7;
  cmat expect(2, 2);
  expect << std::exp(cplx(0, -t)), 0, 0, std::exp(cplx(0, t));
  CHECK(test::max_abs_diff(expm_hermitian(hz, t).mat, expect) < 1e-14);

  auto lay8 = make_layout({8});
  Operator h(lay8, test::random_hermitian_mat(8, 5));
  for (double s : {-7.3, 0.9, 4.0}) {
    Operator us = expm_hermitian(h, s);
    Operator ut = expm_hermitian(h, 10.0 - s);
    CHECK(test::max_abs_diff((us * ut).mat, expm_hermitian(h, 10.0).mat) < 1e-12);
    CHECK(test::max_abs_diff((us * us.adjoint()).mat, cmat::Identity(8, 8)) < 1e-12);
  }
  CHECK(test::max_abs_diff((expm_hermitian(h, 3.0) * expm_hermitian(h, -3.0)).mat,
                           cmat::Identity(8, 8)) < 1e-12);

  Operator bad(lay8, test::random_cmat(8, 6));
  CHECK_THROWS_AS(expm_hermitian(bad, 1.0), Error);
}

TEST_CASE("partial_trace_sigma: elementary tensors and brute-force oracle") {
  auto lay = make_layout({2, 6});
  cmat y = test::random_cmat(6, 41);
  Operator ty = tensor({cmat::Identity(2, 2), y}, lay);
  CHECK(test::max_abs_diff(partial_trace_sigma(ty), y) < 1e-14);

  Operator tx = tensor({pauli_x(), y}, lay);
  CHECK(partial_trace_sigma(tx).cwiseAbs().maxCoeff() < 1e-14);

  // brute-force index loop as the independent oracle
  auto lay3 = make_layout({3, 4});
  Operator a(lay3, test::random_cmat(12, 42));
  cmat oracle = cmat::Zero(4, 4);
  for (int i = 0; i < 3; ++i)
    for (int p = 0; p < 4; ++p)
      for (int q = 0; q < 4; ++q) oracle(p, q) += a.mat(i * 4 + p, i * 4 + q) / 3.0;
  CHECK(test::max_abs_diff(partial_trace_sigma(a), oracle) < 1e-14);

  // partial_trace_sigma o (1 (x) .) = identity on reservoir matrices
  CHECK(test::max_abs_diff(partial_trace_sigma(embed_reservoir_part(y, lay)), y) < 1e-14);
}

TEST_CASE("operator arithmetic checks layouts") {
  auto lay = make_layout({2, 2});
  auto lay2 = make_layout({4});
  Operator a(lay, test::random_cmat(4, 1));
  Operator b(lay2, test::random_cmat(4, 2));
  CHECK_THROWS_AS(a + b, Error);
  CHECK_THROWS_AS(commutator(a, b), Error);
}
