#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nnes/evolution.hpp"
#include "nnes/kms.hpp"
#include "nnes/spin.hpp"
#include "test_util.hpp"

using namespace nnes;

TEST_CASE("kms_function: identity pair gives F == 1") {
  cmat h = test::random_hermitian_mat(4, 51);
  StripFunction f = kms_function(cmat::Identity(4, 4), cmat::Identity(4, 4), h, 0.7);
  for (double t : {-3.0, 0.0, 1.7})
    CHECK(std::abs(f.eval(cplx(t, 0.35)) - 1.0) < 1e-12);
}

TEST_CASE("kms_function: qubit H = sigma_z, A = B = sigma_x (hand formula)") {
  const double beta = 0.9;
  StripFunction f = kms_function(pauli_x(), pauli_x(), pauli_z(), beta);
  // with sigma_z = diag(1,-1) and breve^t A = e^{iHt} A e^{-iHt}:
  //   F(t) = (e^{-beta} e^{-2it} + e^{beta} e^{2it}) / (2 cosh beta)
  for (double t : {-1.1, 0.0, 0.4, 2.3}) {
    const cplx expect = (std::exp(-beta) * std::exp(cplx(0, -2 * t)) +
                         std::exp(beta) * std::exp(cplx(0, 2 * t))) /
                        (2 * std::cosh(beta));
    CHECK(std::abs(f.eval(cplx(t, 0)) - expect) < 1e-14);
    CHECK(std::abs(kms_direct_left(pauli_x(), pauli_x(), pauli_z(), beta, t) - expect) < 1e-14);
  }
}

TEST_CASE("KMS boundary identities are exact at finite dimension") {
  const double beta = 1.3;
  cmat h = test::random_hermitian_mat(5, 52);
  cmat a = test::random_cmat(5, 53);
  cmat b = test::random_cmat(5, 54);
  StripFunction f = kms_function(a, b, h, beta);
  double max_resid0 = 0, max_residb = 0, max_abs = 0;
  for (int k = 0; k < 64; ++k) {
    const double t = -8.0 + 16.0 * k / 63.0;
    max_resid0 = std::max(max_resid0,
                          std::abs(f.eval(cplx(t, 0)) - kms_direct_left(a, b, h, beta, t)));
    max_residb = std::max(max_residb,
                          std::abs(f.eval(cplx(t, beta)) - kms_direct_right(a, b, h, beta, t)));
    // |F| bounded by ||A|| ||B|| on the strip
    for (double y : {0.2 * beta, 0.8 * beta})
      max_abs = std::max(max_abs, std::abs(f.eval(cplx(t, y))));
  }
  CHECK(max_resid0 < 1e-10);
  CHECK(max_residb < 1e-10);
  CHECK(max_abs <= blas::spectral_norm(a) * blas::spectral_norm(b) + 1e-10);
}

TEST_CASE("FactoredOperator: cross-norm bound") {
  FactoredOperator fo;
  fo.terms = {{test::random_cmat(2, 55), test::random_cmat(3, 56)},
              {test::random_cmat(2, 57), test::random_cmat(3, 58)}};
  CHECK(blas::spectral_norm(fo.assemble()) <= fo.bound_1() + 1e-12);
  CHECK_THROWS_AS(FactoredOperator{}.bound_1(), Error);
}

TEST_CASE("multi_strip_check: trivial identity pair") {
  FactoredOperator a, b;
  a.terms = {{cmat::Identity(2, 2), cmat::Identity(2, 2)}};
  b.terms = {{cmat::Identity(2, 2), cmat::Identity(2, 2)}};
  std::vector<cmat> hs = {pauli_z(), 0.5 * pauli_z()};
  MultiStripReport rep = multi_strip_check(a, b, hs, {0.5, 1.0}, 6, 3, 2.0);
  CHECK(rep.max_boundary_residual < 1e-12);
  CHECK(rep.bound == doctest::Approx(1.0));
  for (const auto& s : rep.samples) CHECK(std::abs(s.abs_f - 1.0) < 1e-12);
}

TEST_CASE("multi_strip_check: qubit pair, all eta-boundary identities") {
  FactoredOperator a, b;
  a.terms = {{pauli_x(), pauli_y()}};
  b.terms = {{pauli_z(), pauli_x()}};
  std::vector<cmat> hs = {pauli_z(), 0.7 * pauli_x() + 0.3 * pauli_z()};
  MultiStripReport rep = multi_strip_check(a, b, hs, {0.5, 1.0});
  CHECK(rep.max_boundary_residual < 1e-10);
  CHECK(rep.bound_satisfied);
  // sampled maximum principle: interior below the sampled boundary max
  CHECK(rep.max_abs_interior <= rep.max_abs_boundary + 1e-8);

  // independent route for eta = 0: assembled operators on the product space
  cmat am = a.assemble(), bm = b.assemble();
  cmat h_total = kron(hs[0], cmat::Identity(2, 2)) + kron(cmat::Identity(2, 2), hs[1]);
  // product Gibbs with different temperatures is not Gibbs of h_total; build factors
  cmat rho = kron(gibbs_density(hs[0], 0.5), gibbs_density(hs[1], 1.0));
  auto e1 = blas::herm_eig(hs[0]);
  auto e2 = blas::herm_eig(hs[1]);
  for (double t1 : {-1.0, 0.3}) {
    for (double t2 : {0.0, 0.9}) {
      cmat evolved = kron(spectral_heisenberg(e1, a.terms[0][0], t1),
                          spectral_heisenberg(e2, a.terms[0][1], t2));
      const cplx direct = (rho * bm * evolved).trace();
      const cplx f = [&] {
        StripFunction f1 = kms_function(a.terms[0][0], b.terms[0][0], hs[0], 0.5);
        StripFunction f2 = kms_function(a.terms[0][1], b.terms[0][1], hs[1], 1.0);
        return f1.eval(cplx(t1, 0)) * f2.eval(cplx(t2, 0));
      }();
      CHECK(std::abs(direct - f) < 1e-12);
    }
  }
}

TEST_CASE("multi_strip_check: two-term B keeps |F| under the ||.||_1 bound") {
  FactoredOperator a, b;
  a.terms = {{pauli_x(), pauli_z()}};
  b.terms = {{pauli_z(), 0.6 * pauli_x()}, {0.4 * pauli_y(), pauli_y()}};
  std::vector<cmat> hs = {pauli_z(), 0.5 * pauli_x()};
  MultiStripReport rep = multi_strip_check(a, b, hs, {0.5, 1.0});
  CHECK(rep.max_boundary_residual < 1e-10);
  CHECK(rep.bound_satisfied);
  CHECK(rep.max_abs_strip < rep.bound);  // strict in generic position
}

TEST_CASE("modular_flow: trivial flows and the Gibbs correspondence") {
  auto lay = make_layout({4});
  Operator a(lay, test::random_cmat(4, 60));

  StateFunctional mixed{cmat::Identity(4, 4) / 4.0, StateFunctional::Kind::custom, lay};
  CHECK(op_norm(modular_flow(mixed, a, 0.0) - a) < 1e-14);
  CHECK(op_norm(modular_flow(mixed, a, 2.3) - a) < 1e-12);

  const double beta = 0.8;
  cmat h = test::random_hermitian_mat(4, 61);
  StateFunctional gibbs{gibbs_density(h, beta), StateFunctional::Kind::custom, lay};
  auto eig = blas::herm_eig(h);
  for (double t : {-1.2, 0.7}) {
    Operator flowed = modular_flow(gibbs, a, t);
    cmat expect = spectral_heisenberg(eig, a.mat, -beta * t);  // breve^{-beta t}
    CHECK(test::max_abs_diff(flowed.mat, expect) < 1e-10);
  }

  // rank-deficient density is rejected
  cmat proj = cmat::Zero(4, 4);
  proj(0, 0) = 1.0;
  StateFunctional pure{proj, StateFunctional::Kind::custom, lay};
  CHECK_THROWS_AS(modular_flow(pure, a, 1.0), Error);
}

TEST_CASE("modular flow of a product Gibbs state factorizes with -beta_a rescaling") {
  auto lay = make_layout({2, 3});
  cmat h1 = test::random_hermitian_mat(2, 62);
  cmat h2 = test::random_hermitian_mat(3, 63);
  const double b1 = 0.5, b2 = 1.1;
  StateFunctional rho{kron(gibbs_density(h1, b1), gibbs_density(h2, b2)),
                      StateFunctional::Kind::gibbs_product, lay};

  cmat a1 = test::random_cmat(2, 64);
  cmat a2 = test::random_cmat(3, 65);
  Operator a(lay, kron(a1, a2));
  const double t = 0.9;
  Operator flowed = modular_flow(rho, a, t);
  cmat expect = kron(spectral_heisenberg(blas::herm_eig(h1), a1, -b1 * t),
                     spectral_heisenberg(blas::herm_eig(h2), a2, -b2 * t));
  CHECK(test::max_abs_diff(flowed.mat, expect) < 1e-10);
}
