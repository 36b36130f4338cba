#include "nnes/blas.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <random>

extern "C" void cblas_zgemm3m(const enum CBLAS_ORDER, const enum CBLAS_TRANSPOSE,
                              const enum CBLAS_TRANSPOSE, const int, const int,
                              const int, const void*, const void*, const int,
                              const void*, const int, const void*, void*, const int);

namespace nnes::blas {

namespace {

constexpr int kGemmCutoff = 65;   // below this Eigen's product is fine
constexpr int kSvdCutoff = 257;   // exact SVD up to here

cmat gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, const cmat& a, const cmat& b) {
  const int m = static_cast<int>(ta == CblasNoTrans ? a.rows() : a.cols());
  const int k = static_cast<int>(ta == CblasNoTrans ? a.cols() : a.rows());
  const int n = static_cast<int>(tb == CblasNoTrans ? b.cols() : b.rows());
  cmat c(m, n);
  const cplx one(1, 0), zero(0, 0);
  cblas_zgemm3m(CblasColMajor, ta, tb, m, n, k, &one, a.data(),
                static_cast<int>(a.rows()), b.data(), static_cast<int>(b.rows()),
                &zero, c.data(), m);
  return c;
}

}  // namespace

cmat mul(const cmat& a, const cmat& b) {
  if (a.cols() != b.rows()) throw Error("blas::mul: inner dimensions differ");
  if (a.rows() < kGemmCutoff && b.cols() < kGemmCutoff) return a * b;
  return gemm(CblasNoTrans, CblasNoTrans, a, b);
}

cmat mul_adjoint_left(const cmat& a, const cmat& b) {
  if (a.rows() != b.rows()) throw Error("blas::mul_adjoint_left: dimensions differ");
  if (a.cols() < kGemmCutoff && b.cols() < kGemmCutoff) return a.adjoint() * b;
  return gemm(CblasConjTrans, CblasNoTrans, a, b);
}

cmat mul_adjoint_right(const cmat& a, const cmat& b) {
  if (a.cols() != b.cols()) throw Error("blas::mul_adjoint_right: dimensions differ");
  if (a.rows() < kGemmCutoff && b.rows() < kGemmCutoff) return a * b.adjoint();
  return gemm(CblasNoTrans, CblasConjTrans, a, b);
}

HermEig herm_eig(const cmat& h) {
  if (h.rows() != h.cols()) throw Error("herm_eig: matrix not square");
  const int n = static_cast<int>(h.rows());
  HermEig out;
  out.vecs = h;
  out.vals.resize(n);
  int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                            reinterpret_cast<lapack_complex_double*>(out.vecs.data()),
                            n, out.vals.data());
  if (info != 0) {
    // zheevd can fail on pathological inputs; Eigen's QR iteration is slower but solid.
    Eigen::SelfAdjointEigenSolver<cmat> es(h);
    if (es.info() != Eigen::Success) throw Error("herm_eig: eigendecomposition failed");
    out.vecs = es.eigenvectors();
    out.vals = es.eigenvalues();
  }
  return out;
}

double spectral_norm(const cmat& a, double tol) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (m == 0 || n == 0) return 0.0;
  if (m < kSvdCutoff && n < kSvdCutoff) {
    cmat work = a;
    const int mn = std::min(m, n);
    std::vector<double> s(mn);
    int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n,
                              reinterpret_cast<lapack_complex_double*>(work.data()),
                              m, s.data(), nullptr, 1, nullptr, 1);
    if (info == 0) return s[0];
    return a.jacobiSvd().singularValues()(0);
  }

  // Power iteration on A^H A, deterministic start. Convergence is linear
  // with ratio (s2/s1)^2; the stop test extrapolates the geometric tail from
  // successive Rayleigh increments, so near-degenerate leading values do not
  // fool it into stopping early.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> g(0.0, 1.0);
  cvec v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  v.normalize();
  double lambda = 0.0, delta_prev = 0.0;
  for (int it = 0; it < 4000; ++it) {
    cvec w = a.adjoint() * (a * v);
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    const double delta = std::abs(nw - lambda);
    if (it > 2) {
      const double ratio = delta_prev > 0 ? std::min(delta / delta_prev, 0.999) : 0.0;
      const double tail = delta * ratio / (1.0 - ratio);
      if (delta + tail <= tol * std::max(nw, 1e-300)) {
        lambda = nw;
        break;
      }
    }
    delta_prev = delta;
    lambda = nw;
  }
  return std::sqrt(lambda);
}

}  // namespace nnes::blas
