#include "nnes/operator.hpp"

#include "nnes/blas.hpp"

namespace nnes {

Operator::Operator(LayoutPtr lay, cmat m, std::string lab)
    : layout(std::move(lay)), mat(std::move(m)), label(std::move(lab)) {
  if (!layout) throw Error("Operator: null layout");
  if (mat.rows() != mat.cols()) throw Error("Operator: matrix not square");
  if (mat.rows() != layout->total())
    throw Error("Operator '" + label + "': matrix size does not match layout total " +
                std::to_string(layout->total()));
}

bool Operator::is_hermitian(double tol) const {
  double scale = std::max(1e-300, mat.cwiseAbs().maxCoeff());
  return (mat - mat.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

void require_same_layout(const Operator& a, const Operator& b, const char* where) {
  if (!a.layout || !b.layout || !(*a.layout == *b.layout))
    throw Error(std::string(where) + ": operators live on different layouts");
}

Operator operator+(const Operator& a, const Operator& b) {
  require_same_layout(a, b, "operator+");
  return Operator(a.layout, a.mat + b.mat);
}

Operator operator-(const Operator& a, const Operator& b) {
  require_same_layout(a, b, "operator-");
  return Operator(a.layout, a.mat - b.mat);
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_layout(a, b, "operator*");
  return Operator(a.layout, blas::mul(a.mat, b.mat));
}

Operator operator*(cplx s, const Operator& a) { return Operator(a.layout, s * a.mat); }

cmat kron(const cmat& a, const cmat& b) {
  cmat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Operator tensor(const std::vector<cmat>& factors, LayoutPtr layout) {
  if (!layout) throw Error("tensor: null layout");
  if (static_cast<int>(factors.size()) != layout->factors())
    throw Error("tensor: expected one factor per subsystem");
  for (int a = 0; a < layout->factors(); ++a) {
    const cmat& f = factors[static_cast<size_t>(a)];
    if (f.rows() != f.cols() || f.rows() != layout->dim(a))
      throw Error("tensor: factor " + std::to_string(a) + " does not match its subsystem dimension");
  }
  cmat acc = factors[0];
  for (size_t a = 1; a < factors.size(); ++a) acc = kron(acc, factors[a]);
  return Operator(std::move(layout), std::move(acc));
}

Operator embed(const cmat& local, int subsystem, LayoutPtr layout) {
  if (!layout) throw Error("embed: null layout");
  if (subsystem < 0 || subsystem >= layout->factors())
    throw Error("embed: subsystem index out of range");
  if (local.rows() != local.cols() || local.rows() != layout->dim(subsystem))
    throw Error("embed: local matrix does not match subsystem dimension");
  std::vector<cmat> factors;
  factors.reserve(static_cast<size_t>(layout->factors()));
  for (int a = 0; a < layout->factors(); ++a) {
    if (a == subsystem)
      factors.push_back(local);
    else
      factors.push_back(cmat::Identity(layout->dim(a), layout->dim(a)));
  }
  return tensor(factors, std::move(layout));
}

namespace {

struct SiteSlot {
  long stride;
  int dim;
};

// Flatten the layout into a site list and record mixed-radix strides.
std::vector<std::vector<SiteSlot>> site_slots(const SpaceLayout& lay) {
  std::vector<std::vector<SiteSlot>> slots(lay.site_map.size());
  long stride = lay.total();
  for (size_t a = 0; a < lay.site_map.size(); ++a) {
    slots[a].resize(lay.site_map[a].size());
    for (size_t s = 0; s < lay.site_map[a].size(); ++s) {
      stride /= lay.site_map[a][s];
      slots[a][s] = {stride, lay.site_map[a][s]};
    }
  }
  return slots;
}

}  // namespace

Operator embed_on_sites(const cmat& local, const std::vector<SiteRef>& sites,
                        LayoutPtr layout) {
  if (!layout) throw Error("embed_on_sites: null layout");
  if (sites.empty()) throw Error("embed_on_sites: empty site list");
  auto slots = site_slots(*layout);

  long active_dim = 1;
  std::vector<SiteSlot> active;
  for (const auto& ref : sites) {
    if (ref.subsystem < 0 || ref.subsystem >= layout->factors())
      throw Error("embed_on_sites: subsystem index out of range");
    const auto& sub = slots[static_cast<size_t>(ref.subsystem)];
    if (ref.site < 0 || ref.site >= static_cast<int>(sub.size()))
      throw Error("embed_on_sites: site index out of range");
    active.push_back(sub[static_cast<size_t>(ref.site)]);
    active_dim *= sub[static_cast<size_t>(ref.site)].dim;
  }
  if (local.rows() != local.cols() || local.rows() != active_dim)
    throw Error("embed_on_sites: local matrix does not match the listed sites");

  std::vector<SiteSlot> passive;
  for (size_t a = 0; a < slots.size(); ++a)
    for (size_t s = 0; s < slots[a].size(); ++s) {
      bool used = false;
      for (const auto& ref : sites)
        if (ref.subsystem == static_cast<int>(a) && ref.site == static_cast<int>(s))
          used = true;
      if (!used) passive.push_back(slots[a][s]);
    }

  // Full index of an active configuration: mixed-radix digits, first listed
  // site is the most significant digit of `local`'s index.
  const long n_active = active_dim;
  std::vector<long> active_offset(static_cast<size_t>(n_active));
  for (long ia = 0; ia < n_active; ++ia) {
    long rest = ia, off = 0;
    for (size_t k = active.size(); k-- > 0;) {
      off += (rest % active[k].dim) * active[k].stride;
      rest /= active[k].dim;
    }
    active_offset[static_cast<size_t>(ia)] = off;
  }

  long n_passive = 1;
  for (const auto& p : passive) n_passive *= p.dim;

  cmat out = cmat::Zero(layout->total(), layout->total());
  for (long ip = 0; ip < n_passive; ++ip) {
    long rest = ip, base = 0;
    for (size_t k = passive.size(); k-- > 0;) {
      base += (rest % passive[k].dim) * passive[k].stride;
      rest /= passive[k].dim;
    }
    for (long ia = 0; ia < n_active; ++ia)
      for (long ja = 0; ja < n_active; ++ja) {
        cplx v = local(ia, ja);
        if (v != cplx(0, 0))
          out(base + active_offset[static_cast<size_t>(ia)],
              base + active_offset[static_cast<size_t>(ja)]) += v;
      }
  }
  return Operator(std::move(layout), std::move(out));
}

Operator commutator(const Operator& a, const Operator& b) {
  require_same_layout(a, b, "commutator");
  return Operator(a.layout, blas::mul(a.mat, b.mat) - blas::mul(b.mat, a.mat));
}

double op_norm(const Operator& a) { return blas::spectral_norm(a.mat); }
double op_norm(const cmat& a) { return blas::spectral_norm(a); }

Operator expm_hermitian(const Operator& h, double t) {
  double scale = std::max(1e-300, h.mat.cwiseAbs().maxCoeff());
  if ((h.mat - h.mat.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error("expm_hermitian: input is not self-adjoint");
  auto eig = blas::herm_eig(h.mat);
  cvec phase(eig.vals.size());
  for (Eigen::Index k = 0; k < eig.vals.size(); ++k)
    phase(k) = std::exp(cplx(0, -eig.vals(k) * t));
  cmat scaled = eig.vecs * phase.asDiagonal();
  return Operator(h.layout, blas::mul_adjoint_right(scaled, eig.vecs));
}

cmat partial_trace_sigma(const Operator& a) {
  const int n = a.layout->sigma_dim();
  const long d = a.layout->reservoir_total();
  cmat out = cmat::Zero(d, d);
  for (int i = 0; i < n; ++i) out += a.mat.block(i * d, i * d, d, d);
  return out / static_cast<double>(n);
}

Operator sigma_average(const Operator& a) {
  return embed_reservoir_part(partial_trace_sigma(a), a.layout);
}

Operator embed_reservoir_part(const cmat& y, LayoutPtr layout) {
  const long d = layout->reservoir_total();
  if (y.rows() != y.cols() || y.rows() != d)
    throw Error("embed_reservoir_part: matrix does not match reservoir dimension");
  return Operator(layout, kron(cmat::Identity(layout->sigma_dim(), layout->sigma_dim()), y));
}

Operator identity(LayoutPtr layout) {
  long d = layout->total();
  return Operator(std::move(layout), cmat::Identity(d, d));
}

Operator zero(LayoutPtr layout) {
  long d = layout->total();
  return Operator(std::move(layout), cmat::Zero(d, d));
}

}  // namespace nnes
