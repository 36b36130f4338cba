#include "nnes/model.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nnes/spin.hpp"

namespace nnes {

using nlohmann::json;

ChainModel chain_model_from_string(const std::string& s) {
  if (s == "xy") return ChainModel::xy;
  if (s == "xxz") return ChainModel::xxz;
  if (s == "transverse_ising" || s == "transverse-ising") return ChainModel::transverse_ising;
  throw Error("unknown reservoir model '" + s + "'");
}

namespace {

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

cmat two_site(const cmat& a, const cmat& b, int left_site, int n_sites, int d) {
  // a on left_site, b on left_site+1, identity elsewhere
  cmat out = cmat::Identity(1, 1);
  for (int s = 0; s < n_sites; ++s) {
    if (s == left_site)
      out = kron(out, a);
    else if (s == left_site + 1)
      out = kron(out, b);
    else
      out = kron(out, cmat::Identity(d, d));
  }
  return out;
}

cmat one_site(const cmat& a, int site, int n_sites, int d) {
  cmat out = cmat::Identity(1, 1);
  for (int s = 0; s < n_sites; ++s)
    out = kron(out, s == site ? a : cmat::Identity(d, d));
  return out;
}

}  // namespace

cmat chain_hamiltonian(const ReservoirSpec& spec) {
  if (spec.length < 1) throw Error("reservoir length must be >= 1");
  if (spec.site_dim < 2) throw Error("reservoir site_dim must be >= 2");
  if (spec.beta <= 0) throw Error("reservoir beta must be > 0");
  const int L = spec.length, d = spec.site_dim;
  const auto s = spin_ops(d);
  long total = 1;
  for (int k = 0; k < L; ++k) total *= d;
  cmat h = cmat::Zero(total, total);

  switch (spec.model) {
    case ChainModel::xy: {
      const double jx = param(spec.params, "jx", 1.0);
      const double jy = param(spec.params, "jy", 1.0);
      const double hz = param(spec.params, "hz", 0.0);
      for (int b = 0; b + 1 < L; ++b)
        h += jx * two_site(s.sx, s.sx, b, L, d) + jy * two_site(s.sy, s.sy, b, L, d);
      for (int k = 0; k < L; ++k) h += hz * one_site(s.sz, k, L, d);
      break;
    }
    case ChainModel::xxz: {
      const double jxy = param(spec.params, "jxy", 1.0);
      const double jz = param(spec.params, "jz", 1.0);
      const double hz = param(spec.params, "hz", 0.0);
      for (int b = 0; b + 1 < L; ++b)
        h += jxy * (two_site(s.sx, s.sx, b, L, d) + two_site(s.sy, s.sy, b, L, d)) +
             jz * two_site(s.sz, s.sz, b, L, d);
      for (int k = 0; k < L; ++k) h += hz * one_site(s.sz, k, L, d);
      break;
    }
    case ChainModel::transverse_ising: {
      const double j = param(spec.params, "j", 1.0);
      const double hx = param(spec.params, "hx", 1.0);
      for (int b = 0; b + 1 < L; ++b) h += j * two_site(s.sz, s.sz, b, L, d);
      for (int k = 0; k < L; ++k) h += hx * one_site(s.sx, k, L, d);
      break;
    }
  }
  return h;
}

double EnvelopeSpec::operator()(double t) const {
  switch (kind) {
    case Kind::constant: return value;
    case Kind::sinusoid: return amplitude * std::sin(omega * t + phase);
    case Kind::smooth_step: {
      double x = (t - t0) / width;
      if (x <= 0) return 0.0;
      if (x >= 1) return amplitude;
      return amplitude * x * x * (3 - 2 * x);
    }
  }
  return 0.0;
}

double EnvelopeSpec::sup_abs() const {
  switch (kind) {
    case Kind::constant: return std::abs(value);
    case Kind::sinusoid: return std::abs(amplitude);
    case Kind::smooth_step: return std::abs(amplitude);
  }
  return 0.0;
}

Operator CouplingSchedule::at(double t) const {
  Operator h = static_part;
  for (const auto& term : drive) h = h + term.envelope(t) * term.op;
  return h;
}

Operator coupling_at(const CouplingSchedule& schedule, double t) { return schedule.at(t); }

const cmat& Scenario::local_free(int a) const {
  if (a == 0) return h_sys;
  return reservoir_h.at(static_cast<size_t>(a - 1));
}

json matrix_to_json(const cmat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

cmat matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw Error("matrix: expected non-empty array of rows");
  const auto rows = j.size();
  const auto cols = j[0].size();
  cmat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw Error("matrix: ragged rows");
    for (size_t c = 0; c < cols; ++c) {
      const auto& e = j[r][c];
      if (e.is_number()) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cplx(e.get<double>(), 0);
      } else if (e.is_array() && e.size() == 2) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            cplx(e[0].get<double>(), e[1].get<double>());
      } else {
        throw Error("matrix: entries must be numbers or [re, im] pairs");
      }
    }
  }
  return m;
}

namespace {

EnvelopeSpec envelope_from_json(const json& j) {
  EnvelopeSpec env;
  const std::string kind = j.value("kind", "constant");
  if (kind == "constant") {
    env.kind = EnvelopeSpec::Kind::constant;
    env.value = j.value("value", 1.0);
  } else if (kind == "sinusoid") {
    env.kind = EnvelopeSpec::Kind::sinusoid;
    env.amplitude = j.value("amplitude", 1.0);
    env.omega = j.value("omega", 1.0);
    env.phase = j.value("phase", 0.0);
  } else if (kind == "smooth_step" || kind == "smooth-step") {
    env.kind = EnvelopeSpec::Kind::smooth_step;
    env.amplitude = j.value("amplitude", 1.0);
    env.t0 = j.value("t0", 0.0);
    env.width = j.value("width", 1.0);
    if (env.width <= 0) throw Error("smooth_step envelope: width must be > 0");
  } else {
    throw Error("unknown envelope kind '" + kind + "'");
  }
  return env;
}

void require_hermitian(const cmat& m, const std::string& what) {
  double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(what + " is not Hermitian");
}

}  // namespace

Scenario build_scenario(const json& config) {
  Scenario sc;

  if (!config.contains("sigma")) throw Error("config: missing 'sigma'");
  const auto& js = config.at("sigma");
  const int n = js.value("dim", 0);
  if (n < 1) throw Error("config: sigma.dim must be >= 1");
  if (js.contains("hamiltonian")) {
    sc.h_sys = matrix_from_json(js.at("hamiltonian"));
    if (sc.h_sys.rows() != n) throw Error("config: sigma.hamiltonian size != sigma.dim");
    require_hermitian(sc.h_sys, "sigma.hamiltonian");
  } else {
    sc.h_sys = cmat::Zero(n, n);
  }

  std::vector<int> dims = {n};
  std::vector<std::vector<int>> site_map = {{n}};
  if (config.contains("reservoirs")) {
    for (const auto& jr : config.at("reservoirs")) {
      ReservoirSpec spec;
      spec.length = jr.value("length", 1);
      spec.site_dim = jr.value("site_dim", 2);
      spec.model = chain_model_from_string(jr.value("model", "xy"));
      spec.beta = jr.value("beta", 1.0);
      if (jr.contains("params"))
        for (auto it = jr.at("params").begin(); it != jr.at("params").end(); ++it)
          spec.params[it.key()] = it.value().get<double>();
      sc.reservoirs.push_back(spec);
      sc.reservoir_h.push_back(chain_hamiltonian(spec));
      long dim = 1;
      for (int k = 0; k < spec.length; ++k) dim *= spec.site_dim;
      dims.push_back(static_cast<int>(dim));
      site_map.emplace_back(static_cast<size_t>(spec.length), spec.site_dim);
    }
  }
  sc.layout = make_layout(dims, site_map);

  // Free Hamiltonian: factor-embedded pieces. The free evolution factorizes
  // by construction; the product law is still checked in tests.
  Operator hf = embed(sc.h_sys, 0, sc.layout);
  for (size_t a = 0; a < sc.reservoir_h.size(); ++a)
    hf = hf + embed(sc.reservoir_h[a], static_cast<int>(a) + 1, sc.layout);
  sc.h_free = std::move(hf);
  sc.h_free.label = "H_free";

  // Coupling terms.
  Operator stat = zero(sc.layout);
  double bound = 0.0;
  if (config.contains("coupling") && config.at("coupling").contains("terms")) {
    for (const auto& jt : config.at("coupling").at("terms")) {
      if (!jt.contains("site_support")) throw Error("coupling term: missing site_support");
      const auto& ss = jt.at("site_support");
      const bool on_sigma = ss.value("sigma", false);
      std::vector<SiteRef> sites;
      if (on_sigma) sites.push_back({0, 0});
      if (ss.contains("reservoir")) {
        const int a = ss.at("reservoir").get<int>();
        if (a < 1 || a > static_cast<int>(sc.reservoirs.size()))
          throw Error("coupling term: reservoir index out of range");
        const int site = ss.value("site", 0);
        if (site != 0)
          throw Error("coupling term: support outside Sigma and boundary sites (site " +
                      std::to_string(site) + " of reservoir " + std::to_string(a) + ")");
        sites.push_back({a, 0});
      }
      if (sites.empty()) throw Error("coupling term: empty site_support");
      cmat local = matrix_from_json(jt.at("matrix"));
      require_hermitian(local, "coupling term matrix");
      Operator term = embed_on_sites(local, sites, sc.layout);
      EnvelopeSpec env = jt.contains("envelope") ? envelope_from_json(jt.at("envelope"))
                                                 : EnvelopeSpec{};
      const double term_norm = op_norm(term);
      bound += env.sup_abs() * term_norm;
      if (env.kind == EnvelopeSpec::Kind::constant)
        stat = stat + env.value * term;
      else
        sc.coupling.drive.push_back({std::move(term), env});
    }
  }
  sc.coupling.static_part = std::move(stat);
  sc.coupling.static_part.label = "h_static";
  sc.coupling.sup_norm_bound = bound;

  if (config.contains("numerics")) {
    const auto& jn = config.at("numerics");
    sc.numerics.dt = jn.value("dt", sc.numerics.dt);
    sc.numerics.horizon = jn.value("horizon", sc.numerics.horizon);
    sc.numerics.plateau_window = jn.value("plateau_window", sc.numerics.plateau_window);
    sc.numerics.plateau_step = jn.value("plateau_step", sc.numerics.plateau_step);
    sc.numerics.tol_quad = jn.value("tol_quad", sc.numerics.tol_quad);
    sc.numerics.tol_exact = jn.value("tol_exact", sc.numerics.tol_exact);
    sc.numerics.tol_plateau = jn.value("tol_plateau", sc.numerics.tol_plateau);
    if (sc.numerics.dt <= 0) throw Error("numerics.dt must be > 0");
    if (sc.numerics.horizon <= 0) throw Error("numerics.horizon must be > 0");
  }

  if (config.contains("sigma0")) {
    const auto& j0 = config.at("sigma0");
    const std::string kind = j0.value("kind", "maximally_mixed");
    if (kind == "maximally_mixed") {
      sc.sigma0.kind = Sigma0Choice::Kind::maximally_mixed;
    } else if (kind == "gibbs") {
      sc.sigma0.kind = Sigma0Choice::Kind::gibbs;
      sc.sigma0.beta = j0.value("beta", 1.0);
      if (sc.sigma0.beta <= 0) throw Error("sigma0.beta must be > 0");
    } else {
      throw Error("unknown sigma0 kind '" + kind + "'");
    }
  }

  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file '" + path + "'");
  json j;
  in >> j;
  return build_scenario(j);
}

}  // namespace nnes
