#include "nnes/observables.hpp"

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "nnes/blas.hpp"
#include "nnes/spin.hpp"

namespace nnes {

Operator site_pauli(const Scenario& sc, int subsystem, int site, char axis) {
  const auto& lay = *sc.layout;
  if (subsystem < 0 || subsystem >= lay.factors())
    throw Error("site_pauli: subsystem out of range");
  const auto& sites = lay.site_map[static_cast<size_t>(subsystem)];
  if (site < 0 || site >= static_cast<int>(sites.size()))
    throw Error("site_pauli: site out of range");
  if (sites[static_cast<size_t>(site)] != 2)
    throw Error("site_pauli: site dimension is not 2");
  Operator op = embed_on_sites(pauli(axis), {{subsystem, site}}, sc.layout);
  op.label = std::string("pauli(") + std::to_string(subsystem) + "," +
             std::to_string(site) + "," + axis + ")";
  return op;
}

Operator energy_current(const Scenario& sc, int reservoir) {
  if (reservoir < 1 || reservoir > static_cast<int>(sc.reservoirs.size()))
    throw Error("energy_current: reservoir out of range");
  Operator ha = embed(sc.reservoir_h[static_cast<size_t>(reservoir - 1)], reservoir, sc.layout);
  Operator j = I_UNIT * commutator(ha, sc.coupling.static_part);
  j.label = "current(" + std::to_string(reservoir) + ")";
  return j;
}

Operator random_hermitian(LayoutPtr layout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const long n = layout->total();
  cmat m(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  cmat h = 0.5 * (m + m.adjoint());
  h /= blas::spectral_norm(h);
  return Operator(std::move(layout), std::move(h), "random(" + std::to_string(seed) + ")");
}

namespace {

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

Operator build_observable(const Scenario& sc, const std::string& spec, std::uint64_t seed) {
  auto parts = split(spec, ':');
  if (parts.empty()) throw Error("empty observable spec");
  const std::string& kind = parts[0];
  if (kind == "pauli") {
    if (parts.size() == 3 && parts[1] == "sigma") {
      if (sc.sigma_dim() != 2) throw Error("pauli:sigma requires a qubit Sigma");
      Operator op = embed(pauli(parts[2].at(0)), 0, sc.layout);
      op.label = spec;
      return op;
    }
    if (parts.size() == 4 && parts[1].size() >= 2 && parts[1][0] == 'r') {
      const int a = std::stoi(parts[1].substr(1));
      Operator op = site_pauli(sc, a, std::stoi(parts[2]), parts[3].at(0));
      op.label = spec;
      return op;
    }
    throw Error("malformed pauli observable spec '" + spec + "'");
  }
  if (kind == "current" && parts.size() == 2)
    return energy_current(sc, std::stoi(parts[1]));
  if (kind == "random" && parts.size() == 2) {
    const std::uint64_t idx = std::stoull(parts[1]);
    return random_hermitian(sc.layout, seed ^ (0x5851f42d4c957f2dull + idx));
  }
  if (kind == "custom" && parts.size() >= 2) {
    // path may contain ':'; rejoin
    std::string path = spec.substr(std::string("custom:").size());
    std::ifstream in(path);
    if (!in) throw Error("custom observable: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    cmat m = matrix_from_json(j.contains("matrix") ? j.at("matrix") : j);
    Operator op(sc.layout, std::move(m), "custom:" + path);
    return op;
  }
  throw Error("unknown observable spec '" + spec + "'");
}

}  // namespace nnes
