// Batch runner: configuration-driven simulation and verification commands.
// Every command writes CSV/JSON payloads plus a manifest.json into --out;
// re-running with identical inputs and seed reproduces the payload bytes.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nnes/csv.hpp"
#include "nnes/kms.hpp"
#include "nnes/moller.hpp"
#include "nnes/observables.hpp"
#include "nnes/response.hpp"
#include "nnes/spin.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nnes;

namespace {

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
};

json numerics_json(const Numerics& n) {
  return {{"dt", n.dt},
          {"horizon", n.horizon},
          {"plateau_window", n.plateau_window},
          {"plateau_step", n.plateau_step},
          {"tol_quad", n.tol_quad},
          {"tol_exact", n.tol_exact},
          {"tol_plateau", n.tol_plateau}};
}

void write_manifest(const CommonOpts& opts, const std::string& command, const Scenario& sc,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::string>& warnings, const json& extra = {}) {
  json m;
  m["command"] = command;
  m["scenario"] = opts.scenario_path;
  m["seed"] = opts.seed;
  m["numerics"] = numerics_json(sc.numerics);
  m["outputs"] = outputs;
  m["warnings"] = warnings;
  m["version"] = "nnes 0.1";
  if (!extra.is_null()) m["results"] = extra;
  write_json_file((fs::path(opts.out_dir) / "manifest.json").string(), m);
}

void write_plateau_csv(const std::string& path, const PlateauReport& rep) {
  CsvWriter csv(path, {"s", "g", "running_integral", "monitored", "plateau", "recurrence"});
  for (size_t i = 0; i < rep.s.size(); ++i) {
    const bool at_plateau = rep.plateau_detected && static_cast<int>(i) == rep.plateau_index;
    const bool at_rec = std::isfinite(rep.recurrence_onset) &&
                        std::abs(rep.s[i] - rep.recurrence_onset) < 1e-12;
    csv.row({fmt_num(rep.s[i]), fmt_num(rep.g[i]), fmt_num(rep.running_integral[i]),
             fmt_num(rep.monitored[i]), at_plateau ? "1" : "0", at_rec ? "1" : "0"});
  }
}

json report_json(const PlateauReport& rep) {
  return {{"plateau_detected", rep.plateau_detected},
          {"plateau_index", rep.plateau_index},
          {"plateau_value", rep.plateau_value},
          {"recurrence_onset", std::isfinite(rep.recurrence_onset)
                                   ? json(rep.recurrence_onset)
                                   : json(nullptr)},
          {"tail_estimate", rep.tail_estimate},
          {"fit_exponent",
           std::isfinite(rep.fit_exponent) ? json(rep.fit_exponent) : json(nullptr)},
          {"flagged", rep.flagged}};
}

json response_json(const ResponseReport& rep) {
  return {{"formula_value", rep.formula_value}, {"formula_imag", rep.formula_imag},
          {"fd_value", rep.fd_value},           {"difference", rep.difference},
          {"epsilon", rep.epsilon},             {"horizon", rep.horizon},
          {"tail_bound", rep.tail_bound},       {"fd_curvature", rep.fd_curvature},
          {"order", rep.order},                 {"flagged", rep.flagged}};
}

// X on site 0 / Z on the last site of one reservoir's own factor space.
cmat factor_site_op(const Scenario& sc, size_t reservoir, int site, const cmat& p) {
  const int L = sc.reservoirs[reservoir].length;
  auto so = spin_ops(sc.reservoirs[reservoir].site_dim);
  cmat acc = cmat::Identity(1, 1);
  for (int s2 = 0; s2 < L; ++s2) acc = kron(acc, s2 == site ? p : so.id);
  return acc;
}

int run_simulate(const CommonOpts& opts, double t, const std::vector<std::string>& specs) {
  Scenario sc = load_scenario(opts.scenario_path);
  Propagator fp = Propagator::free_evolution(sc);
  Propagator cp = Propagator::coupled(sc);
  NnesEngine eng(sc, fp, cp);

  fs::create_directories(opts.out_dir);
  std::vector<std::string> warnings;
  const std::string csv_path = (fs::path(opts.out_dir) / "nnes.csv").string();
  CsvWriter csv(csv_path, {"observable", "t", "value_re", "value_im", "sigma_re", "sigma_im",
                           "uncertainty", "flagged"});
  for (const auto& spec : specs) {
    Operator a = build_observable(sc, spec, opts.seed);
    NnesValue v = eng.expect(a, t);
    if (v.flagged) warnings.push_back("no plateau before recurrence for " + spec);
    csv.row({spec, fmt_num(t), fmt_num(v.value.real()), fmt_num(v.value.imag()),
             fmt_num(v.sigma_expect.real()), fmt_num(v.sigma_expect.imag()),
             fmt_num(v.uncertainty), v.flagged ? "1" : "0"});
  }
  write_manifest(opts, "simulate", sc, {"nnes.csv"}, warnings);
  return 0;
}

int run_moller(const CommonOpts& opts, double t, const std::string& spec, bool minus) {
  Scenario sc = load_scenario(opts.scenario_path);
  Propagator fp = Propagator::free_evolution(sc);
  Propagator cp = Propagator::coupled(sc);
  fs::create_directories(opts.out_dir);

  MollerResult res;
  if (minus) {
    Operator a = build_observable(sc, spec, opts.seed);
    res = moller_minus(fp, cp, partial_trace_sigma(a), t);
  } else {
    res = moller_plus(fp, cp, build_observable(sc, spec, opts.seed), t);
  }
  write_plateau_csv((fs::path(opts.out_dir) / "moller_plateau.csv").string(), res.report);

  json extra = report_json(res.report);
  extra["sigma_triviality"] = std::isfinite(res.sigma_triviality)
                                  ? json(res.sigma_triviality)
                                  : json(nullptr);
  extra["observable_norm"] = res.observable_norm;
  extra["direction"] = minus ? "minus" : "plus";
  write_json_file((fs::path(opts.out_dir) / "moller.json").string(), extra);

  std::vector<std::string> warnings;
  if (res.report.flagged) warnings.push_back("no plateau before recurrence");
  write_manifest(opts, "moller", sc, {"moller_plateau.csv", "moller.json"}, warnings, extra);
  return 0;
}

int run_a5(const CommonOpts& opts, const std::string& spec, const std::string& picture,
           double horizon) {
  Scenario sc = load_scenario(opts.scenario_path);
  const Picture pic = picture == "free" ? Picture::free : Picture::coupled;
  Propagator prop = pic == Picture::free ? Propagator::free_evolution(sc)
                                         : Propagator::coupled(sc);
  const double h = horizon > 0 ? horizon : sc.numerics.horizon;
  PlateauReport rep = a5_diagnostic(prop, build_observable(sc, spec, opts.seed), pic, h);

  fs::create_directories(opts.out_dir);
  write_plateau_csv((fs::path(opts.out_dir) / "a5.csv").string(), rep);
  write_json_file((fs::path(opts.out_dir) / "a5.json").string(), report_json(rep));
  std::vector<std::string> warnings;
  if (rep.flagged) warnings.push_back("no plateau before recurrence");
  write_manifest(opts, "a5-scan", sc, {"a5.csv", "a5.json"}, warnings, report_json(rep));
  return 0;
}

int run_kms(const CommonOpts& opts, int grid) {
  Scenario sc = load_scenario(opts.scenario_path);
  fs::create_directories(opts.out_dir);
  const std::string csv_path = (fs::path(opts.out_dir) / "kms.csv").string();
  CsvWriter csv(csv_path, {"reservoir", "t", "resid_real_axis", "resid_beta_axis"});

  double max_resid = 0;
  for (size_t a = 0; a < sc.reservoir_h.size(); ++a) {
    const cmat& h = sc.reservoir_h[a];
    const double beta = sc.reservoirs[a].beta;
    cmat af = factor_site_op(sc, a, 0, pauli_x());
    cmat bf = factor_site_op(sc, a, sc.reservoirs[a].length - 1, pauli_z());
    StripFunction f = kms_function(af, bf, h, beta);
    for (int k = 0; k < grid; ++k) {
      const double t = -8.0 + 16.0 * k / std::max(1, grid - 1);
      const double r0 = std::abs(f.eval(cplx(t, 0)) - kms_direct_left(af, bf, h, beta, t));
      const double rb =
          std::abs(f.eval(cplx(t, beta)) - kms_direct_right(af, bf, h, beta, t));
      max_resid = std::max({max_resid, r0, rb});
      csv.row({std::to_string(a + 1), fmt_num(t), fmt_num(r0), fmt_num(rb)});
    }
  }
  json extra = {{"max_residual", max_resid}, {"tol_exact", sc.numerics.tol_exact},
                {"pass", max_resid < sc.numerics.tol_exact}};
  write_json_file((fs::path(opts.out_dir) / "kms.json").string(), extra);
  write_manifest(opts, "kms-check", sc, {"kms.csv", "kms.json"}, {}, extra);
  return 0;
}

int run_strip(const CommonOpts& opts, const std::string& strip_config) {
  Scenario sc = load_scenario(opts.scenario_path);
  if (sc.reservoirs.size() < 2)
    throw Error("strip-check: scenario needs at least two reservoirs");
  fs::create_directories(opts.out_dir);

  FactoredOperator a, b;
  std::vector<cmat> hs;
  std::vector<double> betas;
  const size_t m = sc.reservoir_h.size();
  for (size_t r = 0; r < m; ++r) {
    hs.push_back(sc.reservoir_h[r]);
    betas.push_back(sc.reservoirs[r].beta);
  }
  if (strip_config.empty()) {
    std::vector<cmat> at, bt;
    for (size_t r = 0; r < m; ++r) {
      at.push_back(factor_site_op(sc, r, 0, pauli_x()));
      bt.push_back(factor_site_op(sc, r, 0, pauli_z()));
    }
    a.terms = {at};
    b.terms = {bt};
  } else {
    std::ifstream in(strip_config);
    if (!in) throw Error("strip-check: cannot open '" + strip_config + "'");
    json j;
    in >> j;
    for (const auto& jt : j.at("a_terms")) {
      std::vector<cmat> term;
      for (const auto& jf : jt) term.push_back(matrix_from_json(jf));
      a.terms.push_back(std::move(term));
    }
    for (const auto& jt : j.at("b_terms")) {
      std::vector<cmat> term;
      for (const auto& jf : jt) term.push_back(matrix_from_json(jf));
      b.terms.push_back(std::move(term));
    }
  }

  MultiStripReport rep = multi_strip_check(a, b, hs, betas);
  const std::string csv_path = (fs::path(opts.out_dir) / "strip.csv").string();
  {
    std::vector<std::string> header;
    for (size_t r = 0; r < m; ++r) header.push_back("re_z" + std::to_string(r + 1));
    for (size_t r = 0; r < m; ++r) header.push_back("im_z" + std::to_string(r + 1));
    header.insert(header.end(), {"abs_f", "boundary", "residual"});
    CsvWriter csv(csv_path, header);
    for (const auto& smp : rep.samples) {
      std::vector<std::string> row;
      for (double v : smp.re) row.push_back(fmt_num(v));
      for (double v : smp.im) row.push_back(fmt_num(v));
      row.push_back(fmt_num(smp.abs_f));
      row.push_back(smp.boundary ? "1" : "0");
      row.push_back(fmt_num(smp.residual));
      csv.row(row);
    }
  }
  json extra = {{"max_boundary_residual", rep.max_boundary_residual},
                {"max_abs_strip", rep.max_abs_strip},
                {"max_abs_interior", rep.max_abs_interior},
                {"max_abs_boundary", rep.max_abs_boundary},
                {"bound", rep.bound},
                {"bound_satisfied", rep.bound_satisfied}};
  write_json_file((fs::path(opts.out_dir) / "strip.json").string(), extra);
  write_manifest(opts, "strip-check", sc, {"strip.csv", "strip.json"}, {}, extra);
  return 0;
}

CouplingSchedule kick_from_spec(const Scenario& sc, const std::string& spec,
                                std::uint64_t seed) {
  if (spec == "boundary") {
    Operator k = embed_on_sites(kron(pauli_x(), pauli_x()), {{0, 0}, {1, 0}}, sc.layout);
    k.label = "boundary kick";
    return static_kick(k);
  }
  return static_kick(build_observable(sc, spec, seed));
}

int run_response(const CommonOpts& opts, const std::string& spec, const std::string& kick,
                 double t, double eps, bool steady) {
  Scenario sc = load_scenario(opts.scenario_path);
  ResponseEngine eng(sc);
  Operator a = build_observable(sc, spec, opts.seed);
  CouplingSchedule k = kick_from_spec(sc, kick, opts.seed);
  ResponseReport rep = steady ? eng.steady_response(a, k, eps)
                              : eng.linear_response(a, t, k, eps);
  fs::create_directories(opts.out_dir);
  json out = response_json(rep);
  out["observable"] = spec;
  out["kick"] = kick;
  out["t"] = t;
  out["steady"] = steady;
  write_json_file((fs::path(opts.out_dir) / "response.json").string(), out);
  std::vector<std::string> warnings;
  if (rep.flagged) warnings.push_back("plateau failure in an NNES run");
  write_manifest(opts, steady ? "response(steady)" : "response", sc,
                 {"response.json"}, warnings, out);
  return 0;
}

int run_dyson(const CommonOpts& opts, const std::string& spec, const std::string& kick,
              double t, int order) {
  Scenario sc = load_scenario(opts.scenario_path);
  ResponseEngine eng(sc);
  Operator a = build_observable(sc, spec, opts.seed);
  CouplingSchedule k = kick_from_spec(sc, kick, opts.seed);
  fs::create_directories(opts.out_dir);
  json out;
  out["observable"] = spec;
  out["kick"] = kick;
  out["t"] = t;
  json terms = json::array();
  for (int n = 1; n <= order; ++n) {
    const cplx v = eng.dyson_term(a, t, n, k);
    terms.push_back({{"order", n}, {"value_re", v.real()}, {"value_im", v.imag()}});
  }
  out["terms"] = terms;
  ResponseReport lin = eng.linear_response(a, t, k);
  out["linear_formula_cross_value"] = lin.formula_value;
  write_json_file((fs::path(opts.out_dir) / "dyson.json").string(), out);
  write_manifest(opts, "dyson", sc, {"dyson.json"}, {}, out);
  return 0;
}

int run_oracle(const CommonOpts& opts, const std::string& spec, double t, double s,
               const std::string& sigma0) {
  Scenario sc = load_scenario(opts.scenario_path);
  Propagator fp = Propagator::free_evolution(sc);
  Propagator cp = Propagator::coupled(sc);
  NnesEngine eng(sc, fp, cp);
  Operator a = build_observable(sc, spec, opts.seed);

  cplx v;
  if (sigma0.empty() || sigma0 == "default") {
    v = eng.oracle(a, t, s);
  } else {
    Sigma0Choice choice;
    if (sigma0 == "mixed") {
      choice.kind = Sigma0Choice::Kind::maximally_mixed;
    } else if (sigma0.rfind("gibbs:", 0) == 0) {
      choice.kind = Sigma0Choice::Kind::gibbs;
      choice.beta = std::stod(sigma0.substr(6));
    } else {
      throw Error("oracle: unknown sigma0 spec '" + sigma0 + "'");
    }
    v = eng.oracle(a, t, s, choice);
  }
  fs::create_directories(opts.out_dir);
  json out = {{"observable", spec}, {"t", t},
              {"s", s},             {"sigma0", sigma0.empty() ? "default" : sigma0},
              {"value_re", v.real()}, {"value_im", v.imag()}};
  write_json_file((fs::path(opts.out_dir) / "oracle.json").string(), out);
  write_manifest(opts, "oracle", sc, {"oracle.json"}, {}, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-truncation nonequilibrium steady-state simulator"};
  app.require_subcommand(1);
  app.fallthrough();  // common options may follow the subcommand

  CommonOpts opts;
  app.add_option("--scenario", opts.scenario_path, "scenario JSON file")->required();
  app.add_option("--out", opts.out_dir, "output directory");
  app.add_option("--seed", opts.seed, "seed for randomized observable selection");

  double t = 0.0, s = -1.0, eps = 1e-4, horizon = -1.0;
  int order = 2, grid = 64;
  bool minus = false, steady = false;
  std::vector<std::string> observables = {"pauli:sigma:z"};
  std::string observable = "pauli:sigma:z", picture = "coupled", kick = "boundary";
  std::string sigma0, strip_config;

  auto* simulate = app.add_subcommand("simulate", "NNES expectations with uncertainty columns");
  simulate->add_option("--time", t, "evaluation time");
  simulate->add_option("--observable", observables, "observable specs");

  auto* moller = app.add_subcommand("moller", "Moller morphism approximant with plateau scan");
  moller->add_option("--time", t, "evaluation time");
  moller->add_option("--observable", observable, "observable spec");
  moller->add_flag("--minus", minus, "run the A_> -> A direction");

  auto* a5 = app.add_subcommand("a5-scan", "commutator-decay diagnostic");
  a5->add_option("--observable", observable, "observable spec");
  a5->add_option("--picture", picture, "coupled|free");
  a5->add_option("--horizon", horizon, "scan horizon (default: scenario horizon)");

  auto* kms = app.add_subcommand("kms-check", "KMS boundary identities per reservoir");
  kms->add_option("--grid", grid, "t-grid points");

  auto* strip = app.add_subcommand("strip-check", "several-variable strip function check");
  strip->add_option("--strip-config", strip_config, "factored A/B terms (JSON)");

  auto* response = app.add_subcommand("response", "linear response formula vs finite difference");
  response->add_option("--observable", observable, "observable spec");
  response->add_option("--kick", kick, "perturbation spec (or 'boundary')");
  response->add_option("--time", t, "evaluation time");
  response->add_option("--epsilon", eps, "finite-difference step");
  response->add_flag("--steady", steady, "use the steady-state form");

  auto* dyson = app.add_subcommand("dyson", "higher-order response terms");
  dyson->add_option("--observable", observable, "observable spec");
  dyson->add_option("--kick", kick, "perturbation spec (or 'boundary')");
  dyson->add_option("--time", t, "evaluation time");
  dyson->add_option("--order", order, "highest order (1..3)");

  auto* oracle = app.add_subcommand("oracle", "brute-force evolved-state expectation");
  oracle->add_option("--observable", observable, "observable spec");
  oracle->add_option("--time", t, "evaluation time");
  oracle->add_option("--s", s, "past time");
  oracle->add_option("--sigma0", sigma0, "mixed | gibbs:<beta>");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(opts, t, observables);
    if (moller->parsed()) return run_moller(opts, t, observable, minus);
    if (a5->parsed()) return run_a5(opts, observable, picture, horizon);
    if (kms->parsed()) return run_kms(opts, grid);
    if (strip->parsed()) return run_strip(opts, strip_config);
    if (response->parsed()) return run_response(opts, observable, kick, t, eps, steady);
    if (dyson->parsed()) return run_dyson(opts, observable, kick, t, order);
    if (oracle->parsed()) return run_oracle(opts, observable, t, s, sigma0);
  } catch (const std::exception& e) {
    json err = {{"error", e.what()}};
    std::cerr << err.dump() << std::endl;
    try {
      fs::create_directories(opts.out_dir);
      write_json_file((fs::path(opts.out_dir) / "error.json").string(), err);
    } catch (...) {
    }
    return 1;
  }
  return 2;
}
