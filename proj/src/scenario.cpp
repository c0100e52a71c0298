#include "pou/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pou/errors.hpp"

namespace pou {

using nlohmann::json;

void Scenario::validate() const {
  if (cases.empty()) throw DomainError("scenario '" + name + "': no cases");
  if (deltas.empty()) throw DomainError("scenario '" + name + "': deltas must be nonempty");
  for (double d : deltas)
    if (!(d >= 0.0) || !std::isfinite(d)) throw DomainError("scenario '" + name + "': delta must be ≥ 0");
  if (n_samples < 1) throw DomainError("scenario '" + name + "': n_samples must be ≥ 1");
}

// ---------------------------------------------------------------------------
// builtins

namespace {

Distribution1D reference_demand() { return Distribution1D::beta(-1.5, -0.9, 4.0, 2.0); }

}  // namespace

std::vector<std::string> builtin_scenario_names() { return {"c1", "c2", "dirac"}; }

Scenario builtin_scenario(const std::string& name) {
  Scenario s;
  s.name = name;
  s.deltas = {2.0, 3.0};
  s.outputs = "out/" + name;
  if (name == "c1") {
    s.cases.push_back({"h11_0.2", Network::three_bus(0.2, 0.2, 0.5, 0.6, 1.5, reference_demand())});
    s.cases.push_back({"h11_0.3", Network::three_bus(0.3, 0.2, 0.5, 0.6, 1.5, reference_demand())});
  } else if (name == "c2") {
    s.cases.push_back({"c2", Network::three_bus(0.2, 0.2, 0.5, 0.6, 0.85, reference_demand())});
  } else if (name == "dirac") {
    s.cases.push_back({"dirac", Network::three_bus(0.2, 0.2, 0.5, 0.6, 0.85, Distribution1D::dirac(-1.0))});
  } else {
    throw DomainError("unknown builtin scenario '" + name + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

double bound_from_json(const json& j, const char* key, double missing) {
  if (!j.contains(key) || j.at(key).is_null()) return missing;
  return j.at(key).get<double>();
}

json bound_to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Distribution1D distribution_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "beta") {
    const auto sup = j.at("support").get<std::vector<double>>();
    const auto shape = j.at("shape").get<std::vector<double>>();
    if (sup.size() != 2 || shape.size() != 2) throw DomainError("beta demand needs support[2] and shape[2]");
    return Distribution1D::beta(sup[0], sup[1], shape[0], shape[1]);
  }
  if (kind == "uniform") {
    const auto sup = j.at("support").get<std::vector<double>>();
    if (sup.size() != 2) throw DomainError("uniform demand needs support[2]");
    return Distribution1D::uniform(sup[0], sup[1]);
  }
  if (kind == "gaussian") return Distribution1D::gaussian(j.at("mean").get<double>(), j.at("std").get<double>());
  if (kind == "dirac") return Distribution1D::dirac(j.at("location").get<double>());
  throw UnsupportedDistribution("unknown demand kind '" + kind + "'");
}

json distribution_to_json(const Distribution1D& d) {
  switch (d.kind()) {
    case DistKind::kBeta:
      return {{"kind", "beta"},
              {"support", {d.support_lo(), d.support_hi()}},
              {"shape", {d.shape_a(), d.shape_b()}}};
    case DistKind::kUniform: return {{"kind", "uniform"}, {"support", {d.support_lo(), d.support_hi()}}};
    case DistKind::kGaussian: return {{"kind", "gaussian"}, {"mean", d.gaussian_mean()}, {"std", d.gaussian_std()}};
    case DistKind::kDirac: return {{"kind", "dirac"}, {"location", d.location()}};
  }
  return nullptr;
}

Network network_from_json(const json& j) {
  std::vector<Bus> buses;
  for (const auto& jb : j.at("buses")) {
    Bus b;
    b.id = jb.at("id").get<int>();
    if (jb.contains("generator") && !jb.at("generator").is_null()) {
      const auto& g = jb.at("generator");
      b.generator = Generator{g.at("cost_quadratic").get<double>(), g.value("cost_linear", 0.0),
                              bound_from_json(g, "p_min", -kInf), bound_from_json(g, "p_max", kInf)};
    }
    if (jb.contains("demand")) {
      const auto& d = jb.at("demand");
      if (d.is_number()) b.demand = d.get<double>();
      else b.demand = distribution_from_json(d);
    }
    buses.push_back(std::move(b));
  }
  std::vector<Line> lines;
  if (j.contains("lines")) {
    for (const auto& jl : j.at("lines")) {
      lines.push_back({jl.at("from").get<int>(), jl.at("to").get<int>(), bound_from_json(jl, "limit", kInf)});
    }
  }
  return Network(std::move(buses), std::move(lines));
}

json network_to_json(const Network& net) {
  json buses = json::array();
  for (const Bus& b : net.buses()) {
    json jb{{"id", b.id}};
    if (b.generator) {
      jb["generator"] = {{"cost_quadratic", b.generator->cost_quadratic},
                         {"cost_linear", b.generator->cost_linear},
                         {"p_min", bound_to_json(b.generator->p_min)},
                         {"p_max", bound_to_json(b.generator->p_max)}};
    }
    if (const auto* d = std::get_if<Distribution1D>(&b.demand)) jb["demand"] = distribution_to_json(*d);
    else jb["demand"] = std::get<double>(b.demand);
    buses.push_back(std::move(jb));
  }
  json lines = json::array();
  for (const Line& l : net.lines()) lines.push_back({{"from", l.from}, {"to", l.to}, {"limit", bound_to_json(l.limit)}});
  return {{"buses", buses}, {"lines", lines}};
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  try {
    Scenario s;
    s.name = j.value("name", std::string("scenario"));
    if (j.contains("cases")) {
      for (const auto& jc : j.at("cases")) {
        s.cases.push_back({jc.value("label", s.name), network_from_json(jc)});
      }
    } else {
      s.cases.push_back({s.name, network_from_json(j)});
    }
    s.deltas = j.at("deltas").get<std::vector<double>>();
    s.n_samples = j.value("n_samples", std::size_t{100000});
    s.seed = j.value("seed", std::uint64_t{42});
    s.outputs = j.value("outputs", "out/" + s.name);
    const auto norm = j.value("normalization", std::string("classical"));
    if (norm == "classical") s.normalization = BasisNormalization::kClassical;
    else if (norm == "orthonormal") s.normalization = BasisNormalization::kOrthonormal;
    else throw DomainError("unknown normalization '" + norm + "'");
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw DomainError(std::string("scenario JSON: ") + e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json cases = json::array();
  for (const auto& c : s.cases) {
    json jc = network_to_json(c.network);
    jc["label"] = c.label;
    cases.push_back(std::move(jc));
  }
  return {{"name", s.name},
          {"cases", cases},
          {"deltas", s.deltas},
          {"n_samples", s.n_samples},
          {"seed", s.seed},
          {"outputs", s.outputs},
          {"normalization", s.normalization == BasisNormalization::kClassical ? "classical" : "orthonormal"}};
}

Scenario load_scenario(const std::string& name_or_path) {
  for (const auto& b : builtin_scenario_names())
    if (b == name_or_path) return builtin_scenario(b);
  std::ifstream in(name_or_path);
  if (!in) throw IoError("cannot open scenario file '" + name_or_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse '" + name_or_path + "': " + e.what());
  }
  return scenario_from_json(j);
}

json to_json(const PceVector& v) {
  json rows = json::array();
  for (std::size_t l = 0; l < v.terms(); ++l) {
    json row = json::array();
    for (std::size_t i = 0; i < v.components(); ++i) row.push_back(v.coeff(l, i));
    rows.push_back(std::move(row));
  }
  return {{"basis_id", v.basis().id}, {"coeffs", rows}};
}

json to_json(const Policy& p) {
  json j = to_json(p.as_pce());
  json out{{"basis_id", j["basis_id"]}, {"alpha", j["coeffs"]}, {"delta", p.delta}};
  return out;
}

json to_json(const TvdReport& r) {
  return {{"value", r.value},
          {"continuous_part", r.continuous_part},
          {"atom_part", r.atom_part},
          {"grid_points", r.grid_points},
          {"est_error", r.est_error}};
}

// ---------------------------------------------------------------------------
// pipeline

int CaseResult::generator_bus_id(std::size_t g) const {
  return network.buses()[network.generator_buses()[g]].id;
}

namespace {

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

ScenarioResult run_scenario(const Scenario& s, unsigned threads) {
  s.validate();
  ScenarioResult result{s, {}};
  for (const ScenarioCase& sc : s.cases) {
    const Network& net = sc.network;
    const std::string tag = s.name + "/" + sc.label;
    const std::size_t ng = net.generator_count();

    const Distribution1D demand =
        net.uncertain_demand() ? *net.uncertain_demand() : Distribution1D::dirac(net.fixed_demand());
    const PceVector demand_pce = stage(tag + ":pce", [&] { return net.demand_pce(s.normalization); });

    CaseResult cr{sc.label, net, demand, MixedDensity1D::from_distribution(demand), {}, {}, {}, {}, 0.0, {}, {}, {}};
    cr.split = stage(tag + ":argmin", [&] { return ArgminCaseSplit::from_network(net); });
    cr.hopf_density = stage(tag + ":hopf-density", [&] { return analytic_hopf_density(net); });
    for (std::size_t g = 0; g < ng; ++g) {
      cr.hopf_violation.push_back(violation_mass(cr.hopf_density[g], net.generator(g).p_max, Side::kUpper) +
                                  violation_mass(cr.hopf_density[g], net.generator(g).p_min, Side::kLower));
    }

    cr.empirical = stage(tag + ":hopf-sampling", [&] { return run_hopf(net, s.n_samples, s.seed, threads); });
    cr.empirical_max_violation = max_constraint_violation(net, cr.empirical);
    for (std::size_t g = 0; g < ng; ++g) {
      cr.empirical_reports.push_back(empirical_vs_analytic_report(cr.empirical, cr.hopf_density[g], g));
    }

    for (double delta : s.deltas) {
      DeltaResult dr = stage(tag + ":ccopf(delta=" + std::to_string(delta) + ")", [&] {
        Policy p = solve_ccopf(net, demand_pce, ChanceSpec::from_network(net, delta));
        return DeltaResult{delta, std::move(p), {}, {}, {}, {}};
      });
      stage(tag + ":metrics", [&] {
        for (std::size_t g = 0; g < ng; ++g) {
          const Generator& gen = net.generator(g);
          dr.ccopf_density.push_back(policy_density(dr.policy, demand, g));
          dr.satisfaction.push_back(satisfaction_probability(dr.policy, demand, g, gen.p_max));
          dr.violation.push_back(violation_mass(dr.ccopf_density[g], gen.p_max, Side::kUpper) +
                                 violation_mass(dr.ccopf_density[g], gen.p_min, Side::kLower));
          dr.tvd.push_back(tvd(cr.hopf_density[g], dr.ccopf_density[g]));
        }
        return 0;
      });
      cr.deltas.push_back(std::move(dr));
    }

    cr.equivalence = stage(tag + ":equivalence", [&] {
      const auto q = build_qp(net, net.demand_realization(demand.mean()));
      return permutation_equivalence_check(q, demand_pce);
    });
    result.cases.push_back(std::move(cr));
  }
  return result;
}

namespace {

std::string delta_tag(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", d);
  return buf;
}

json empirical_json(const EmpiricalReport& r) {
  return {{"n", r.n},
          {"n_continuous", r.n_continuous},
          {"ks_statistic", r.ks_statistic},
          {"ks_critical_1pct", r.ks_critical_1pct},
          {"atom_frequency", r.atom_frequency},
          {"atom_mass", r.atom_mass},
          {"atom_z", r.atom_z}};
}

}  // namespace

json summary_json(const ScenarioResult& r) {
  json cases = json::array();
  for (const CaseResult& c : r.cases) {
    const std::size_t ng = c.network.generator_count();
    json jc{{"label", c.label},
            {"beta", c.split.beta},
            {"gamma", c.split.gamma},
            {"switch_point", bound_to_json(c.split.switch_point)},
            {"demand", distribution_to_json(c.demand)},
            {"demand_pce", to_json(c.deltas.empty() ? c.network.demand_pce(r.scenario.normalization)
                                                    : c.deltas.front().policy.demand)}};
    json hopf{{"max_constraint_violation", c.empirical_max_violation}, {"n_samples", c.empirical.n}};
    for (std::size_t g = 0; g < ng; ++g) {
      const std::string bus = "bus" + std::to_string(c.generator_bus_id(g));
      hopf["atom_mass_" + bus] = c.hopf_density[g].atom_mass();
      hopf["violation_" + bus] = c.hopf_violation[g];
      hopf["empirical_" + bus] = empirical_json(c.empirical_reports[g]);
    }
    jc["hopf"] = hopf;
    jc["equivalence"] = {{"solution_residual", c.equivalence.solution_residual},
                         {"rhs_residual", c.equivalence.rhs_residual},
                         {"matrix_residual", c.equivalence.matrix_residual},
                         {"transposed_matrix_residual", c.equivalence.transposed_matrix_residual}};
    json table = json::array();
    for (const DeltaResult& d : c.deltas) {
      json row{{"delta", d.delta}, {"policy", to_json(d.policy)}, {"kkt_residual", d.policy.kkt_residual}};
      std::optional<double> p_sat;
      for (std::size_t g = 0; g < ng; ++g) {
        const std::string bus = "bus" + std::to_string(c.generator_bus_id(g));
        row["tvd_" + bus] = d.tvd[g].value;
        row["p_sat_" + bus] = d.satisfaction[g];
        row["violation_" + bus] = d.violation[g];
        if (!p_sat && std::isfinite(c.network.generator(g).p_max)) p_sat = d.satisfaction[g];
      }
      row["p_sat"] = p_sat.value_or(1.0);
      table.push_back(std::move(row));
    }
    jc["table"] = table;
    cases.push_back(std::move(jc));
  }
  return {{"scenario", r.scenario.name},
          {"seed", r.scenario.seed},
          {"n_samples", r.scenario.n_samples},
          {"normalization", r.scenario.normalization == BasisNormalization::kClassical ? "classical" : "orthonormal"},
          {"cases", cases}};
}

std::vector<std::filesystem::path> emit_figure_data(const ScenarioResult& r, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create '" + out.string() + "': " + ec.message());

  std::vector<fs::path> written;
  auto write = [&](const std::string& name, const auto& body) {
    const fs::path p = out / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot write '" + p.string() + "'");
    body(os);
    if (!os) throw IoError("write failed for '" + p.string() + "'");
    written.push_back(p);
  };

  const bool multi = r.cases.size() > 1;
  for (const CaseResult& c : r.cases) {
    const std::string sfx = multi ? "_" + c.label : "";
    write("pdf_demand" + sfx + ".csv", [&](std::ostream& os) { write_density_csv(os, c.demand_density); });
    if (!c.demand_density.atoms().empty()) {
      write("atoms_demand" + sfx + ".csv", [&](std::ostream& os) { write_atoms_csv(os, c.demand_density); });
    }
    for (std::size_t g = 0; g < c.network.generator_count(); ++g) {
      const std::string bus = "bus" + std::to_string(c.generator_bus_id(g));
      write("pdf_hopf_" + bus + sfx + ".csv", [&](std::ostream& os) { write_density_csv(os, c.hopf_density[g]); });
      write("atoms_hopf_" + bus + sfx + ".csv", [&](std::ostream& os) { write_atoms_csv(os, c.hopf_density[g]); });
      for (const DeltaResult& d : c.deltas) {
        const std::string dt = "_d" + delta_tag(d.delta);
        write("pdf_ccopf_" + bus + dt + sfx + ".csv",
              [&](std::ostream& os) { write_density_csv(os, d.ccopf_density[g]); });
        if (!d.ccopf_density[g].atoms().empty()) {
          write("atoms_ccopf_" + bus + dt + sfx + ".csv",
                [&](std::ostream& os) { write_atoms_csv(os, d.ccopf_density[g]); });
        }
      }
    }
    write("hopf_samples" + sfx + ".csv", [&](std::ostream& os) { write_hopf_csv(os, c.empirical); });
  }
  write("summary.json", [&](std::ostream& os) { os << summary_json(r).dump(2) << '\n'; });
  return written;
}

std::vector<std::pair<std::string, EquivalenceReport>> equivalence_suite(std::size_t random_instances,
                                                                         std::uint64_t seed) {
  std::vector<std::pair<std::string, EquivalenceReport>> out;
  for (const auto& sc : builtin_scenario("c2").cases) {
    const Network& net = sc.network;
    const auto q = build_qp(net, net.demand_realization(net.uncertain_demand()->mean()));
    out.emplace_back("c2 unconstrained", permutation_equivalence_check(q, net.demand_pce()));
  }
  Rng rng(seed);
  for (std::size_t k = 0; k < random_instances; ++k) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.next() % 5);
    const std::size_t order = 1 + static_cast<std::size_t>(rng.next() % 2);
    const std::size_t buses = 1 + static_cast<std::size_t>(rng.next() % 3);
    QpProblem q;
    for (std::size_t i = 0; i < n; ++i) {
      q.h_diag.push_back(0.05 + rng.uniform_open());
      q.h_lin.push_back(2.0 * rng.uniform_open() - 1.0);
      q.lower.push_back(-kInf);
      q.upper.push_back(kInf);
    }
    const auto germ = Distribution1D::beta(0.0, 1.0, 1.0 + 4.0 * rng.uniform_open(), 1.0 + 4.0 * rng.uniform_open());
    DenseMatrix c(order + 1, buses);
    for (std::size_t l = 0; l <= order; ++l)
      for (std::size_t b = 0; b < buses; ++b) c(l, b) = l == 0 ? -rng.uniform_open() : 0.2 * (rng.uniform_open() - 0.5);
    std::ostringstream label;
    label << "random #" << k << " (n=" << n << ", L=" << order << ")";
    out.emplace_back(label.str(), permutation_equivalence_check(q, PceVector(basis_for(germ, order), std::move(c))));
  }
  return out;
}

}  // namespace pou
