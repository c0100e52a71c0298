#pragma once

// Scenario files, the end-to-end hOPF/ccOPF comparison pipeline, and the
// CSV/JSON outputs it writes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pou/ccopf.hpp"
#include "pou/dcopf.hpp"
#include "pou/hopf.hpp"
#include "pou/metrics.hpp"
#include "pou/pce.hpp"

namespace pou {

struct ScenarioCase {
  std::string label;
  Network network;
};

struct Scenario {
  std::string name;
  std::vector<ScenarioCase> cases;
  std::vector<double> deltas;
  std::size_t n_samples = 100000;
  std::uint64_t seed = 42;
  std::string outputs = "out";
  BasisNormalization normalization = BasisNormalization::kClassical;

  /// Throws DomainError when deltas are empty/negative or n_samples is zero.
  void validate() const;
};

/// Names accepted by builtin_scenario().
std::vector<std::string> builtin_scenario_names();
/// "c1" (both H11 values), "c2", and "dirac". Throws DomainError for unknown names.
Scenario builtin_scenario(const std::string& name);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
/// Builtin name or path to a JSON scenario file.
Scenario load_scenario(const std::string& name_or_path);

struct DeltaResult {
  double delta = 0.0;
  Policy policy;
  std::vector<MixedDensity1D> ccopf_density;  // per generator
  std::vector<double> satisfaction;           // P(p_g ≤ p_max) per generator
  std::vector<double> violation;              // violation_mass of the policy law, per generator
  std::vector<TvdReport> tvd;                 // hOPF vs ccOPF, per generator
};

struct CaseResult {
  std::string label;
  Network network;
  Distribution1D demand;  // uncertain demand law (Dirac when deterministic)
  MixedDensity1D demand_density;
  ArgminCaseSplit split;
  std::vector<MixedDensity1D> hopf_density;  // per generator
  std::vector<double> hopf_violation;        // violation_mass of the hOPF law, per generator
  HopfEmpirical empirical;
  double empirical_max_violation = 0.0;
  std::vector<EmpiricalReport> empirical_reports;
  EquivalenceReport equivalence;
  std::vector<DeltaResult> deltas;

  int generator_bus_id(std::size_t g) const;
};

struct ScenarioResult {
  Scenario scenario;
  std::vector<CaseResult> cases;
};

/// Runs every stage for every case; failures surface as StageError.
ScenarioResult run_scenario(const Scenario& s, unsigned threads = 0);

nlohmann::json to_json(const PceVector& v);
nlohmann::json to_json(const Policy& p);
nlohmann::json to_json(const TvdReport& r);
nlohmann::json summary_json(const ScenarioResult& r);

/// Writes the density CSVs, atom tables, per-sample hOPF dump and summary.json.
/// Returns the written paths in creation order.
std::vector<std::filesystem::path> emit_figure_data(const ScenarioResult& r, const std::filesystem::path& out);

/// Permutation-identity residuals on the unconstrained cases of `c2` plus
/// `random_instances` random diagonal-H instances (n ≤ 5, L ≤ 2).
std::vector<std::pair<std::string, EquivalenceReport>> equivalence_suite(std::size_t random_instances,
                                                                         std::uint64_t seed);

}  // namespace pou
