// pou: compare chance-constrained and in-hindsight DC-OPF on a scenario.
//
//   pou run c2 --samples 100000 --seed 42 --out out/c2
//   pou tables
//   pou check
//   pou show c2 > my_scenario.json

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "pou/errors.hpp"
#include "pou/scenario.hpp"

namespace {

struct Overrides {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::vector<double> deltas;
  bool orthonormal = false;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--samples", o.samples, "Monte-Carlo samples for the hOPF stage")->check(CLI::PositiveNumber);
  cmd->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& s) { o.seed = s, o.seed_set = true; },
                                          "Master seed");
  cmd->add_option("--delta", o.deltas, "Tightening multiplier (repeatable)")->take_all()->allow_extra_args(false);
  cmd->add_flag("--orthonormal", o.orthonormal, "Use unit-Gram basis polynomials");
  cmd->add_option("--threads", o.threads, "Worker threads for sampling (0 = all cores)");
}

void apply(pou::Scenario& s, const Overrides& o) {
  if (o.samples) s.n_samples = o.samples;
  if (o.seed_set) s.seed = o.seed;
  if (!o.out.empty()) s.outputs = o.out;
  if (!o.deltas.empty()) s.deltas = o.deltas;
  if (o.orthonormal) s.normalization = pou::BasisNormalization::kOrthonormal;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f %%", 100.0 * v);
  return buf;
}

std::string num(double v, const char* f = "%.4f") {
  if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_run(const std::string& name, const Overrides& o) {
  pou::Scenario s = pou::load_scenario(name);
  apply(s, o);
  const auto result = pou::run_scenario(s, o.threads);
  const auto files = pou::emit_figure_data(result, s.outputs);
  for (const auto& f : files) std::cout << f.string() << '\n';
  return 0;
}

void print_table_one(const std::vector<pou::ScenarioResult>& results) {
  std::cout << "Numerical values\n";
  std::cout << "  case            H11     H22     h1      h2      p1_max  switch\n";
  for (const auto& r : results)
    for (const auto& c : r.cases) {
      const auto& g1 = c.network.generator(0);
      const auto& g2 = c.network.generator(1);
      std::printf("  %-14s  %-6s  %-6s  %-6s  %-6s  %-6s  %s\n", (r.scenario.name + "/" + c.label).c_str(),
                  num(g1.cost_quadratic, "%.2f").c_str(), num(g2.cost_quadratic, "%.2f").c_str(),
                  num(g1.cost_linear, "%.2f").c_str(), num(g2.cost_linear, "%.2f").c_str(),
                  num(g1.p_max, "%.2f").c_str(), num(c.split.switch_point, "%.2f").c_str());
    }
  std::cout << '\n';
}

void print_table_two(const std::vector<pou::ScenarioResult>& results) {
  std::cout << "hOPF vs ccOPF\n";
  std::cout << "  case            solves(hOPF)  max violation(hOPF)  balance(ccOPF KKT)  P(viol, ccOPF)\n";
  for (const auto& r : results)
    for (const auto& c : r.cases) {
      double worst_kkt = 0.0, worst_viol = 0.0;
      for (const auto& d : c.deltas) {
        worst_kkt = std::max(worst_kkt, d.policy.kkt_residual);
        for (double v : d.violation) worst_viol = std::max(worst_viol, v);
      }
      std::printf("  %-14s  %-12zu  %-19s  %-18s  %s\n", (r.scenario.name + "/" + c.label).c_str(), c.empirical.n,
                  num(c.empirical_max_violation, "%.1e").c_str(), num(worst_kkt, "%.1e").c_str(),
                  num(worst_viol).c_str());
    }
  std::cout << '\n';
}

void print_table_three(const std::vector<pou::ScenarioResult>& results) {
  std::cout << "Constraint satisfaction and total variational distance\n";
  std::cout << "  case            delta  P(p1 <= p1_max)  TVD bus1  TVD bus2\n";
  for (const auto& r : results)
    for (const auto& c : r.cases)
      for (const auto& d : c.deltas) {
        std::printf("  %-14s  %-5s  %-15s  %-8s  %s\n", (r.scenario.name + "/" + c.label).c_str(),
                    num(d.delta, "%.1f").c_str(), pct(d.satisfaction[0]).c_str(), num(d.tvd[0].value).c_str(),
                    num(d.tvd[1].value).c_str());
      }
}

int cmd_tables(const Overrides& o) {
  std::vector<pou::ScenarioResult> results;
  for (const char* name : {"c1", "c2"}) {
    pou::Scenario s = pou::builtin_scenario(name);
    apply(s, o);
    if (!o.samples) s.n_samples = 20000;
    results.push_back(pou::run_scenario(s, o.threads));
  }
  print_table_one(results);
  print_table_two(results);
  print_table_three(results);
  return 0;
}

int cmd_check(std::size_t random_instances, std::uint64_t seed) {
  constexpr double kTol = 1e-10;
  bool ok = true;
  std::cout << "instance                        |Mz_h-z_s|  |Mb_h-b_s|  |MA_hM'-A_s|  |M'A_hM-A_s|\n";
  for (const auto& [label, rep] : pou::equivalence_suite(random_instances, seed)) {
    const bool pass = rep.worst() <= kTol;
    ok = ok && pass;
    std::printf("%-30s  %.2e    %.2e    %.2e     %.2e     %s\n", label.c_str(), rep.solution_residual,
                rep.rhs_residual, rep.matrix_residual, rep.transposed_matrix_residual, pass ? "ok" : "FAIL");
  }
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Price of uncertainty in DC-OPF: ccOPF policies vs in-hindsight OPF"};
  app.require_subcommand(1);

  Overrides run_o;
  std::string scenario;
  auto* run = app.add_subcommand("run", "Run a builtin scenario (c1, c2, dirac) or a JSON scenario file");
  run->add_option("scenario", scenario, "Builtin name or scenario.json")->required();
  run->add_option("--out", run_o.out, "Output directory");
  add_common(run, run_o);

  Overrides tab_o;
  auto* tables = app.add_subcommand("tables", "Print the comparison tables for the builtin cases");
  add_common(tables, tab_o);

  std::size_t random_instances = 20;
  std::uint64_t check_seed = 7;
  auto* check = app.add_subcommand("check", "Run the KKT permutation-equivalence suite");
  check->add_option("--random", random_instances, "Random instances");
  check->add_option("--seed", check_seed, "Seed for random instances");

  std::string show_name;
  auto* show = app.add_subcommand("show", "Print a builtin scenario as JSON");
  show->add_option("scenario", show_name)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario, run_o);
    if (*tables) return cmd_tables(tab_o);
    if (*check) return cmd_check(random_instances, check_seed);
    if (*show) {
      std::cout << pou::scenario_to_json(pou::builtin_scenario(show_name)).dump(2) << '\n';
      return 0;
    }
  } catch (const pou::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
