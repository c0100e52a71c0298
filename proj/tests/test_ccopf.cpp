#include <doctest.h>

#include <cmath>

#include "pou/ccopf.hpp"
#include "pou/errors.hpp"
#include "pou/hopf.hpp"
#include "pou/metrics.hpp"

using namespace pou;

namespace {

const Distribution1D kDemand = Distribution1D::beta(-1.5, -0.9, 4.0, 2.0);
constexpr double kGram = 72.0 / 63.0;

Network c1(double h11) { return Network::three_bus(h11, 0.2, 0.5, 0.6, 1.5, kDemand); }
Network c2() { return Network::three_bus(0.2, 0.2, 0.5, 0.6, 0.85, kDemand); }

Policy solve(const Network& net, double delta) {
  return solve_ccopf(net, net.demand_pce(), ChanceSpec::from_network(net, delta));
}

// Margin active on C2: eliminate generator 2 and the α0 row, then the
// stationarity condition in α1,1 = b is linear with c = δ√g:
//   b = -0.05 (c + g) / (c² + g),  a = 0.85 + c b.
struct MarginOracle {
  double a, b;
};
MarginOracle c2_oracle(double delta) {
  const double c = delta * std::sqrt(kGram);
  const double b = -0.05 * (c + kGram) / (c * c + kGram);
  return {0.85 + c * b, b};
}

// P(a + b(6ξ - 4) <= 0.85) for ξ ~ Beta(4,2), b < 0.
double c2_satisfaction_oracle(const MarginOracle& o) {
  const double xi = ((0.85 - o.a) / o.b + 4.0) / 6.0;
  return 1.0 - (5.0 * std::pow(xi, 4) * (1.0 - xi) + std::pow(xi, 5));
}

}  // namespace

TEST_CASE("C1 policies equal the closed-form coefficients") {
  for (double h11 : {0.2, 0.3}) {
    const auto net = c1(h11);
    const auto cs = ArgminCaseSplit::from_network(net);
    for (double delta : {0.0, 1.0, 2.0, 3.0}) {
      const auto p = solve(net, delta);
      CHECK(p.active_constraints.empty());
      CHECK(p.alpha(0, 0) == doctest::Approx(-cs.beta - cs.gamma * -1.1).epsilon(1e-12));
      CHECK(p.alpha(0, 1) == doctest::Approx(cs.beta - (1.0 - cs.gamma) * -1.1).epsilon(1e-12));
      CHECK(p.alpha(1, 0) == doctest::Approx(-cs.gamma * 0.1).epsilon(1e-12));
      CHECK(p.alpha(1, 1) == doctest::Approx(-(1.0 - cs.gamma) * 0.1).epsilon(1e-12));
      CHECK(p.kkt_residual <= 1e-8);
      CHECK(satisfaction_probability(p, kDemand, 0, 1.5) == 1.0);
    }
  }
}

TEST_CASE("C2 policies match the margin oracle") {
  struct Row {
    double delta, a, b, p;
  };
  // Frozen from c2_oracle / c2_satisfaction_oracle.
  for (const auto& r : {Row{2.0, 0.7886191, -0.0287083, 0.96514}, Row{3.0, 0.7889643, -0.0190312, 0.99864}}) {
    const auto o = c2_oracle(r.delta);
    CHECK(o.a == doctest::Approx(r.a).epsilon(1e-6));
    CHECK(o.b == doctest::Approx(r.b).epsilon(1e-6));
    CHECK(c2_satisfaction_oracle(o) == doctest::Approx(r.p).epsilon(1e-4));

    const auto p = solve(c2(), r.delta);
    CHECK(p.alpha(0, 0) == doctest::Approx(o.a).epsilon(1e-10));
    CHECK(p.alpha(1, 0) == doctest::Approx(o.b).epsilon(1e-10));
    CHECK(p.alpha(0, 1) == doctest::Approx(1.1 - o.a).epsilon(1e-10));
    CHECK(p.alpha(1, 1) == doctest::Approx(-0.1 - o.b).epsilon(1e-10));
    CHECK(p.active_constraints.size() == 1);
    CHECK(p.kkt_residual <= 1e-8);

    // Margin sits exactly on the limit.
    const auto m = moments(p.as_pce(), 0);
    CHECK(m.mean + r.delta * m.std == doctest::Approx(0.85).epsilon(1e-12));

    const double sat = satisfaction_probability(p, kDemand, 0, 0.85);
    CHECK(sat == doctest::Approx(c2_satisfaction_oracle(o)).epsilon(1e-10));
    CHECK(std::abs(sat - (r.delta == 2.0 ? 0.9651 : 0.9986)) <= 0.0005);
    CHECK(violation_probability(p, kDemand, 0, 0.85) == doctest::Approx(1.0 - sat));
  }
}

TEST_CASE("C2 with no tightening keeps the mean below the limit") {
  const auto p = solve(c2(), 0.0);
  CHECK(p.alpha(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(p.alpha(1, 0) == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(p.active_constraints.empty());
}

TEST_CASE("per-coefficient balance") {
  for (const auto& net : {c1(0.2), c1(0.3), c2()}) {
    for (double delta : {0.0, 0.5, 2.0, 3.0, 5.0}) {
      const auto p = solve(net, delta);
      for (std::size_t l = 0; l < p.terms(); ++l) {
        double s = p.demand.row_sum(l);
        for (std::size_t g = 0; g < p.generators(); ++g) s += p.alpha(l, g);
        CHECK(std::abs(s) <= 1e-9);
      }
    }
  }
}

TEST_CASE("policy evaluation") {
  const auto p1 = solve(c1(0.2), 2.0);
  auto v = evaluate_policy_at_demand(p1, -1.1);
  CHECK(v[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.3).epsilon(1e-12));
  v = evaluate_policy_at_demand(p1, -1.5);
  CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.5).epsilon(1e-12));
  const auto am = argmin(c1(0.2), c1(0.2).demand_realization(-1.5));
  CHECK(v[0] == doctest::Approx(am[0]).epsilon(1e-12));

  const auto p2 = solve(c2(), 2.0);
  const auto o = c2_oracle(2.0);
  // p^d = -1.5 is ξ = 0 (ψ1 = -4), the heaviest load, and overshoots the limit.
  v = evaluate_policy_at_demand(p2, -1.5);
  CHECK(v == evaluate_policy(p2, 0.0));
  CHECK(v[0] == doctest::Approx(o.a - 4.0 * o.b).epsilon(1e-12));
  CHECK(v[0] == doctest::Approx(0.903452).epsilon(1e-6));
  CHECK(std::abs(v[0] + v[1] - 1.5) <= 1e-12);
  // p^d = -0.9 is ξ = 1 (ψ1 = 2).
  v = evaluate_policy_at_demand(p2, -0.9);
  CHECK(v[0] == doctest::Approx(o.a + 2.0 * o.b).epsilon(1e-12));
  CHECK(v[0] == doctest::Approx(0.731202).epsilon(1e-6));
  CHECK(std::abs(v[0] + v[1] - 0.9) <= 1e-12);

  CHECK_THROWS_AS(evaluate_policy(p2, 1.5), DomainError);
  CHECK_THROWS_AS(evaluate_policy_at_demand(p2, -0.5), DomainError);
}

TEST_CASE("policy densities") {
  const auto p1 = solve(c1(0.2), 2.0);
  const auto d1 = policy_density(p1, kDemand, 0);
  CHECK(d1.atoms().empty());
  CHECK(d1.support_lo() == doctest::Approx(0.70));
  CHECK(d1.support_hi() == doctest::Approx(1.00));
  CHECK(total_mass(d1) == doctest::Approx(1.0).epsilon(1e-6));

  const auto h = analytic_hopf_density(c1(0.2));
  for (double x = 0.701; x < 1.0; x += 0.01) CHECK(std::abs(d1.density(x) - h[0].density(x)) <= 1e-9);

  const auto p2 = solve(c2(), 2.0);
  const auto d2 = policy_density(p2, kDemand, 0);
  CHECK(d2.support_lo() == doctest::Approx(0.731202).epsilon(1e-6));
  CHECK(d2.support_hi() == doctest::Approx(0.903452).epsilon(1e-6));
  CHECK(violation_mass(d2, 0.85, Side::kUpper) ==
        doctest::Approx(violation_probability(p2, kDemand, 0, 0.85)).epsilon(1e-9));
  CHECK(std::abs(violation_mass(d2, 0.85, Side::kUpper) - 0.0349) <= 0.0005);
  CHECK(total_mass(d2) == doctest::Approx(1.0).epsilon(1e-6));

  const auto net = Network::three_bus(0.2, 0.2, 0.5, 0.6, 0.85, Distribution1D::dirac(-1.0));
  const auto pd = solve(net, 2.0);
  const auto dd = policy_density(pd, Distribution1D::dirac(-1.0), 0);
  REQUIRE(dd.atoms().size() == 1);
  CHECK(dd.atoms()[0].location == doctest::Approx(0.75));
  CHECK(dd.atom_mass() == 1.0);
}

TEST_CASE("tightening is monotone") {
  double prev_b = kInf, prev_sat = 0.0;
  for (double delta = 0.0; delta <= 6.0; delta += 0.25) {
    const auto p = solve(c2(), delta);
    const double b = std::abs(p.alpha(1, 0));
    const double sat = satisfaction_probability(p, kDemand, 0, 0.85);
    CHECK(b <= prev_b + 1e-12);
    CHECK(sat >= prev_sat - 1e-12);
    prev_b = b;
    prev_sat = sat;
  }
}

TEST_CASE("unconstrained solutions match the closed form on random instances") {
  Rng rng(31);
  for (int k = 0; k < 100; ++k) {
    const double h11 = 0.05 + rng.uniform_open(), h22 = 0.05 + rng.uniform_open();
    const double h1 = rng.uniform_open(), h2 = rng.uniform_open();
    const double lo = -2.0 * rng.uniform_open() - 0.5, w = 0.1 + rng.uniform_open();
    const auto dist = Distribution1D::beta(lo, lo + w, 1.0 + 4.0 * rng.uniform_open(), 1.0 + 4.0 * rng.uniform_open());
    const auto net = Network::three_bus(h11, h22, h1, h2, kInf, dist);
    const auto p = solve(net, 2.0);
    const auto cs = ArgminCaseSplit::from_costs(h11, h22, h1, h2, kInf);
    const auto v = net.demand_pce();
    CHECK(p.alpha(0, 0) == doctest::Approx(-cs.beta - cs.gamma * v.row_sum(0)).epsilon(1e-9));
    CHECK(p.alpha(1, 1) == doctest::Approx(-(1.0 - cs.gamma) * v.row_sum(1)).epsilon(1e-9));
  }
}

TEST_CASE("lower-bound margin and infeasible tightening") {
  // Mirror C2: push generator 1 up against a lower limit.
  const auto net = Network({Bus{1, Generator{0.2, 0.6, 0.45, kInf}, 0.0}, Bus{2, Generator{0.2, 0.5}, 0.0},
                            Bus{3, std::nullopt, kDemand}});
  const auto p = solve(net, 2.0);
  const auto m = moments(p.as_pce(), 0);
  CHECK(m.mean - 2.0 * m.std == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(p.kkt_residual <= 1e-8);

  const auto tight = Network({Bus{1, Generator{0.2, 0.5, 0.0, 0.3}, 0.0}, Bus{2, Generator{0.2, 0.6, 0.0, 0.3}, 0.0},
                              Bus{3, std::nullopt, kDemand}});
  CHECK_THROWS_AS(solve(tight, 2.0), InfeasibleTightening);
}
