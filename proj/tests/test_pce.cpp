#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pou/errors.hpp"
#include "pou/pce.hpp"

using namespace pou;

namespace {

const Distribution1D kDemand = Distribution1D::beta(-1.5, -0.9, 4.0, 2.0);

QpProblem c2_costs() { return QpProblem{{0.2, 0.2}, {0.5, 0.6}, 0.0, {-kInf, -kInf}, {kInf, kInf}}; }

PceVector demand_vector(const BasisPtr& b, std::vector<double> coeffs_by_term) {
  DenseMatrix c(coeffs_by_term.size(), 1);
  for (std::size_t l = 0; l < coeffs_by_term.size(); ++l) c(l, 0) = coeffs_by_term[l];
  return PceVector(b, c);
}

}  // namespace

TEST_CASE("gauss rules integrate germ moments") {
  // Beta(4,2) on [0,1]: E[ξ] = 2/3, E[ξ²] = 10/21.
  const auto r = gauss_rule(Distribution1D::beta(0.0, 1.0, 4.0, 2.0));
  double w = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k) {
    w += r.weights[k];
    m1 += r.weights[k] * r.nodes[k];
    m2 += r.weights[k] * r.nodes[k] * r.nodes[k];
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m1 == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(10.0 / 21.0).epsilon(1e-13));

  const auto g = gauss_rule(Distribution1D::gaussian(0.0, 1.0), 16);
  double m4 = 0.0;
  for (std::size_t k = 0; k < g.nodes.size(); ++k) m4 += g.weights[k] * std::pow(g.nodes[k], 4);
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("basis_for examples") {
  SUBCASE("Gaussian") {
    const auto b = basis_for(Distribution1D::gaussian(0.0, 1.0), 1);
    CHECK(b->functions[1].coeffs == std::vector<double>{0.0, 1.0});
    CHECK(b->gram[0] == doctest::Approx(1.0));
    CHECK(b->gram[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("Beta(4,2)") {
    const auto b = basis_for(kDemand, 1);
    CHECK(b->functions[1].coeffs[0] == doctest::Approx(-4.0).epsilon(1e-14));
    CHECK(b->functions[1].coeffs[1] == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(b->gram[1] == doctest::Approx(72.0 / 63.0).epsilon(1e-12));
    CHECK(b->gram[1] == doctest::Approx(36.0 * 2.0 / 63.0).epsilon(1e-12));
  }
  SUBCASE("Uniform") {
    const auto b = basis_for(Distribution1D::uniform(-1.0, 1.0), 1);
    CHECK(b->functions[1].coeffs[1] == doctest::Approx(1.0));
    CHECK(b->gram[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("orthonormal flag") {
    const auto b = basis_for(kDemand, 2, BasisNormalization::kOrthonormal);
    CHECK(b->gram[1] == 1.0);
    CHECK(b->gram[2] == 1.0);
    CHECK(b->functions[1].coeffs[1] == doctest::Approx(6.0 / std::sqrt(72.0 / 63.0)));
  }
  CHECK_THROWS_AS(basis_for(kDemand, 0), DomainError);
}

TEST_CASE("bases are orthogonal under quadrature") {
  for (const auto& d : {kDemand, Distribution1D::beta(0.0, 1.0, 0.5, 3.0), Distribution1D::uniform(-2.0, 5.0),
                        Distribution1D::gaussian(3.0, 2.0)}) {
    for (auto norm : {BasisNormalization::kClassical, BasisNormalization::kOrthonormal}) {
      const auto b = basis_for(d, 4, norm);
      const auto rule = gauss_rule(b->germ);
      for (std::size_t l = 0; l < b->size(); ++l)
        for (std::size_t k = 0; k < b->size(); ++k) {
          double ip = 0.0;
          for (std::size_t q = 0; q < rule.nodes.size(); ++q)
            ip += rule.weights[q] * b->eval(l, rule.nodes[q]) * b->eval(k, rule.nodes[q]);
          if (l == k) CHECK(ip == doctest::Approx(b->gram[l]).epsilon(1e-10));
          else CHECK(std::abs(ip) <= 1e-8);
        }
    }
  }
}

TEST_CASE("pce_of_demand examples") {
  const auto beta = pce_of_demand(kDemand);
  CHECK(beta.coeff(0, 0) == doctest::Approx(-1.1).epsilon(1e-14));
  CHECK(beta.coeff(1, 0) == doctest::Approx(0.1).epsilon(1e-12));

  const auto dirac = pce_of_demand(Distribution1D::dirac(-1.0));
  CHECK(dirac.coeff(0, 0) == -1.0);
  CHECK(dirac.coeff(1, 0) == 0.0);

  const auto uni = pce_of_demand(Distribution1D::uniform(-1.2, -1.0));
  CHECK(uni.coeff(0, 0) == doctest::Approx(-1.1).epsilon(1e-14));
  CHECK(uni.coeff(1, 0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("moments") {
  const auto m = moments(pce_of_demand(kDemand), 0);
  CHECK(m.mean == doctest::Approx(-1.1));
  CHECK(m.std == doctest::Approx(std::sqrt(0.01 * 72.0 / 63.0)).epsilon(1e-12));
  CHECK(m.std == doctest::Approx(0.106904).epsilon(1e-5));

  for (const auto& d : {kDemand, Distribution1D::uniform(-3.0, 1.0), Distribution1D::gaussian(2.0, 0.5),
                        Distribution1D::beta(0.0, 4.0, 0.7, 1.3)}) {
    for (auto norm : {BasisNormalization::kClassical, BasisNormalization::kOrthonormal}) {
      const auto mm = moments(pce_of_demand(d, norm), 0);
      CHECK(std::abs(mm.mean - d.mean()) <= 1e-12);
      CHECK(mm.std == doctest::Approx(d.stddev()).epsilon(1e-10));
    }
  }
}

TEST_CASE("demand expansion reproduces its law") {
  for (const auto& d : {kDemand, Distribution1D::uniform(-1.2, -1.0), Distribution1D::gaussian(-1.0, 0.1)}) {
    const auto v = pce_of_demand(d);
    auto xi = sample(v.basis().germ, 100000, 77);
    for (double& x : xi) x = v.evaluate(0, x);
    std::sort(xi.begin(), xi.end());
    double ks = 0.0;
    const double n = static_cast<double>(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
      const double f = cdf(d, xi[i]);
      ks = std::max({ks, f - i / n, (i + 1) / n - f});
    }
    CHECK(ks < 1.628 / std::sqrt(n));
  }
}

TEST_CASE("galerkin KKT on C2 without the bound") {
  const auto demand = pce_of_demand(kDemand);
  const auto sys = galerkin_kkt(c2_costs(), demand);
  CHECK(sys.matrix.rows() == 6);
  const auto z = solve_linear(sys.matrix, sys.rhs);
  CHECK(z[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(z[3] == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(z[4] == doctest::Approx(-0.05).epsilon(1e-12));

  // Linear costs only feed the first block.
  CHECK(sys.rhs[0] == -0.5);
  CHECK(sys.rhs[1] == -0.6);
  CHECK(sys.rhs[3] == 0.0);
  CHECK(sys.rhs[4] == 0.0);
}

TEST_CASE("galerkin KKT with a single term is the deterministic system") {
  auto b = basis_for(kDemand, 1);
  // A one-row expansion needs a zeroth-order basis view.
  auto b0 = std::make_shared<Basis>(*b);
  b0->functions.resize(1);
  b0->gram.resize(1);
  const auto sys = galerkin_kkt(c2_costs(), demand_vector(b0, {-1.0}));
  const DenseMatrix det(3, 3, {0.2, 0.0, 1.0, 0.0, 0.2, 1.0, 1.0, 1.0, 0.0});
  CHECK(max_abs_diff(sys.matrix, det) == 0.0);
  CHECK(sys.rhs == std::vector<double>{-0.5, -0.6, 1.0});
  CHECK(max_abs_diff(stacking_permutation(2, 1), DenseMatrix::identity(3)) == 0.0);
}

TEST_CASE("galerkin blocks decouple") {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + rng.next() % 5;
    QpProblem q;
    for (std::size_t i = 0; i < n; ++i) {
      q.h_diag.push_back(0.1 + rng.uniform_open());
      q.h_lin.push_back(rng.uniform_open());
    }
    q.lower.assign(n, -kInf);
    q.upper.assign(n, kInf);
    const auto b = basis_for(Distribution1D::beta(0.0, 1.0, 2.0, 3.0), 2);
    const auto demand = demand_vector(b, {-rng.uniform_open(), rng.uniform_open(), rng.uniform_open()});
    const auto sys = galerkin_kkt(q, demand);
    const auto z = solve_linear(sys.matrix, sys.rhs);
    for (std::size_t l = 0; l < 3; ++l) {
      QpProblem ql = q;
      if (l > 0) std::fill(ql.h_lin.begin(), ql.h_lin.end(), 0.0);
      ql.balance_rhs = demand.coeff(l, 0);
      const auto det = solve_equality_qp(ql);
      for (std::size_t i = 0; i < n; ++i) CHECK(z[l * (n + 1) + i] == doctest::Approx(det.primal[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("permutation equivalence") {
  SUBCASE("C2 unconstrained") {
    const auto r = permutation_equivalence_check(c2_costs(), pce_of_demand(kDemand));
    CHECK(r.solution_residual <= 1e-12);
    CHECK(r.rhs_residual <= 1e-12);
    CHECK(r.matrix_residual <= 1e-12);
    CHECK(r.z_policy[0] == doctest::Approx(0.8));
  }
  SUBCASE("random five-bus L = 2") {
    Rng rng(99);
    QpProblem q;
    for (int i = 0; i < 5; ++i) {
      q.h_diag.push_back(0.1 + rng.uniform_open());
      q.h_lin.push_back(rng.uniform_open());
    }
    q.lower.assign(5, -kInf);
    q.upper.assign(5, kInf);
    const auto b = basis_for(Distribution1D::beta(0.0, 1.0, 3.0, 1.5), 2);
    DenseMatrix c(3, 3);
    for (std::size_t l = 0; l < 3; ++l)
      for (std::size_t j = 0; j < 3; ++j) c(l, j) = rng.uniform_open() - 0.7;
    const auto r = permutation_equivalence_check(q, PceVector(b, c));
    CHECK(r.worst() <= 1e-10);
  }
  SUBCASE("permutation is orthogonal and maps stackings") {
    const auto m = stacking_permutation(3, 2);
    CHECK(max_abs_diff(m * m.transpose(), DenseMatrix::identity(8)) == 0.0);
    // Galerkin slot of λ0 is 3; policy slot is 6.
    CHECK(m(6, 3) == 1.0);
  }
}
