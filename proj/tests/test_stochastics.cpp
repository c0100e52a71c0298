#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pou/errors.hpp"
#include "pou/stochastics.hpp"

using namespace pou;

namespace {

const Distribution1D kDemand = Distribution1D::beta(-1.5, -0.9, 4.0, 2.0);

// Beta(4,2) on [0,1] has the polynomial CDF 5x^4(1-x) + x^5.
double beta42_cdf(double x) { return 5.0 * std::pow(x, 4) * (1.0 - x) + std::pow(x, 5); }

}  // namespace

TEST_CASE("rng is reproducible and open") {
  Rng a(5), b(5), c(6);
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  CHECK(Rng(5).next() != c.next());
  Rng r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform_open();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
  CHECK(Rng::derive_seed(42, 0) != Rng::derive_seed(42, 1));
}

TEST_CASE("pdf examples") {
  CHECK(pdf(kDemand, -1.6) == 0.0);
  CHECK(pdf(Distribution1D::beta(0.0, 1.0, 1.0, 1.0), 0.3) == doctest::Approx(1.0));
  const double oracle = std::pow(2.0 / 3.0, 3) * (1.0 / 3.0) * 20.0 / 0.6;
  CHECK(pdf(kDemand, -1.1) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(pdf(kDemand, -1.1) == doctest::Approx(3.292181).epsilon(1e-6));
}

TEST_CASE("cdf examples") {
  CHECK(cdf(kDemand, kDemand.support_hi()) == 1.0);
  CHECK(cdf(kDemand, kDemand.support_lo()) == 0.0);
  CHECK(cdf(kDemand, -1.2) == doctest::Approx(6.0 / 32.0).epsilon(1e-12));
  const auto unit = Distribution1D::beta(0.0, 1.0, 4.0, 2.0);
  CHECK(cdf(unit, 0.3103192) == doctest::Approx(beta42_cdf(0.3103192)).epsilon(1e-10));
  CHECK(cdf(unit, 0.3103192) == doctest::Approx(0.034855).epsilon(1e-4));

  for (double x = 0.0; x <= 1.0; x += 0.01) CHECK(std::abs(cdf(unit, x) - beta42_cdf(x)) <= 1e-10);
  // Non-integer shapes: I_x(a, b) = 1 - I_{1-x}(b, a).
  for (double x = 0.05; x < 1.0; x += 0.1) {
    CHECK(regularized_incomplete_beta(2.5, 0.7, x) + regularized_incomplete_beta(0.7, 2.5, 1.0 - x) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(cdf(Distribution1D::gaussian(0.0, 1.0), 1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
}

TEST_CASE("quantile examples and inverse property") {
  CHECK(quantile(Distribution1D::uniform(0.0, 1.0), 0.25) == doctest::Approx(0.25));
  CHECK(quantile(kDemand, 0.1875) == doctest::Approx(-1.2).epsilon(1e-9));
  CHECK(std::abs(quantile(Distribution1D::gaussian(0.0, 1.0), 0.5)) <= 1e-12);
  CHECK_THROWS_AS(quantile(kDemand, 0.0), DomainError);
  CHECK_THROWS_AS(quantile(kDemand, 1.0), DomainError);

  for (const auto& d : {kDemand, Distribution1D::uniform(-1.2, -1.0), Distribution1D::gaussian(1.0, 2.0),
                        Distribution1D::beta(0.0, 2.0, 0.5, 0.5)}) {
    for (double u = 0.01; u < 1.0; u += 0.01) CHECK(cdf(d, quantile(d, u)) == doctest::Approx(u).epsilon(1e-9));
  }
}

TEST_CASE("pdf and cdf invariants") {
  for (const auto& d : {kDemand, Distribution1D::uniform(-1.2, -1.0), Distribution1D::beta(0.0, 1.0, 0.8, 3.0)}) {
    double prev = 0.0;
    for (int k = 0; k <= 200; ++k) {
      const double x = d.support_lo() + (d.support_hi() - d.support_lo()) * k / 200.0;
      CHECK(pdf(d, x) >= 0.0);
      const double c = cdf(d, x);
      CHECK(c >= prev);
      prev = c;
    }
    CHECK(total_mass(MixedDensity1D::from_distribution(d)) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("sampling") {
  CHECK(sample(kDemand, 1, 9)[0] == sample(kDemand, 1, 9)[0]);

  const auto xs = sample(kDemand, 100000, 42);
  double mean = 0.0;
  std::size_t below = 0;
  for (double x : xs) {
    mean += x;
    below += x <= -1.2;
  }
  mean /= static_cast<double>(xs.size());
  CHECK(std::abs(mean + 1.1) <= 0.002);
  const double frac = static_cast<double>(below) / 1e5;
  CHECK(std::abs(frac - 0.1875) <= 3.0 * std::sqrt(0.1875 * 0.8125 / 1e5));

  // KS against the exact CDF at the 1% level.
  auto sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  double ks = 0.0;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(kDemand, sorted[i]);
    ks = std::max({ks, f - i / n, (i + 1) / n - f});
  }
  CHECK(ks < 1.628 / std::sqrt(n));
}

TEST_CASE("mixed densities") {
  const auto atom = MixedDensity1D::single_atom(-1.0);
  CHECK(total_mass(atom) == 1.0);
  CHECK(atom.pieces().empty());
  CHECK(atom.cdf(-1.0) == 1.0);
  CHECK(atom.cdf(-1.0000001) == 0.0);

  const auto dirac = MixedDensity1D::from_distribution(Distribution1D::dirac(-1.0));
  CHECK(dirac.atom_mass() == 1.0);

  const auto beta = MixedDensity1D::from_distribution(kDemand);
  CHECK(total_mass(beta) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(beta.cdf(-1.2) == doctest::Approx(0.1875).epsilon(1e-10));
  CHECK(beta.quantile(0.1875) == doctest::Approx(-1.2).epsilon(1e-8));

  // 2 + 3X pushes [-1.5, -0.9] onto [-2.5, -0.7] with density scaled by 1/3.
  auto piece = MixedDensity1D::affine_pushforward_piece(kDemand, 2.0, 3.0, -2.5, -0.7);
  CHECK(piece.density(2.0 + 3.0 * -1.1) == doctest::Approx(pdf(kDemand, -1.1) / 3.0));
  const MixedDensity1D pushed({piece}, {});
  CHECK(total_mass(pushed) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(pushed.continuous_mass() == doctest::Approx(1.0).epsilon(1e-12));

  const auto grid = MixedDensity1D::grid_piece({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
  const MixedDensity1D tri({grid}, {});
  CHECK(tri.density(0.5) == doctest::Approx(0.5));
  CHECK(total_mass(tri) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("mixed density sampling") {
  const auto m = MixedDensity1D::from_distribution(kDemand);
  Rng rng(3);
  const auto xs = m.sample(20000, rng);
  double mean = 0.0;
  for (double x : xs) mean += x;
  CHECK(mean / 20000.0 == doctest::Approx(-1.1).epsilon(0.005));
}

TEST_CASE("csv writers") {
  std::ostringstream d, a;
  write_density_csv(d, MixedDensity1D::from_distribution(kDemand), 16);
  write_atoms_csv(a, MixedDensity1D::single_atom(0.85));
  CHECK(d.str().rfind("x,f\n", 0) == 0);
  CHECK(a.str() == "location,mass\n0.85,1\n");
}

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(Distribution1D::beta(0.0, 0.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(Distribution1D::beta(0.0, 1.0, -1.0, 1.0), DomainError);
  CHECK_THROWS_AS(Distribution1D::gaussian(0.0, 0.0), DomainError);
  CHECK(kDemand.mean() == doctest::Approx(-1.1));
  CHECK(kDemand.stddev() == doctest::Approx(std::sqrt(0.36 * 2.0 / 63.0)));
}
