#pragma once

// In-hindsight OPF: one OPF solve per demand realization, plus the exact
// density push-forward through the two-generator argmin.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pou/dcopf.hpp"
#include "pou/stochastics.hpp"

namespace pou {

struct HopfEmpirical {
  std::size_t n = 0;
  std::size_t generators = 0;
  std::uint64_t seed = 0;
  std::vector<double> demand;   // uncertain demand per sample
  std::vector<double> samples;  // n × generators, row-major
  std::vector<double> costs;    // optimal objective per sample

  double at(std::size_t k, std::size_t g) const { return samples[k * generators + g]; }
  std::vector<double> column(std::size_t g) const;
};

/// Samples are processed in fixed-size chunks with per-chunk derived seeds, so
/// the result does not depend on `threads` (0 = hardware concurrency).
HopfEmpirical run_hopf(const Network& net, std::size_t n, std::uint64_t seed, unsigned threads = 0);

/// Largest bound or balance violation over all rows.
double max_constraint_violation(const Network& net, const HopfEmpirical& e);

/// Per-generator law of the hOPF dispatch for a two-generator network with an
/// upper limit on generator 1 and one bounded uncertain load.
std::vector<MixedDensity1D> analytic_hopf_density(const Network& net);

struct EmpiricalReport {
  std::size_t n = 0;
  std::size_t n_continuous = 0;
  double ks_statistic = 0.0;      // continuous part, conditional on missing every atom
  double ks_critical_1pct = 0.0;  // 1.628 / √n_continuous
  double atom_frequency = 0.0;
  double atom_mass = 0.0;
  double atom_z = 0.0;  // binomial z-score of the atom frequency
};

EmpiricalReport empirical_vs_analytic_report(const HopfEmpirical& e, const MixedDensity1D& a,
                                             std::size_t generator);

/// Kolmogorov–Smirnov statistic of `samples` against `cdf` (sorts a copy).
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// One row per sample: "demand,p1,...,cost".
void write_hopf_csv(std::ostream& os, const HopfEmpirical& e);

}  // namespace pou
