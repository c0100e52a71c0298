#pragma once

#include <span>
#include <vector>

#include "pou/stochastics.hpp"

namespace pou {

struct TvdReport {
  double value = 0.0;            // continuous_part + atom_part, in [0, 1]
  double continuous_part = 0.0;  // ½ ∫ |f_a − f_b|
  double atom_part = 0.0;        // ½ Σ |mass_a − mass_b| over atom locations
  std::size_t grid_points = 0;   // integration intervals between breakpoints
  double est_error = 0.0;
};

/// Total variational distance between two mixed laws. Atoms at distinct
/// locations, or against a continuous law, contribute half their mass.
TvdReport tvd(const MixedDensity1D& a, const MixedDensity1D& b);

enum class Side { kUpper, kLower };

/// Mass strictly beyond `bound`. An atom sitting exactly at the bound satisfies it.
double violation_mass(const MixedDensity1D& m, double bound, Side side);

/// Pools samples within 1e-9 of a candidate into atoms and bins the rest with
/// the Freedman–Diaconis width. Needs at least 100 samples.
MixedDensity1D histogram_density(std::span<const double> samples, std::span<const double> atom_candidates);

}  // namespace pou
