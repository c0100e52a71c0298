#include "pou/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pou/errors.hpp"

namespace pou {

namespace {

double piece_mass(const DensityPiece& p, double lo, double hi) {
  lo = std::max(lo, p.lo);
  hi = std::min(hi, p.hi);
  if (!(hi > lo)) return 0.0;
  if (p.mass_below) return p.mass_below(hi) - p.mass_below(lo);
  return adaptive_simpson(p.density, lo, hi, 1e-10);
}

// Pieces of m that cover [x0, x1] entirely.
std::vector<const DensityPiece*> covering(const MixedDensity1D& m, double x0, double x1) {
  std::vector<const DensityPiece*> out;
  const double mid = 0.5 * (x0 + x1);
  for (const auto& p : m.pieces())
    if (p.lo <= mid && mid <= p.hi) out.push_back(&p);
  return out;
}

}  // namespace

TvdReport tvd(const MixedDensity1D& a, const MixedDensity1D& b) {
  TvdReport r;

  std::vector<double> bp = a.breakpoints();
  const std::vector<double> bb = b.breakpoints();
  bp.insert(bp.end(), bb.begin(), bb.end());
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

  const std::size_t intervals = bp.size() > 1 ? bp.size() - 1 : 0;
  double cont = 0.0;
  for (std::size_t k = 0; k < intervals; ++k) {
    const double x0 = bp[k], x1 = bp[k + 1];
    const auto pa = covering(a, x0, x1);
    const auto pb = covering(b, x0, x1);
    if (pa.empty() && pb.empty()) continue;
    const auto diff = [&](double x) {
      x = std::clamp(x, x0, x1);
      double f = 0.0;
      for (const auto* p : pa) f += p->density(x);
      for (const auto* p : pb) f -= p->density(x);
      return std::abs(f);
    };
    double err = 0.0;
    cont += adaptive_simpson(diff, x0, x1, 1e-7 / static_cast<double>(intervals), &err);
    r.est_error += 0.5 * err;
  }
  r.grid_points = intervals;
  r.continuous_part = 0.5 * cont;

  // Atoms: merge locations from both laws.
  struct Loc {
    double x;
    double ma;
    double mb;
  };
  std::vector<Loc> locs;
  auto add = [&locs](double x, double ma, double mb) {
    for (auto& l : locs) {
      if (std::abs(l.x - x) <= 1e-12 * std::max(1.0, std::abs(x))) {
        l.ma += ma;
        l.mb += mb;
        return;
      }
    }
    locs.push_back({x, ma, mb});
  };
  for (const auto& at : a.atoms()) add(at.location, at.mass, 0.0);
  for (const auto& at : b.atoms()) add(at.location, 0.0, at.mass);
  double atoms = 0.0;
  for (const auto& l : locs) atoms += std::abs(l.ma - l.mb);
  r.atom_part = 0.5 * atoms;

  r.value = std::clamp(r.continuous_part + r.atom_part, 0.0, 1.0);
  return r;
}

double violation_mass(const MixedDensity1D& m, double bound, Side side) {
  if (std::isinf(bound)) {
    const bool never = (side == Side::kUpper) == (bound > 0);
    if (never) return 0.0;
    return m.atom_mass() + m.continuous_mass();
  }
  double v = 0.0;
  for (const auto& p : m.pieces()) {
    v += side == Side::kUpper ? piece_mass(p, bound, p.hi) : piece_mass(p, p.lo, bound);
  }
  for (const auto& at : m.atoms()) {
    if (side == Side::kUpper ? at.location > bound : at.location < bound) v += at.mass;
  }
  return v;
}

MixedDensity1D histogram_density(std::span<const double> samples, std::span<const double> atom_candidates) {
  if (samples.size() < 100) throw DomainError("histogram_density: at least 100 samples are required");
  const double n = static_cast<double>(samples.size());

  std::vector<double> counts(atom_candidates.size(), 0.0);
  std::vector<double> rest;
  rest.reserve(samples.size());
  for (double x : samples) {
    bool pooled = false;
    for (std::size_t c = 0; c < atom_candidates.size(); ++c) {
      if (std::abs(x - atom_candidates[c]) <= 1e-9) {
        counts[c] += 1.0;
        pooled = true;
        break;
      }
    }
    if (!pooled) rest.push_back(x);
  }
  std::vector<Atom> atoms;
  for (std::size_t c = 0; c < atom_candidates.size(); ++c)
    if (counts[c] > 0.0) atoms.push_back({atom_candidates[c], counts[c] / n});

  std::vector<DensityPiece> pieces;
  if (!rest.empty()) {
    std::sort(rest.begin(), rest.end());
    const double lo = rest.front(), hi = rest.back();
    const std::size_t m = rest.size();
    if (!(hi > lo)) {
      atoms.push_back({lo, static_cast<double>(m) / n});
    } else {
      const double iqr = rest[(3 * m) / 4] - rest[m / 4];
      double width = 2.0 * iqr / std::cbrt(static_cast<double>(m));
      if (!(width > 0.0)) width = (hi - lo) / std::sqrt(static_cast<double>(m));
      const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / width)));
      width = (hi - lo) / static_cast<double>(bins);
      std::vector<double> hist(bins, 0.0);
      for (double x : rest) {
        auto k = static_cast<std::size_t>((x - lo) / width);
        hist[std::min(k, bins - 1)] += 1.0;
      }
      for (std::size_t k = 0; k < bins; ++k) {
        const double f = hist[k] / (n * width);
        const double b0 = lo + static_cast<double>(k) * width;
        const double b1 = k + 1 == bins ? hi : b0 + width;
        DensityPiece p;
        p.lo = b0;
        p.hi = b1;
        p.density = [f](double) { return f; };
        p.mass_below = [f, b0](double x) { return f * (x - b0); };
        pieces.push_back(std::move(p));
      }
    }
  }
  return MixedDensity1D(std::move(pieces), std::move(atoms));
}

}  // namespace pou
