#include "pou/stochastics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pou/errors.hpp"

namespace pou {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t st = seed;
  for (auto& w : s_) w = splitmix64(st);
}

std::uint64_t Rng::next() {
  const auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform_open() {
  // 53 random bits, centred in their cell so that 0 and 1 are unreachable.
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t st = master ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  return splitmix64(st);
}

// ---------------------------------------------------------------------------

Distribution1D Distribution1D::beta(double lo, double hi, double shape_a, double shape_b) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw DomainError("Beta: support must satisfy lo < hi");
  }
  if (!(shape_a > 0.0) || !(shape_b > 0.0)) throw DomainError("Beta: shapes must be positive");
  Distribution1D d;
  d.kind_ = DistKind::kBeta;
  d.lo_ = lo, d.hi_ = hi, d.a_ = shape_a, d.b_ = shape_b;
  return d;
}

Distribution1D Distribution1D::uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw DomainError("Uniform: support must satisfy lo < hi");
  }
  Distribution1D d;
  d.kind_ = DistKind::kUniform;
  d.lo_ = lo, d.hi_ = hi;
  return d;
}

Distribution1D Distribution1D::gaussian(double mean, double std) {
  if (!(std > 0.0) || !std::isfinite(mean)) throw DomainError("Gaussian: std must be positive");
  Distribution1D d;
  d.kind_ = DistKind::kGaussian;
  d.mean_ = mean, d.std_ = std;
  d.lo_ = -std::numeric_limits<double>::infinity();
  d.hi_ = std::numeric_limits<double>::infinity();
  return d;
}

Distribution1D Distribution1D::dirac(double location) {
  if (!std::isfinite(location)) throw DomainError("Dirac: location must be finite");
  Distribution1D d;
  d.kind_ = DistKind::kDirac;
  d.lo_ = d.hi_ = location;
  return d;
}

double Distribution1D::mean() const {
  switch (kind_) {
    case DistKind::kBeta: return lo_ + (hi_ - lo_) * a_ / (a_ + b_);
    case DistKind::kUniform: return 0.5 * (lo_ + hi_);
    case DistKind::kGaussian: return mean_;
    case DistKind::kDirac: return lo_;
  }
  return 0.0;
}

double Distribution1D::stddev() const {
  switch (kind_) {
    case DistKind::kBeta: {
      const double s = a_ + b_;
      return (hi_ - lo_) * std::sqrt(a_ * b_ / (s * s * (s + 1.0)));
    }
    case DistKind::kUniform: return (hi_ - lo_) / std::sqrt(12.0);
    case DistKind::kGaussian: return std_;
    case DistKind::kDirac: return 0.0;
  }
  return 0.0;
}

std::string Distribution1D::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case DistKind::kBeta: os << "Beta([" << lo_ << "," << hi_ << "]," << a_ << "," << b_ << ")"; break;
    case DistKind::kUniform: os << "Uniform([" << lo_ << "," << hi_ << "])"; break;
    case DistKind::kGaussian: os << "Gaussian(" << mean_ << "," << std_ << ")"; break;
    case DistKind::kDirac: os << "Dirac(" << lo_ << ")"; break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double pdf(const Distribution1D& d, double x) {
  switch (d.kind()) {
    case DistKind::kBeta: {
      if (x < d.support_lo() || x > d.support_hi()) return 0.0;
      const double w = d.support_hi() - d.support_lo();
      const double t = std::clamp((x - d.support_lo()) / w, 0.0, 1.0);
      const double a = d.shape_a(), b = d.shape_b();
      return std::pow(t, a - 1.0) * std::pow(1.0 - t, b - 1.0) / (std::exp(log_beta(a, b)) * w);
    }
    case DistKind::kUniform:
      if (x < d.support_lo() || x > d.support_hi()) return 0.0;
      return 1.0 / (d.support_hi() - d.support_lo());
    case DistKind::kGaussian: {
      const double z = (x - d.gaussian_mean()) / d.gaussian_std();
      return std::exp(-0.5 * z * z) / (d.gaussian_std() * std::sqrt(2.0 * std::numbers::pi));
    }
    case DistKind::kDirac: return 0.0;
  }
  return 0.0;
}

double cdf(const Distribution1D& d, double x) {
  switch (d.kind()) {
    case DistKind::kBeta: {
      if (x <= d.support_lo()) return 0.0;
      if (x >= d.support_hi()) return 1.0;
      const double t = (x - d.support_lo()) / (d.support_hi() - d.support_lo());
      return regularized_incomplete_beta(d.shape_a(), d.shape_b(), t);
    }
    case DistKind::kUniform:
      if (x <= d.support_lo()) return 0.0;
      if (x >= d.support_hi()) return 1.0;
      return (x - d.support_lo()) / (d.support_hi() - d.support_lo());
    case DistKind::kGaussian: return normal_cdf((x - d.gaussian_mean()) / d.gaussian_std());
    case DistKind::kDirac: return x >= d.location() ? 1.0 : 0.0;
  }
  return 0.0;
}

double quantile(const Distribution1D& d, double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: u must lie in (0, 1)");
  switch (d.kind()) {
    case DistKind::kUniform: return d.support_lo() + u * (d.support_hi() - d.support_lo());
    case DistKind::kDirac: return d.location();
    default: break;
  }
  double lo, hi;
  if (d.kind() == DistKind::kGaussian) {
    lo = d.gaussian_mean() - 40.0 * d.gaussian_std();
    hi = d.gaussian_mean() + 40.0 * d.gaussian_std();
  } else {
    lo = d.support_lo();
    hi = d.support_hi();
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(d, mid) < u) lo = mid;
    else hi = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    const double f = pdf(d, x);
    if (!(f > 0.0)) break;
    const double next = x - (cdf(d, x) - u) / f;
    if (!(next >= lo && next <= hi)) break;
    x = next;
  }
  return x;
}

std::vector<double> sample(const Distribution1D& d, std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (auto& v : out) v = quantile(d, rng.uniform_open());
  return out;
}

std::vector<double> sample(const Distribution1D& d, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample(d, n, rng);
}

// ---------------------------------------------------------------------------

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                   double fb, double whole, double tol, int depth, double& err) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    err += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        double* est_error) {
  if (!(b > a)) {
    if (est_error) *est_error = 0.0;
    return 0.0;
  }
  // Beta shapes below 1 put an integrable pole on an endpoint; a single point
  // carries no mass, so non-finite samples are dropped.
  const std::function<double(double)> g = [&f](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : 0.0;
  };
  // Fixed initial panels keep narrow features from being stepped over.
  constexpr int kPanels = 16;
  const double h = (b - a) / kPanels;
  double total = 0.0, err = 0.0;
  for (int k = 0; k < kPanels; ++k) {
    const double x0 = a + k * h;
    const double x1 = k + 1 == kPanels ? b : a + (k + 1) * h;
    const double f0 = g(x0), f1 = g(x1), fm = g(0.5 * (x0 + x1));
    const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total += simpson_rec(g, x0, x1, f0, fm, f1, whole, tol / kPanels, 40, err);
  }
  if (est_error) *est_error = err;
  return total;
}

// ---------------------------------------------------------------------------

MixedDensity1D::MixedDensity1D(std::vector<DensityPiece> pieces, std::vector<Atom> atoms)
    : pieces_(std::move(pieces)), atoms_(std::move(atoms)) {
  for (const auto& a : atoms_) {
    if (!(a.mass >= 0.0) || a.mass > 1.0 + 1e-12) throw DomainError("MixedDensity1D: atom mass out of range");
  }
  std::erase_if(pieces_, [](const DensityPiece& p) { return !(p.hi > p.lo); });
  std::sort(pieces_.begin(), pieces_.end(),
            [](const DensityPiece& l, const DensityPiece& r) { return l.lo < r.lo; });
  for (std::size_t i = 1; i < pieces_.size(); ++i) {
    if (pieces_[i].lo < pieces_[i - 1].hi - 1e-12 * std::max(1.0, std::abs(pieces_[i].lo))) {
      throw DomainError("MixedDensity1D: overlapping pieces");
    }
  }
  std::erase_if(atoms_, [](const Atom& a) { return a.mass == 0.0; });
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom& l, const Atom& r) { return l.location < r.location; });
}

MixedDensity1D MixedDensity1D::single_atom(double location) {
  return MixedDensity1D({}, {{location, 1.0}});
}

MixedDensity1D MixedDensity1D::from_distribution(const Distribution1D& d) {
  if (d.kind() == DistKind::kDirac) return single_atom(d.location());
  double lo = d.support_lo(), hi = d.support_hi();
  if (d.kind() == DistKind::kGaussian) {
    lo = d.gaussian_mean() - 12.0 * d.gaussian_std();
    hi = d.gaussian_mean() + 12.0 * d.gaussian_std();
  }
  return MixedDensity1D({affine_pushforward_piece(d, 0.0, 1.0, lo, hi)}, {});
}

DensityPiece MixedDensity1D::affine_pushforward_piece(const Distribution1D& d, double c, double k,
                                                      double lo, double hi) {
  if (k == 0.0) throw DomainError("affine_pushforward_piece: zero slope");
  const double scale = 1.0 / std::abs(k);
  DensityPiece p;
  p.lo = lo;
  p.hi = hi;
  p.density = [d, c, k, scale](double x) {
    double y = (x - c) / k;
    if (d.bounded()) y = std::clamp(y, d.support_lo(), d.support_hi());
    return scale * pdf(d, y);
  };
  p.mass_below = [d, c, k, lo](double x) {
    const double f0 = pou::cdf(d, (lo - c) / k);
    const double f1 = pou::cdf(d, (x - c) / k);
    return k > 0.0 ? f1 - f0 : f0 - f1;
  };
  return p;
}

DensityPiece MixedDensity1D::grid_piece(std::vector<double> xs, std::vector<double> fs) {
  if (xs.size() < 2 || xs.size() != fs.size()) throw DomainError("grid_piece: need ≥ 2 matching points");
  std::vector<double> cum(xs.size(), 0.0);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    cum[i] = cum[i - 1] + 0.5 * (fs[i] + fs[i - 1]) * (xs[i] - xs[i - 1]);
  }
  DensityPiece p;
  p.lo = xs.front();
  p.hi = xs.back();
  auto locate = [](const std::vector<double>& grid, double x) {
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t i = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    return std::min(i, grid.size() - 2);
  };
  p.density = [xs, fs, locate](double x) {
    if (x < xs.front() || x > xs.back()) return 0.0;
    const std::size_t i = locate(xs, x);
    const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return fs[i] + t * (fs[i + 1] - fs[i]);
  };
  p.mass_below = [xs, fs, cum, locate](double x) {
    if (x <= xs.front()) return 0.0;
    if (x >= xs.back()) return cum.back();
    const std::size_t i = locate(xs, x);
    const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    const double fx = fs[i] + t * (fs[i + 1] - fs[i]);
    return cum[i] + 0.5 * (fs[i] + fx) * (x - xs[i]);
  };
  return p;
}

double MixedDensity1D::density(double x) const {
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    const bool last_closed = i + 1 == pieces_.size() || pieces_[i + 1].lo > p.hi;
    if (x >= p.lo && (x < p.hi || (last_closed && x == p.hi))) return p.density(x);
  }
  return 0.0;
}

double MixedDensity1D::piece_mass_below(const DensityPiece& p, double x) const {
  if (x <= p.lo) return 0.0;
  const double xe = std::min(x, p.hi);
  if (p.mass_below) return p.mass_below(xe);
  return adaptive_simpson(p.density, p.lo, xe, 1e-10);
}

double MixedDensity1D::cdf(double x) const {
  double c = 0.0;
  for (const auto& p : pieces_) c += piece_mass_below(p, x);
  for (const auto& a : atoms_) if (a.location <= x) c += a.mass;
  return std::clamp(c, 0.0, 1.0);
}

double MixedDensity1D::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("MixedDensity1D::quantile: u must lie in (0, 1)");

  // Walk pieces and atoms left to right; an atom at x is counted in cdf(x), so
  // it precedes a piece starting at x.
  struct Item {
    double key;
    const DensityPiece* piece;
    double mass;
  };
  std::vector<Item> items;
  bool interior_atom = false;
  for (const auto& p : pieces_) items.push_back({p.lo, &p, piece_mass_below(p, p.hi)});
  for (const auto& a : atoms_) {
    items.push_back({a.location, nullptr, a.mass});
    for (const auto& p : pieces_) interior_atom = interior_atom || (a.location > p.lo && a.location < p.hi);
  }
  if (!interior_atom) {
    std::stable_sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
      return x.key < y.key || (x.key == y.key && !x.piece && y.piece);
    });
    double before = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const Item& it = items[i];
      if (before + it.mass < u && i + 1 < items.size()) {
        before += it.mass;
        continue;
      }
      if (!it.piece) return it.key;
      const DensityPiece& p = *it.piece;
      const double r = std::min(u - before, it.mass);
      double lo = p.lo, hi = p.hi, x = 0.5 * (lo + hi);
      for (int k = 0; k < 200; ++k) {
        const double g = piece_mass_below(p, x) - r;
        if (g < 0.0) lo = x;
        else hi = x;
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi))) break;
        // Newton step from the bracketed point, bisection when it leaves the bracket.
        const double f = p.density(x);
        double next = f > 0.0 && std::isfinite(f) ? x - g / f : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) {
          x = next;
          break;
        }
        x = next;
      }
      return x;
    }
  }

  double lo = support_lo(), hi = support_hi();
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < u) lo = mid;
    else hi = mid;
  }
  return hi;
}

double MixedDensity1D::atom_mass() const {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.mass;
  return m;
}

double MixedDensity1D::continuous_mass() const {
  double m = 0.0;
  for (const auto& p : pieces_) m += piece_mass_below(p, p.hi);
  return m;
}

std::vector<double> MixedDensity1D::breakpoints() const {
  std::vector<double> b;
  for (const auto& p : pieces_) {
    b.push_back(p.lo);
    b.push_back(p.hi);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

double MixedDensity1D::support_lo() const {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& p : pieces_) lo = std::min(lo, p.lo);
  for (const auto& a : atoms_) lo = std::min(lo, a.location);
  return lo;
}

double MixedDensity1D::support_hi() const {
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& p : pieces_) hi = std::max(hi, p.hi);
  for (const auto& a : atoms_) hi = std::max(hi, a.location);
  return hi;
}

std::vector<double> MixedDensity1D::sample(std::size_t n, Rng& rng) const {
  std::vector<double> out(n);
  for (auto& v : out) v = quantile(rng.uniform_open());
  return out;
}

double total_mass(const MixedDensity1D& m) {
  double total = m.atom_mass();
  for (const auto& p : m.pieces()) total += adaptive_simpson(p.density, p.lo, p.hi, 1e-8);
  return total;
}

namespace {
std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
}  // namespace

void write_density_csv(std::ostream& os, const MixedDensity1D& m, std::size_t grid_points) {
  os << "x,f\n";
  grid_points = std::max<std::size_t>(grid_points, 2);
  for (const auto& p : m.pieces()) {
    for (std::size_t i = 0; i < grid_points; ++i) {
      const double x = p.lo + (p.hi - p.lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
      os << fmt6(x) << ',' << fmt6(p.density(x)) << '\n';
    }
  }
}

void write_atoms_csv(std::ostream& os, const MixedDensity1D& m) {
  os << "location,mass\n";
  for (const auto& a : m.atoms()) os << fmt6(a.location) << ',' << fmt6(a.mass) << '\n';
}

}  // namespace pou
