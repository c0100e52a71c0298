#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pou {

/// SplitMix64 step; also used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// xoshiro256** seeded through SplitMix64. Bit-reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform on the open interval (0, 1).
  double uniform_open();

  /// Seed for the k-th independent substream of a master seed.
  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

 private:
  std::uint64_t s_[4];
};

enum class DistKind { kBeta, kUniform, kGaussian, kDirac };

/// Univariate law of a physical quantity. Beta is scaled to [support_lo, support_hi].
/// Dirac is the degenerate law at `location()`.
class Distribution1D {
 public:
  static Distribution1D beta(double lo, double hi, double shape_a, double shape_b);
  static Distribution1D uniform(double lo, double hi);
  static Distribution1D gaussian(double mean, double std);
  static Distribution1D dirac(double location);

  DistKind kind() const noexcept { return kind_; }
  double support_lo() const noexcept { return lo_; }
  double support_hi() const noexcept { return hi_; }
  double shape_a() const noexcept { return a_; }
  double shape_b() const noexcept { return b_; }
  double gaussian_mean() const noexcept { return mean_; }
  double gaussian_std() const noexcept { return std_; }
  double location() const noexcept { return lo_; }

  double mean() const;
  double stddev() const;
  bool bounded() const noexcept { return kind_ != DistKind::kGaussian; }
  std::string describe() const;

 private:
  DistKind kind_ = DistKind::kUniform;
  double lo_ = 0.0, hi_ = 1.0;
  double a_ = 1.0, b_ = 1.0;
  double mean_ = 0.0, std_ = 1.0;
};

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

double pdf(const Distribution1D& d, double x);
double cdf(const Distribution1D& d, double x);
/// Inverse CDF; u must lie in (0, 1), otherwise DomainError.
double quantile(const Distribution1D& d, double u);
std::vector<double> sample(const Distribution1D& d, std::size_t n, std::uint64_t seed);
std::vector<double> sample(const Distribution1D& d, std::size_t n, Rng& rng);

/// A continuous piece of a mixed density on [lo, hi].
struct DensityPiece {
  double lo = 0.0;
  double hi = 0.0;
  std::function<double(double)> density;
  /// ∫_lo^x density, when a closed form exists.
  std::function<double(double)> mass_below;
};

struct Atom {
  double location = 0.0;
  double mass = 0.0;
};

/// Probability law with a piecewise continuous part plus point atoms.
class MixedDensity1D {
 public:
  MixedDensity1D() = default;
  MixedDensity1D(std::vector<DensityPiece> pieces, std::vector<Atom> atoms);

  static MixedDensity1D single_atom(double location);
  /// Density of `d`; Gaussians are truncated at ±12 standard deviations.
  static MixedDensity1D from_distribution(const Distribution1D& d);
  /// Law of c + k·X for X ~ d (k ≠ 0), restricted to the x-interval [lo, hi].
  static DensityPiece affine_pushforward_piece(const Distribution1D& d, double c, double k,
                                               double lo, double hi);
  /// Piecewise-linear density through (xs[i], fs[i]).
  static DensityPiece grid_piece(std::vector<double> xs, std::vector<double> fs);

  const std::vector<DensityPiece>& pieces() const noexcept { return pieces_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }

  /// Continuous density at x (atoms excluded).
  double density(double x) const;
  /// P(X ≤ x), atoms included.
  double cdf(double x) const;
  /// Generalized inverse of cdf on (0, 1).
  double quantile(double u) const;
  double atom_mass() const;
  /// Continuous mass computed from closed-form piece CDFs when available.
  double continuous_mass() const;
  /// Sorted boundaries of all pieces.
  std::vector<double> breakpoints() const;
  double support_lo() const;
  double support_hi() const;
  std::vector<double> sample(std::size_t n, Rng& rng) const;

 private:
  double piece_mass_below(const DensityPiece& p, double x) const;

  std::vector<DensityPiece> pieces_;
  std::vector<Atom> atoms_;
};

/// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance `tol`.
/// Returns the integral; the error estimate is stored in `est_error` if given.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        double* est_error = nullptr);

/// Numerical integral of the continuous part plus the atom masses.
double total_mass(const MixedDensity1D& m);

/// Writes "x,f" rows on `grid_points` points per piece (6 significant digits).
void write_density_csv(std::ostream& os, const MixedDensity1D& m, std::size_t grid_points = 2048);
/// Writes "location,mass" rows.
void write_atoms_csv(std::ostream& os, const MixedDensity1D& m);

}  // namespace pou
