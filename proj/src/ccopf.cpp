#include "pou/ccopf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "pou/errors.hpp"

namespace pou {

ChanceSpec ChanceSpec::from_network(const Network& net, double delta) {
  if (!(delta >= 0.0)) throw DomainError("ChanceSpec: delta must be nonnegative");
  ChanceSpec s;
  s.delta = delta;
  for (std::size_t g = 0; g < net.generator_count(); ++g) {
    s.bounds.emplace_back(net.generator(g).p_min, net.generator(g).p_max);
  }
  return s;
}

namespace {

// One linear margin row: coef0·α_{0,i} + coef1·α_{1,i} ≤ rhs.
struct Margin {
  std::size_t gen;
  double coef0;
  double coef1;
  double rhs;
};

struct Candidate {
  std::vector<double> x;
  std::vector<double> mult;  // margin multipliers, same order as subset
  bool ok = false;
};

// Uncertain demand column (the one with nonzero higher coefficients), if any.
std::optional<std::size_t> uncertain_column(const PceVector& d) {
  for (std::size_t i = 0; i < d.components(); ++i)
    for (std::size_t l = 1; l < d.terms(); ++l)
      if (d.coeff(l, i) != 0.0) return i;
  return std::nullopt;
}

}  // namespace

Policy solve_ccopf(const Network& net, const PceVector& demand_pce, const ChanceSpec& spec) {
  const std::size_t n = net.generator_count();
  const std::size_t terms = demand_pce.terms();
  const std::vector<double>& gram = demand_pce.basis().gram;
  if (spec.bounds.size() != n) throw DomainError("solve_ccopf: one bound pair per generator is required");
  if (!(spec.delta >= 0.0)) throw DomainError("solve_ccopf: delta must be nonnegative");

  const std::size_t nx = terms * n;
  const std::size_t neq = terms;
  std::vector<double> qdiag(nx), c(nx, 0.0);
  for (std::size_t l = 0; l < terms; ++l)
    for (std::size_t i = 0; i < n; ++i) {
      qdiag[l * n + i] = gram[l] * net.generator(i).cost_quadratic;
      if (l == 0) c[i] = net.generator(i).cost_linear;
    }

  // With one germ and L = 1, std[p_i] = √gram₁·|α_{1,i}|, so each margin is the
  // pair of linear rows α0 ± δ√gram₁·α1 ≤ u (mirrored for lower limits).
  std::vector<Margin> margins;
  const double w = terms > 1 ? spec.delta * std::sqrt(gram[1]) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = spec.bounds[i];
    const int signs = w > 0.0 ? 2 : 1;
    for (int s = 0; s < signs; ++s) {
      const double sw = s == 0 ? w : -w;
      if (std::isfinite(hi)) margins.push_back({i, 1.0, sw, hi});
      if (std::isfinite(lo)) margins.push_back({i, -1.0, sw, -lo});
    }
  }

  auto margin_value = [&](const Margin& m, const std::vector<double>& x) {
    const double a1 = terms > 1 ? x[n + m.gen] : 0.0;
    return m.coef0 * x[m.gen] + m.coef1 * a1 - m.rhs;
  };
  auto exact_margin_ok = [&](const std::vector<double>& x) {
    // Full moment margin, valid for any L.
    for (std::size_t i = 0; i < n; ++i) {
      double var = 0.0;
      for (std::size_t l = 1; l < terms; ++l) var += gram[l] * x[l * n + i] * x[l * n + i];
      const double sd = std::sqrt(var);
      const auto [lo, hi] = spec.bounds[i];
      const double tol = 1e-10 * std::max(1.0, std::abs(x[i]));
      if (x[i] + spec.delta * sd > hi + tol || x[i] - spec.delta * sd < lo - tol) return false;
    }
    return true;
  };

  auto solve_subset = [&](const std::vector<std::size_t>& subset) {
    Candidate cand;
    const std::size_t na = subset.size();
    const std::size_t dim = nx + neq + na;
    DenseMatrix k(dim, dim);
    std::vector<double> rhs(dim, 0.0);
    for (std::size_t j = 0; j < nx; ++j) {
      k(j, j) = qdiag[j];
      rhs[j] = -c[j];
    }
    for (std::size_t l = 0; l < terms; ++l) {
      for (std::size_t i = 0; i < n; ++i) {
        k(nx + l, l * n + i) = 1.0;
        k(l * n + i, nx + l) = 1.0;
      }
      rhs[nx + l] = -demand_pce.row_sum(l);
    }
    for (std::size_t a = 0; a < na; ++a) {
      const Margin& m = margins[subset[a]];
      const std::size_t row = nx + neq + a;
      k(row, m.gen) = m.coef0;
      k(m.gen, row) = m.coef0;
      if (terms > 1) {
        k(row, n + m.gen) = m.coef1;
        k(n + m.gen, row) = m.coef1;
      }
      rhs[row] = m.rhs;
    }
    std::vector<double> z;
    try {
      z = solve_linear(k, rhs);
    } catch (const SingularMatrix&) {
      return cand;
    }
    cand.x.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(nx));
    cand.mult.assign(z.begin() + static_cast<std::ptrdiff_t>(nx + neq), z.end());
    for (double mu : cand.mult)
      if (mu < -1e-12) return cand;
    if (terms <= 2)
      for (const Margin& m : margins)
        if (margin_value(m, cand.x) > 1e-10 * std::max(1.0, std::abs(m.rhs))) return cand;
    cand.ok = true;
    return cand;
  };

  Candidate best = solve_subset({});
  std::vector<std::size_t> chosen;
  if (!best.ok || !exact_margin_ok(best.x)) {
    if (terms > 2) {
      throw InfeasibleTightening(
          "solve_ccopf: active moment margins are only supported for first-order expansions");
    }
    const std::size_t m = margins.size();
    if (m > 20) throw Error("solve_ccopf: too many bounded generators for margin enumeration");
    best.ok = false;
    // Smallest active sets first; the strictly convex problem has a unique KKT point.
    for (std::size_t size = 1; size <= std::min<std::size_t>(m, nx) && !best.ok; ++size) {
      for (std::uint32_t mask = 0; mask < (1u << m) && !best.ok; ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != size) continue;
        std::vector<std::size_t> subset;
        for (std::size_t j = 0; j < m; ++j)
          if (mask & (1u << j)) subset.push_back(j);
        Candidate cand = solve_subset(subset);
        if (cand.ok) {
          best = std::move(cand);
          chosen = std::move(subset);
        }
      }
    }
    if (!best.ok) {
      throw InfeasibleTightening("solve_ccopf: no policy satisfies the margins with delta = " +
                                 std::to_string(spec.delta));
    }
  }

  Policy p{demand_pce, DenseMatrix(terms, n), spec.delta, 0.0, chosen};
  for (std::size_t l = 0; l < terms; ++l)
    for (std::size_t i = 0; i < n; ++i) p.alpha(l, i) = best.x[l * n + i];

  // Stationarity residual, recovering the balance multipliers per coefficient.
  double res = 0.0;
  std::vector<double> grad(nx);
  for (std::size_t j = 0; j < nx; ++j) grad[j] = qdiag[j] * best.x[j] + c[j];
  for (std::size_t a = 0; a < chosen.size(); ++a) {
    const Margin& m = margins[chosen[a]];
    grad[m.gen] += best.mult[a] * m.coef0;
    if (terms > 1) grad[n + m.gen] += best.mult[a] * m.coef1;
  }
  for (std::size_t l = 0; l < terms; ++l) {
    double lam = 0.0;
    for (std::size_t i = 0; i < n; ++i) lam += grad[l * n + i];
    lam /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(grad[l * n + i] - lam));
    double bal = demand_pce.row_sum(l);
    for (std::size_t i = 0; i < n; ++i) bal += best.x[l * n + i];
    res = std::max(res, std::abs(bal));
  }
  p.kkt_residual = res;
  return p;
}

std::vector<double> evaluate_policy(const Policy& p, double xi) {
  const Distribution1D& germ = p.basis().germ;
  if (germ.bounded() && (xi < germ.support_lo() || xi > germ.support_hi())) {
    throw DomainError("evaluate_policy: germ value outside support");
  }
  std::vector<double> out(p.generators(), 0.0);
  for (std::size_t l = 0; l < p.terms(); ++l) {
    const double psi = p.basis().eval(l, xi);
    for (std::size_t i = 0; i < p.generators(); ++i) out[i] += p.alpha(l, i) * psi;
  }
  return out;
}

namespace {

struct AffineResponse {
  double c = 0.0;  // p_g = c + k·X for the uncertain demand X
  double k = 0.0;
};

AffineResponse affine_response(const Policy& p, std::size_t g) {
  if (g >= p.generators()) throw DomainError("policy: generator index out of range");
  for (std::size_t l = 2; l < p.terms(); ++l)
    if (p.alpha(l, g) != 0.0) throw DomainError("policy: response is not affine in the demand");
  const auto col = uncertain_column(p.demand);
  const double a0 = p.alpha(0, g);
  const double a1 = p.terms() > 1 ? p.alpha(1, g) : 0.0;
  if (!col || a1 == 0.0) return {a0, 0.0};
  const double d0 = p.demand.coeff(0, *col), d1 = p.demand.coeff(1, *col);
  return {a0 - a1 * d0 / d1, a1 / d1};
}

}  // namespace

std::vector<double> evaluate_policy_at_demand(const Policy& p, double uncertain_demand) {
  const auto col = uncertain_column(p.demand);
  if (!col) return evaluate_policy(p, p.basis().germ.mean());
  if (p.terms() != 2) throw DomainError("evaluate_policy_at_demand: needs a first-order expansion");
  // ψ1(ξ) = (X − d0)/d1 and ψ1 is affine in ξ.
  const double psi1 = (uncertain_demand - p.demand.coeff(0, *col)) / p.demand.coeff(1, *col);
  const auto& poly = p.basis().functions[1].coeffs;
  const double xi = (psi1 - poly[0]) / poly[1];
  const Distribution1D& germ = p.basis().germ;
  const double tol = 1e-12 * std::max(1.0, std::abs(xi));
  if (germ.bounded() && (xi < germ.support_lo() - tol || xi > germ.support_hi() + tol)) {
    throw DomainError("evaluate_policy_at_demand: demand outside its support");
  }
  return evaluate_policy(p, germ.bounded() ? std::clamp(xi, germ.support_lo(), germ.support_hi()) : xi);
}

MixedDensity1D policy_density(const Policy& p, const Distribution1D& demand, std::size_t g) {
  const AffineResponse r = affine_response(p, g);
  if (r.k == 0.0 || demand.kind() == DistKind::kDirac) {
    const double at = demand.kind() == DistKind::kDirac ? r.c + r.k * demand.location() : r.c;
    return MixedDensity1D::single_atom(at);
  }
  double lo = demand.support_lo(), hi = demand.support_hi();
  if (!demand.bounded()) {
    lo = demand.gaussian_mean() - 12.0 * demand.gaussian_std();
    hi = demand.gaussian_mean() + 12.0 * demand.gaussian_std();
  }
  const double y0 = r.c + r.k * lo, y1 = r.c + r.k * hi;
  return MixedDensity1D({MixedDensity1D::affine_pushforward_piece(demand, r.c, r.k, std::min(y0, y1),
                                                                  std::max(y0, y1))},
                        {});
}

double satisfaction_probability(const Policy& p, const Distribution1D& demand, std::size_t g, double bound) {
  if (bound == kInf) return 1.0;
  const AffineResponse r = affine_response(p, g);
  if (r.k == 0.0 || demand.kind() == DistKind::kDirac) {
    const double at = demand.kind() == DistKind::kDirac ? r.c + r.k * demand.location() : r.c;
    return at <= bound ? 1.0 : 0.0;
  }
  const double x = (bound - r.c) / r.k;
  return r.k > 0.0 ? cdf(demand, x) : 1.0 - cdf(demand, x);
}

double violation_probability(const Policy& p, const Distribution1D& demand, std::size_t g, double bound) {
  return 1.0 - satisfaction_probability(p, demand, g, bound);
}

}  // namespace pou
