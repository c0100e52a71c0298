#include "pou/hopf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>

#include "pou/errors.hpp"

namespace pou {

namespace {
constexpr std::size_t kChunk = 4096;
}

std::vector<double> HopfEmpirical::column(std::size_t g) const {
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = at(k, g);
  return c;
}

HopfEmpirical run_hopf(const Network& net, std::size_t n, std::uint64_t seed, unsigned threads) {
  if (n < 1) throw DomainError("run_hopf: need at least one sample");
  HopfEmpirical e;
  e.n = n;
  e.generators = net.generator_count();
  e.seed = seed;
  e.demand.resize(n);
  e.samples.resize(n * e.generators);
  e.costs.resize(n);

  const Distribution1D* unc = net.uncertain_demand();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;

  std::atomic<std::size_t> next_chunk{0};
  std::mutex err_mutex;
  std::size_t err_index = n;
  std::string err_msg;

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next_chunk.fetch_add(1);
      if (c >= chunks) return;
      Rng rng(Rng::derive_seed(seed, c));
      const std::size_t end = std::min(n, (c + 1) * kChunk);
      for (std::size_t k = c * kChunk; k < end; ++k) {
        const double u = rng.uniform_open();
        const double d = unc ? quantile(*unc, u) : 0.0;
        e.demand[k] = d;
        try {
          const auto q = build_qp(net, net.demand_realization(d));
          const auto s = solve_box_qp(q);
          std::copy(s.primal.begin(), s.primal.end(), e.samples.begin() + static_cast<std::ptrdiff_t>(k * e.generators));
          e.costs[k] = s.objective;
        } catch (const Error& ex) {
          std::lock_guard lock(err_mutex);
          if (k < err_index) {
            err_index = k;
            err_msg = ex.what();
          }
          return;
        }
      }
    }
  };

  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (err_index < n) {
    throw InfeasibleProblem("run_hopf: sample " + std::to_string(err_index) + ": " + err_msg);
  }
  return e;
}

double max_constraint_violation(const Network& net, const HopfEmpirical& e) {
  double worst = 0.0;
  for (std::size_t k = 0; k < e.n; ++k) {
    const auto dem = net.demand_realization(e.demand[k]);
    double balance = 0.0;
    for (double d : dem) balance += d;
    for (std::size_t g = 0; g < e.generators; ++g) {
      const double p = e.at(k, g);
      const Generator& gen = net.generator(g);
      balance += p;
      worst = std::max({worst, p - gen.p_max, gen.p_min - p});
    }
    worst = std::max(worst, std::abs(balance));
  }
  return worst;
}

std::vector<MixedDensity1D> analytic_hopf_density(const Network& net) {
  const auto cs = ArgminCaseSplit::from_network(net);
  const double p1_max = net.generator(0).p_max;
  const double fixed = net.fixed_demand();
  const Distribution1D* unc = net.uncertain_demand();

  if (!unc) {
    const auto p = closed_form_argmin(cs, p1_max, fixed);
    return {MixedDensity1D::single_atom(p[0]), MixedDensity1D::single_atom(p[1])};
  }
  if (!unc->bounded()) throw DomainError("analytic_hopf_density: demand must have bounded support");

  // Total demand D = fixed + X. Generator 1 saturates when X ≤ threshold.
  const double xlo = unc->support_lo(), xhi = unc->support_hi();
  const double threshold = -cs.switch_point - fixed;
  const double g = cs.gamma;

  // Unconstrained branch: x1 = (-β - γF) - γX, x2 = (β - (1-γ)F) - (1-γ)X.
  const double c1 = -cs.beta - g * fixed, k1 = -g;
  const double c2 = cs.beta - (1.0 - g) * fixed, k2 = -(1.0 - g);
  // Constrained branch: x2 = (-F - p1max) - X.
  const double c2s = -fixed - p1_max, k2s = -1.0;

  std::vector<DensityPiece> bus1, bus2;
  std::vector<Atom> atoms1;
  const double free_lo = std::max(threshold, xlo);
  // At the switch both branches meet; pin the shared endpoints so rounding
  // cannot push the atom inside the continuous piece.
  const bool switched = threshold > xlo && threshold < xhi;
  const double meet2 = c2 + k2 * threshold;
  if (free_lo < xhi) {
    const double hi1 = switched ? p1_max : c1 + k1 * free_lo;
    const double hi2 = switched ? meet2 : c2 + k2 * free_lo;
    bus1.push_back(MixedDensity1D::affine_pushforward_piece(*unc, c1, k1, c1 + k1 * xhi, hi1));
    bus2.push_back(MixedDensity1D::affine_pushforward_piece(*unc, c2, k2, c2 + k2 * xhi, hi2));
  }
  const double sat_hi = std::min(threshold, xhi);
  if (sat_hi > xlo) {
    atoms1.push_back({p1_max, cdf(*unc, sat_hi)});
    const double lo2 = switched ? meet2 : c2s + k2s * sat_hi;
    bus2.push_back(MixedDensity1D::affine_pushforward_piece(*unc, c2s, k2s, lo2, c2s + k2s * xlo));
  }
  return {MixedDensity1D(std::move(bus1), std::move(atoms1)), MixedDensity1D(std::move(bus2), {})};
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf_fn) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf_fn(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

EmpiricalReport empirical_vs_analytic_report(const HopfEmpirical& e, const MixedDensity1D& a,
                                             std::size_t generator) {
  if (generator >= e.generators) throw DomainError("empirical_vs_analytic_report: generator index out of range");
  EmpiricalReport r;
  r.n = e.n;
  r.atom_mass = a.atom_mass();

  std::vector<double> cont;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < e.n; ++k) {
    const double x = e.at(k, generator);
    const bool on_atom = std::any_of(a.atoms().begin(), a.atoms().end(), [x](const Atom& at) {
      return std::abs(x - at.location) <= 1e-9 * std::max(1.0, std::abs(at.location));
    });
    if (on_atom) ++hits;
    else cont.push_back(x);
  }
  r.n_continuous = cont.size();
  r.atom_frequency = static_cast<double>(hits) / static_cast<double>(e.n);
  const double var = r.atom_mass * (1.0 - r.atom_mass) / static_cast<double>(e.n);
  r.atom_z = var > 0.0 ? (r.atom_frequency - r.atom_mass) / std::sqrt(var)
                       : (r.atom_frequency == r.atom_mass ? 0.0 : kInf);

  const double cmass = a.continuous_mass();
  if (!cont.empty() && cmass > 0.0) {
    // Conditional CDF of the continuous part alone.
    const auto cond = [&a, cmass](double x) {
      double c = 0.0;
      for (const auto& p : a.pieces()) {
        if (x <= p.lo) continue;
        const double xe = std::min(x, p.hi);
        c += p.mass_below ? p.mass_below(xe) : adaptive_simpson(p.density, p.lo, xe, 1e-10);
      }
      return c / cmass;
    };
    r.ks_statistic = ks_statistic(std::move(cont), cond);
    r.ks_critical_1pct = 1.628 / std::sqrt(static_cast<double>(r.n_continuous));
  }
  return r;
}

void write_hopf_csv(std::ostream& os, const HopfEmpirical& e) {
  os << "demand";
  for (std::size_t g = 0; g < e.generators; ++g) os << ",p" << (g + 1);
  os << ",cost\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < e.n; ++k) {
    put(e.demand[k]);
    for (std::size_t g = 0; g < e.generators; ++g) {
      os << ',';
      put(e.at(k, g));
    }
    os << ',';
    put(e.costs[k]);
    os << '\n';
  }
}

}  // namespace pou
