#pragma once

// Chance-constrained DC-OPF over affine-in-basis generation policies.
//
// The policy for generator i is p_i(ξ) = Σ_ℓ α_{ℓ,i} ψ_ℓ(ξ). Chance constraints
// are replaced by the moment margin  E[p_i] ± δ·std[p_i]  against the limits.

#include <optional>
#include <utility>
#include <vector>

#include "pou/dcopf.hpp"
#include "pou/pce.hpp"

namespace pou {

struct ChanceSpec {
  double delta = 0.0;
  /// (p_min, p_max) per generator.
  std::vector<std::pair<double, double>> bounds;

  static ChanceSpec from_network(const Network& net, double delta);
};

struct Policy {
  PceVector demand;          // per-bus demand expansion the policy was solved for
  DenseMatrix alpha;         // (L+1) × generators
  double delta = 0.0;
  double kkt_residual = 0.0;
  std::vector<std::size_t> active_constraints;  // indices into the margin constraint list

  const Basis& basis() const { return demand.basis(); }
  std::size_t generators() const { return alpha.cols(); }
  std::size_t terms() const { return alpha.rows(); }
  PceVector as_pce() const { return PceVector(demand.basis_ptr(), alpha); }
};

/// Minimizes the expected cost ½ Σ_ℓ gram_ℓ α_ℓᵀ H α_ℓ + hᵀ α_0 subject to
/// per-coefficient balance and the tightened generation limits.
/// Throws InfeasibleTightening when no policy satisfies the margins.
Policy solve_ccopf(const Network& net, const PceVector& demand_pce, const ChanceSpec& spec);

/// Dispatch at germ value ξ. DomainError outside the germ support.
std::vector<double> evaluate_policy(const Policy& p, double xi);
/// Dispatch for a realization of the uncertain demand, mapped back to ξ.
std::vector<double> evaluate_policy_at_demand(const Policy& p, double uncertain_demand);

/// Law of generator `g` under the policy; a single atom when it does not respond.
MixedDensity1D policy_density(const Policy& p, const Distribution1D& demand, std::size_t g);

/// P(p_g ≤ bound) computed exactly through the demand CDF.
double satisfaction_probability(const Policy& p, const Distribution1D& demand, std::size_t g, double bound);
/// 1 − satisfaction_probability.
double violation_probability(const Policy& p, const Distribution1D& demand, std::size_t g, double bound);

}  // namespace pou
