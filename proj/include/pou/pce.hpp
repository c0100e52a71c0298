#pragma once

// Polynomial chaos: univariate bases with explicit Gram values, coefficient
// vectors, moments, and the Galerkin-projected DC-OPF KKT system.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pou/linalg_qp.hpp"
#include "pou/stochastics.hpp"

namespace pou {

/// Polynomial in the germ variable, monomial coefficients c0 + c1 ξ + c2 ξ² + ...
struct Polynomial {
  std::vector<double> coeffs;
  double operator()(double xi) const;
  std::size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
};

enum class BasisNormalization {
  /// Classical (unnormalized) Jacobi / Legendre / probabilists' Hermite polynomials.
  kClassical,
  /// Same polynomials scaled to unit Gram value.
  kOrthonormal,
};

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1 (probability measure)
};

/// Gauss rule for the germ's own probability measure (Golub–Welsch).
GaussRule gauss_rule(const Distribution1D& germ, std::size_t points = 64);

struct Basis {
  std::string id;
  Distribution1D germ;
  std::vector<Polynomial> functions;  // ψ0 ≡ 1
  std::vector<double> gram;           // E[ψℓ²]
  BasisNormalization normalization = BasisNormalization::kClassical;

  std::size_t order() const { return functions.size() - 1; }
  std::size_t size() const { return functions.size(); }
  double eval(std::size_t l, double xi) const { return functions[l](xi); }
};

using BasisPtr = std::shared_ptr<const Basis>;

/// Standard germ of a physical law: Beta → Beta on [0,1], Uniform → [-1,1],
/// Gaussian → N(0,1). Dirac laws use the N(0,1) germ.
Distribution1D germ_of(const Distribution1D& d);

/// Throws UnsupportedDistribution for unknown kinds, DomainError for order < 1.
BasisPtr basis_for(const Distribution1D& d, std::size_t order,
                   BasisNormalization norm = BasisNormalization::kClassical);

/// Coefficients (rows ℓ = 0..L) of `components` random variables in one basis.
class PceVector {
 public:
  PceVector(BasisPtr basis, DenseMatrix coeffs);

  const Basis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  const DenseMatrix& coeffs() const { return coeffs_; }
  std::size_t terms() const { return coeffs_.rows(); }
  std::size_t components() const { return coeffs_.cols(); }
  double coeff(std::size_t l, std::size_t i) const { return coeffs_(l, i); }
  /// Σ_i coeff(l, i).
  double row_sum(std::size_t l) const;
  /// Realization of component i at germ value ξ.
  double evaluate(std::size_t i, double xi) const;

 private:
  BasisPtr basis_;
  DenseMatrix coeffs_;
};

/// Exact order-1 expansion of a single demand law (one component).
PceVector pce_of_demand(const Distribution1D& d,
                        BasisNormalization norm = BasisNormalization::kClassical);

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(const PceVector& v, std::size_t component);

struct KktSystem {
  DenseMatrix matrix;
  std::vector<double> rhs;
};

/// Galerkin-projected KKT system I ⊗ [H 1; 1ᵀ 0] in the per-coefficient
/// stacking (α0, λ0, α1, λ1, ...). H and h come from `q`; bounds and
/// `q.balance_rhs` are ignored, the balance is taken from the demand rows.
KktSystem galerkin_kkt(const QpProblem& q, const PceVector& demand);

/// The same system in the policy-QP stacking (α0, ..., αL, λ0, ..., λL).
KktSystem policy_qp_kkt(const QpProblem& q, const PceVector& demand);

/// Permutation M with z_policy = M z_galerkin.
DenseMatrix stacking_permutation(std::size_t n, std::size_t terms);

struct EquivalenceReport {
  double solution_residual = 0.0;  // ‖M z_h − z_s‖∞
  double rhs_residual = 0.0;       // ‖M b_h − b_s‖∞
  double matrix_residual = 0.0;    // ‖M A_h Mᵀ − A_s‖∞
  /// ‖Mᵀ A_h M − A_s‖∞: the transposed congruence, which does not hold in general.
  double transposed_matrix_residual = 0.0;
  std::size_t n = 0;
  std::size_t terms = 0;
  DenseMatrix permutation;
  std::vector<double> z_galerkin;
  std::vector<double> z_policy;

  double worst() const;
};

EquivalenceReport permutation_equivalence_check(const QpProblem& q, const PceVector& demand);

}  // namespace pou
