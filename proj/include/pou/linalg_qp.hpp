#pragma once

// Dense linear algebra and the box-constrained QP kernel used by every OPF
// solve. Problems here are tiny (tens of variables), so everything is dense.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace pou {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  DenseMatrix transpose() const;
  DenseMatrix operator*(const DenseMatrix& rhs) const;
  std::vector<double> operator*(std::span<const double> x) const;

  /// Copies `block` into this matrix with its top-left corner at (r0, c0).
  void set_block(std::size_t r0, std::size_t c0, const DenseMatrix& block);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Kronecker product a ⊗ b.
DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> a);

/// Solves a·x = b by LU with partial pivoting. Throws SingularMatrix when a
/// pivot drops below 1e-12 times the largest entry of `a`.
std::vector<double> solve_linear(const DenseMatrix& a, std::span<const double> b);

/// min ½ pᵀ diag(h_diag) p + h_linᵀ p  s.t.  Σ p + balance_rhs = 0,  lower ≤ p ≤ upper.
/// Infinite bounds are written as ±kInf.
struct QpProblem {
  std::vector<double> h_diag;
  std::vector<double> h_lin;
  double balance_rhs = 0.0;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const noexcept { return h_diag.size(); }
  double objective(std::span<const double> p) const;
  /// Throws DomainError on mismatched sizes, non-positive curvature or crossed bounds.
  void validate() const;
};

enum class BoundSide { kLower, kUpper };

struct ActiveBound {
  std::size_t index;
  BoundSide side;
  friend bool operator==(const ActiveBound&, const ActiveBound&) = default;
};

struct QpSolution {
  std::vector<double> primal;
  double multiplier_balance = 0.0;
  /// Nonnegative for active bounds, zero elsewhere.
  std::vector<double> multipliers_bounds;
  std::vector<ActiveBound> active_set;
  double objective = 0.0;
};

/// Solves the bordered KKT system [H 1; 1ᵀ 0] ignoring all bounds.
QpSolution solve_equality_qp(const QpProblem& p);

/// Primal active-set method for the box-constrained problem.
/// Throws InfeasibleProblem when the bounds cannot absorb the balance.
QpSolution solve_box_qp(const QpProblem& p);

}  // namespace pou
