#include "pou/linalg_qp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "pou/errors.hpp"

namespace pou {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (data_.size() != rows * cols) {
    throw DomainError("DenseMatrix: entry count does not match shape");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
  DenseMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix& rhs) const {
  if (cols_ != rhs.rows_) throw DomainError("DenseMatrix: shape mismatch in product");
  DenseMatrix out(rows_, rhs.cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(r, k);
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < rhs.cols_; ++c) out(r, c) += a * rhs(k, c);
    }
  return out;
}

std::vector<double> DenseMatrix::operator*(std::span<const double> x) const {
  if (cols_ != x.size()) throw DomainError("DenseMatrix: shape mismatch in mat-vec");
  std::vector<double> y(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) y[r] += (*this)(r, c) * x[c];
  return y;
}

void DenseMatrix::set_block(std::size_t r0, std::size_t c0, const DenseMatrix& block) {
  if (r0 + block.rows_ > rows_ || c0 + block.cols_ > cols_) {
    throw DomainError("DenseMatrix: block out of range");
  }
  for (std::size_t r = 0; r < block.rows_; ++r)
    for (std::size_t c = 0; c < block.cols_; ++c) (*this)(r0 + r, c0 + c) = block(r, c);
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return kInf;
  return max_abs_diff(a.data(), b.data());
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return kInf;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> solve_linear(const DenseMatrix& a, std::span<const double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw DomainError("solve_linear: shape mismatch");

  std::vector<double> lu = a.data();
  std::vector<double> x(b.begin(), b.end());
  const double scale = max_abs(lu);
  if (scale == 0.0 && n > 0) throw SingularMatrix("solve_linear: zero matrix");
  const double tol = 1e-12 * scale;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(lu[r * n + k]) > std::abs(lu[piv * n + k])) piv = r;
    if (!(std::abs(lu[piv * n + k]) > tol)) {
      throw SingularMatrix("solve_linear: pivot below tolerance at column " + std::to_string(k));
    }
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu[k * n + c], lu[piv * n + c]);
      std::swap(x[k], x[piv]);
    }
    const double d = lu[k * n + k];
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = lu[r * n + k] / d;
      if (f == 0.0) continue;
      for (std::size_t c = k + 1; c < n; ++c) lu[r * n + c] -= f * lu[k * n + c];
      x[r] -= f * x[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = x[k];
    for (std::size_t c = k + 1; c < n; ++c) s -= lu[k * n + c] * x[c];
    x[k] = s / lu[k * n + k];
  }
  return x;
}

double QpProblem::objective(std::span<const double> p) const {
  double f = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) f += 0.5 * h_diag[i] * p[i] * p[i] + h_lin[i] * p[i];
  return f;
}

void QpProblem::validate() const {
  const std::size_t n = h_diag.size();
  if (n == 0) throw DomainError("QpProblem: no variables");
  if (h_lin.size() != n || lower.size() != n || upper.size() != n) {
    throw DomainError("QpProblem: inconsistent vector lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(h_diag[i] > 0.0) || !std::isfinite(h_diag[i])) {
      throw DomainError("QpProblem: quadratic cost must be positive at variable " + std::to_string(i));
    }
    if (!std::isfinite(h_lin[i])) throw DomainError("QpProblem: non-finite linear cost");
    if (lower[i] > upper[i]) throw DomainError("QpProblem: lower > upper at variable " + std::to_string(i));
  }
  if (!std::isfinite(balance_rhs)) throw DomainError("QpProblem: non-finite balance");
}

namespace {

struct ReducedSolve {
  std::vector<double> primal;
  double lambda = 0.0;
};

// Solves the KKT system with the variables in `fixed` pinned to their bound.
ReducedSolve solve_reduced(const QpProblem& q, const std::vector<std::optional<BoundSide>>& fixed) {
  const std::size_t n = q.size();
  std::vector<std::size_t> free_idx;
  std::vector<double> p(n, 0.0);
  double fixed_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (fixed[i]) {
      p[i] = *fixed[i] == BoundSide::kUpper ? q.upper[i] : q.lower[i];
      fixed_sum += p[i];
    } else {
      free_idx.push_back(i);
    }
  }

  ReducedSolve out;
  if (free_idx.empty()) {
    // λ is only pinned by sign conditions on the bound multipliers.
    double lo = -kInf;
    double hi = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = q.h_diag[i] * p[i] + q.h_lin[i];
      if (*fixed[i] == BoundSide::kUpper) hi = std::min(hi, -g);
      else lo = std::max(lo, -g);
    }
    if (lo <= hi) out.lambda = std::isfinite(hi) ? hi : (std::isfinite(lo) ? lo : 0.0);
    else out.lambda = 0.5 * (lo + hi);
    out.primal = std::move(p);
    return out;
  }

  const std::size_t m = free_idx.size();
  DenseMatrix kkt(m + 1, m + 1);
  std::vector<double> rhs(m + 1);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = free_idx[k];
    kkt(k, k) = q.h_diag[i];
    kkt(k, m) = 1.0;
    kkt(m, k) = 1.0;
    rhs[k] = -q.h_lin[i];
  }
  rhs[m] = -(q.balance_rhs + fixed_sum);
  const auto z = solve_linear(kkt, rhs);
  for (std::size_t k = 0; k < m; ++k) p[free_idx[k]] = z[k];
  out.primal = std::move(p);
  out.lambda = z[m];
  return out;
}

double bound_tol(double b) { return 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace

QpSolution solve_equality_qp(const QpProblem& p) {
  p.validate();
  const std::vector<std::optional<BoundSide>> none(p.size());
  auto r = solve_reduced(p, none);
  QpSolution s;
  s.objective = p.objective(r.primal);
  s.primal = std::move(r.primal);
  s.multiplier_balance = r.lambda;
  s.multipliers_bounds.assign(p.size(), 0.0);
  return s;
}

QpSolution solve_box_qp(const QpProblem& q) {
  q.validate();
  const std::size_t n = q.size();

  const double target = -q.balance_rhs;
  const double sum_lo = std::accumulate(q.lower.begin(), q.lower.end(), 0.0);
  const double sum_hi = std::accumulate(q.upper.begin(), q.upper.end(), 0.0);
  const double feas_tol = 1e-10 * std::max(1.0, std::abs(target));
  if (target < sum_lo - feas_tol || target > sum_hi + feas_tol) {
    throw InfeasibleProblem("solve_box_qp: generation bounds cannot absorb balance " +
                            std::to_string(target));
  }

  std::vector<std::optional<BoundSide>> fixed(n);
  std::vector<double> mult(n, 0.0);
  const std::size_t max_iter = 8 * n + 32;

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    auto r = solve_reduced(q, fixed);

    // Clamp the most violated bound among free variables.
    std::size_t worst = n;
    BoundSide worst_side = BoundSide::kUpper;
    double worst_viol = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      if (std::isfinite(q.upper[i])) {
        const double v = r.primal[i] - q.upper[i];
        if (v > -bound_tol(q.upper[i]) && v > worst_viol) {
          worst = i, worst_side = BoundSide::kUpper, worst_viol = v;
        }
      }
      if (std::isfinite(q.lower[i])) {
        const double v = q.lower[i] - r.primal[i];
        if (v > -bound_tol(q.lower[i]) && v > worst_viol) {
          worst = i, worst_side = BoundSide::kLower, worst_viol = v;
        }
      }
    }
    if (worst < n) {
      fixed[worst] = worst_side;
      continue;
    }

    // Release the bound with the most negative multiplier.
    std::size_t drop = n;
    double most_negative = -1e-10;
    for (std::size_t i = 0; i < n; ++i) {
      mult[i] = 0.0;
      if (!fixed[i]) continue;
      const double g = q.h_diag[i] * r.primal[i] + q.h_lin[i] + r.lambda;
      mult[i] = *fixed[i] == BoundSide::kUpper ? -g : g;
      if (mult[i] < most_negative) most_negative = mult[i], drop = i;
    }
    if (drop < n) {
      fixed[drop].reset();
      continue;
    }

    QpSolution s;
    s.objective = q.objective(r.primal);
    s.primal = std::move(r.primal);
    s.multiplier_balance = r.lambda;
    s.multipliers_bounds.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!fixed[i]) continue;
      s.multipliers_bounds[i] = std::max(0.0, mult[i]);
      s.active_set.push_back({i, *fixed[i]});
    }
    return s;
  }
  throw Error("solve_box_qp: active-set iteration limit reached");
}

}  // namespace pou
