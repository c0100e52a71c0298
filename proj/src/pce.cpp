#include "pou/pce.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "pou/errors.hpp"

namespace pou {

double Polynomial::operator()(double xi) const {
  double v = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) v = v * xi + coeffs[k];
  return v;
}

namespace {

Polynomial poly_add(const Polynomial& a, const Polynomial& b, double sa, double sb) {
  Polynomial r;
  r.coeffs.assign(std::max(a.coeffs.size(), b.coeffs.size()), 0.0);
  for (std::size_t k = 0; k < a.coeffs.size(); ++k) r.coeffs[k] += sa * a.coeffs[k];
  for (std::size_t k = 0; k < b.coeffs.size(); ++k) r.coeffs[k] += sb * b.coeffs[k];
  return r;
}

Polynomial poly_mul(const Polynomial& a, const Polynomial& b) {
  Polynomial r;
  r.coeffs.assign(a.coeffs.size() + b.coeffs.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.coeffs.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs.size(); ++j) r.coeffs[i + j] += a.coeffs[i] * b.coeffs[j];
  return r;
}

// Jacobi weight (1-x)^alpha (1+x)^beta on [-1,1] for a Beta(a,b) germ on [0,1].
struct JacobiParams {
  double alpha;
  double beta;
};

JacobiParams jacobi_of(const Distribution1D& germ) {
  return {germ.shape_b() - 1.0, germ.shape_a() - 1.0};
}

// Monic three-term recurrence coefficients of the germ measure, in the germ variable.
void recurrence(const Distribution1D& germ, std::size_t n, std::vector<double>& diag,
                std::vector<double>& offdiag_sq) {
  diag.assign(n, 0.0);
  offdiag_sq.assign(n, 0.0);  // offdiag_sq[k] couples k-1 and k, k ≥ 1
  switch (germ.kind()) {
    case DistKind::kGaussian:
      for (std::size_t k = 1; k < n; ++k) offdiag_sq[k] = static_cast<double>(k);
      break;
    case DistKind::kUniform:
      for (std::size_t k = 1; k < n; ++k) {
        const double kk = static_cast<double>(k);
        offdiag_sq[k] = kk * kk / (4.0 * kk * kk - 1.0);
      }
      break;
    case DistKind::kBeta: {
      const auto [al, be] = jacobi_of(germ);
      for (std::size_t k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k);
        const double s = 2.0 * kk + al + be;
        double a;
        if (k == 0) a = (be - al) / (al + be + 2.0);
        else a = (be * be - al * al) / (s * (s + 2.0));
        // x = 2ξ - 1, so ξ-recurrence diagonal is (a + 1)/2.
        diag[k] = 0.5 * (a + 1.0);
        if (k >= 1) {
          double b;
          if (k == 1) {
            b = 4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + al + be) * (2.0 + al + be) * (3.0 + al + be));
          } else {
            b = 4.0 * kk * (kk + al) * (kk + be) * (kk + al + be) / (s * s * (s + 1.0) * (s - 1.0));
          }
          offdiag_sq[k] = 0.25 * b;
        }
      }
      break;
    }
    default:
      throw UnsupportedDistribution("no orthogonal basis registered for " + germ.describe());
  }
}

std::string basis_id(const Distribution1D& germ, std::size_t order, BasisNormalization norm) {
  std::ostringstream os;
  switch (germ.kind()) {
    case DistKind::kBeta: os << "jacobi(" << germ.shape_a() << "," << germ.shape_b() << ")"; break;
    case DistKind::kUniform: os << "legendre"; break;
    case DistKind::kGaussian: os << "hermite"; break;
    default: os << "unknown"; break;
  }
  os << "/L" << order;
  if (norm == BasisNormalization::kOrthonormal) os << "/orthonormal";
  return os.str();
}

// Slope of the physical variable per unit germ.
double physical_slope(const Distribution1D& d) {
  switch (d.kind()) {
    case DistKind::kBeta: return d.support_hi() - d.support_lo();
    case DistKind::kUniform: return 0.5 * (d.support_hi() - d.support_lo());
    case DistKind::kGaussian: return d.gaussian_std();
    case DistKind::kDirac: return 0.0;
  }
  return 0.0;
}

}  // namespace

GaussRule gauss_rule(const Distribution1D& germ, std::size_t points) {
  std::vector<double> diag, off_sq;
  recurrence(germ, points, diag, off_sq);
  Eigen::VectorXd d(points), e(points > 0 ? points - 1 : 0);
  for (std::size_t k = 0; k < points; ++k) d(static_cast<Eigen::Index>(k)) = diag[k];
  for (std::size_t k = 1; k < points; ++k) e(static_cast<Eigen::Index>(k - 1)) = std::sqrt(off_sq[k]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
  GaussRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    rule.nodes[k] = es.eigenvalues()(kk);
    const double v = es.eigenvectors()(0, kk);
    rule.weights[k] = v * v;
  }
  return rule;
}

Distribution1D germ_of(const Distribution1D& d) {
  switch (d.kind()) {
    case DistKind::kBeta: return Distribution1D::beta(0.0, 1.0, d.shape_a(), d.shape_b());
    case DistKind::kUniform: return Distribution1D::uniform(-1.0, 1.0);
    case DistKind::kGaussian:
    case DistKind::kDirac: return Distribution1D::gaussian(0.0, 1.0);
  }
  throw UnsupportedDistribution("no germ for " + d.describe());
}

BasisPtr basis_for(const Distribution1D& d, std::size_t order, BasisNormalization norm) {
  if (order < 1) throw DomainError("basis_for: order must be at least 1");
  const Distribution1D germ = germ_of(d);

  std::vector<Polynomial> psi;
  psi.push_back({{1.0}});
  switch (germ.kind()) {
    case DistKind::kGaussian: {
      // He_{k+1} = ξ He_k - k He_{k-1}
      psi.push_back({{0.0, 1.0}});
      for (std::size_t k = 1; k < order; ++k) {
        psi.push_back(poly_add(poly_mul({{0.0, 1.0}}, psi[k]), psi[k - 1], 1.0, -static_cast<double>(k)));
      }
      break;
    }
    case DistKind::kUniform:
    case DistKind::kBeta: {
      double al = 0.0, be = 0.0;
      Polynomial x{{0.0, 1.0}};
      if (germ.kind() == DistKind::kBeta) {
        std::tie(al, be) = std::pair{jacobi_of(germ).alpha, jacobi_of(germ).beta};
        x = {{-1.0, 2.0}};
      }
      // P1 = (α+1) + (α+β+2)(x-1)/2
      psi.push_back(poly_add({{al + 1.0 - 0.5 * (al + be + 2.0)}}, x, 1.0, 0.5 * (al + be + 2.0)));
      for (std::size_t k = 2; k <= order; ++k) {
        const double n = static_cast<double>(k);
        const double s = 2.0 * n + al + be;
        const double c0 = 2.0 * n * (n + al + be) * (s - 2.0);
        const double c1 = (s - 1.0) * s * (s - 2.0);
        const double c2 = (s - 1.0) * (al * al - be * be);
        const double c3 = 2.0 * (n + al - 1.0) * (n + be - 1.0) * s;
        Polynomial t = poly_add(poly_mul(x, psi[k - 1]), psi[k - 1], c1, c2);
        psi.push_back(poly_add(t, psi[k - 2], 1.0 / c0, -c3 / c0));
      }
      break;
    }
    default:
      throw UnsupportedDistribution("no orthogonal basis registered for " + d.describe());
  }

  const GaussRule rule = gauss_rule(germ);
  std::vector<double> gram(psi.size(), 0.0);
  for (std::size_t l = 0; l < psi.size(); ++l)
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double v = psi[l](rule.nodes[k]);
      gram[l] += rule.weights[k] * v * v;
    }
  if (norm == BasisNormalization::kOrthonormal) {
    for (std::size_t l = 1; l < psi.size(); ++l) {
      const double s = 1.0 / std::sqrt(gram[l]);
      for (auto& c : psi[l].coeffs) c *= s;
      gram[l] = 1.0;
    }
  }
  gram[0] = 1.0;

  auto b = std::make_shared<Basis>();
  b->id = basis_id(germ, order, norm);
  b->germ = germ;
  b->functions = std::move(psi);
  b->gram = std::move(gram);
  b->normalization = norm;
  return b;
}

PceVector::PceVector(BasisPtr basis, DenseMatrix coeffs) : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (!basis_) throw DomainError("PceVector: null basis");
  if (coeffs_.rows() != basis_->size()) throw DomainError("PceVector: coefficient rows must match basis size");
  for (double v : coeffs_.data())
    if (!std::isfinite(v)) throw DomainError("PceVector: non-finite coefficient");
}

double PceVector::row_sum(std::size_t l) const {
  double s = 0.0;
  for (std::size_t i = 0; i < components(); ++i) s += coeffs_(l, i);
  return s;
}

double PceVector::evaluate(std::size_t i, double xi) const {
  double v = 0.0;
  for (std::size_t l = 0; l < terms(); ++l) v += coeffs_(l, i) * basis_->eval(l, xi);
  return v;
}

PceVector pce_of_demand(const Distribution1D& d, BasisNormalization norm) {
  auto basis = basis_for(d, 1, norm);
  DenseMatrix c(2, 1);
  c(0, 0) = d.mean();
  // ψ1 is affine with slope s in ξ; the physical map has slope physical_slope(d).
  const double s = basis->functions[1].coeffs[1];
  c(1, 0) = physical_slope(d) / s;
  return PceVector(std::move(basis), std::move(c));
}

Moments moments(const PceVector& v, std::size_t component) {
  Moments m;
  m.mean = v.coeff(0, component);
  double var = 0.0;
  for (std::size_t l = 1; l < v.terms(); ++l) {
    const double c = v.coeff(l, component);
    var += c * c * v.basis().gram[l];
  }
  m.std = std::sqrt(var);
  return m;
}

namespace {

void check_galerkin_inputs(const QpProblem& q, const PceVector& demand) {
  if (q.h_diag.empty() || q.h_lin.size() != q.h_diag.size()) {
    throw DomainError("galerkin_kkt: malformed cost data");
  }
  for (double h : q.h_diag)
    if (!(h > 0.0)) throw DomainError("galerkin_kkt: quadratic cost must be positive");
  if (demand.terms() == 0) throw DomainError("galerkin_kkt: empty demand expansion");
}

}  // namespace

KktSystem galerkin_kkt(const QpProblem& q, const PceVector& demand) {
  check_galerkin_inputs(q, demand);
  const std::size_t n = q.size();
  const std::size_t terms = demand.terms();
  DenseMatrix block(n + 1, n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    block(i, i) = q.h_diag[i];
    block(i, n) = 1.0;
    block(n, i) = 1.0;
  }
  KktSystem sys{kron(DenseMatrix::identity(terms), block), std::vector<double>(terms * (n + 1), 0.0)};
  for (std::size_t l = 0; l < terms; ++l) {
    const std::size_t off = l * (n + 1);
    if (l == 0)
      for (std::size_t i = 0; i < n; ++i) sys.rhs[off + i] = -q.h_lin[i];
    sys.rhs[off + n] = -demand.row_sum(l);
  }
  return sys;
}

KktSystem policy_qp_kkt(const QpProblem& q, const PceVector& demand) {
  check_galerkin_inputs(q, demand);
  const std::size_t n = q.size();
  const std::size_t terms = demand.terms();
  const DenseMatrix eye = DenseMatrix::identity(terms);
  const DenseMatrix hessian = kron(eye, DenseMatrix::diagonal(q.h_diag));
  const DenseMatrix balance = kron(eye, DenseMatrix(1, n, 1.0));

  const std::size_t na = terms * n;
  KktSystem sys{DenseMatrix(na + terms, na + terms), std::vector<double>(na + terms, 0.0)};
  sys.matrix.set_block(0, 0, hessian);
  sys.matrix.set_block(0, na, balance.transpose());
  sys.matrix.set_block(na, 0, balance);
  for (std::size_t i = 0; i < n; ++i) sys.rhs[i] = -q.h_lin[i];  // e ⊗ h
  for (std::size_t l = 0; l < terms; ++l) sys.rhs[na + l] = -demand.row_sum(l);
  return sys;
}

DenseMatrix stacking_permutation(std::size_t n, std::size_t terms) {
  const DenseMatrix eye = DenseMatrix::identity(terms);
  DenseMatrix pick_alpha(n, n + 1);
  for (std::size_t i = 0; i < n; ++i) pick_alpha(i, i) = 1.0;
  DenseMatrix pick_lambda(1, n + 1);
  pick_lambda(0, n) = 1.0;
  const DenseMatrix top = kron(eye, pick_alpha);
  const DenseMatrix bottom = kron(eye, pick_lambda);
  DenseMatrix m(terms * (n + 1), terms * (n + 1));
  m.set_block(0, 0, top);
  m.set_block(top.rows(), 0, bottom);
  return m;
}

double EquivalenceReport::worst() const {
  return std::max({solution_residual, rhs_residual, matrix_residual});
}

EquivalenceReport permutation_equivalence_check(const QpProblem& q, const PceVector& demand) {
  const KktSystem h = galerkin_kkt(q, demand);
  const KktSystem s = policy_qp_kkt(q, demand);
  EquivalenceReport r;
  r.n = q.size();
  r.terms = demand.terms();
  r.permutation = stacking_permutation(r.n, r.terms);
  r.z_galerkin = solve_linear(h.matrix, h.rhs);
  r.z_policy = solve_linear(s.matrix, s.rhs);
  const DenseMatrix& m = r.permutation;
  const DenseMatrix mt = m.transpose();
  r.solution_residual = max_abs_diff(m * std::span<const double>(r.z_galerkin), r.z_policy);
  r.rhs_residual = max_abs_diff(m * std::span<const double>(h.rhs), s.rhs);
  r.matrix_residual = max_abs_diff(m * h.matrix * mt, s.matrix);
  r.transposed_matrix_residual = max_abs_diff(mt * h.matrix * m, s.matrix);
  return r;
}

}  // namespace pou
