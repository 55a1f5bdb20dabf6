#include "degen/structural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "degen/errors.hpp"
#include "degen/function_spaces.hpp"
#include "degen/linalg.hpp"

namespace degen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double slack(double lhs, double rhs) { return 1e-9 * (1 + std::abs(lhs) + std::abs(rhs)); }

}  // namespace

double dual_exponent(double t) {
  if (std::isinf(t)) return 1;
  if (t == 1) return kInf;
  return t / (t - 1);
}

CoefficientField CoefficientField::constant(double v) {
  if (!(v >= 0) || std::isinf(v)) throw Error(ErrorKind::InvalidParams, "coefficients must be finite and >= 0");
  CoefficientField f;
  f.constant_ = v;
  return f;
}

CoefficientField CoefficientField::cells(ScalarField v) {
  if (v.size() == 0) throw Error(ErrorKind::ShapeMismatch, "empty coefficient field");
  if (!(v.array() >= 0).all() || !v.allFinite())
    throw Error(ErrorKind::InvalidParams, "coefficients must be finite and >= 0");
  CoefficientField f;
  f.values_ = std::move(v);
  return f;
}

ScalarField CoefficientField::on(const GridDomain& grid) const {
  if (is_constant()) return ScalarField::Constant(grid.size(), constant_);
  if (values_.size() != grid.size()) throw Error(ErrorKind::ShapeMismatch, "coefficient field does not match grid");
  return values_;
}

bool CoefficientField::vanishes_on(const std::vector<Index>& cells) const {
  if (is_constant()) return constant_ == 0;
  return std::all_of(cells.begin(), cells.end(), [&](Index c) { return values_(c) == 0; });
}

double CoefficientField::sup_on(const std::vector<Index>& cells) const {
  if (is_constant()) return constant_;
  double m = 0;
  for (Index c : cells) m = std::max(m, values_(c));
  return m;
}

CoefficientField CoefficientField::operator*(double s) const {
  CoefficientField f = *this;
  f.constant_ *= s;
  if (!is_constant()) f.values_ *= s;
  return f;
}

CoefficientField CoefficientField::operator+(const CoefficientField& o) const {
  if (is_constant() && o.is_constant()) return constant(constant_ + o.constant_);
  const Index n = is_constant() ? o.values_.size() : values_.size();
  if (!is_constant() && !o.is_constant() && values_.size() != o.values_.size())
    throw Error(ErrorKind::ShapeMismatch, "coefficient fields differ in size");
  ScalarField v(n);
  for (Index c = 0; c < n; ++c) v(c) = at(c) + o.at(c);
  return cells(std::move(v));
}

StructuralCoefficients transform_structure(const StructuralCoefficients& s, double C) {
  if (!(C >= 1) || std::isinf(C)) throw Error(ErrorKind::InvalidConstant, "equivalence constant must be >= 1");
  StructuralCoefficients t = s;
  t.a = std::pow(C, s.p / 2) * s.a;
  t.b = s.b * std::sqrt(C);
  t.e = s.e * std::sqrt(C);
  t.c = s.c * std::pow(C, (s.psi - 1) / 2);
  return t;
}

StructuralCoefficients linear_to_structural(const Eigen::VectorXd& Hvec, const Eigen::VectorXd& Gvec, double F,
                                            double fdat, const Eigen::VectorXd& gvec, int n) {
  if (Hvec.size() != n || Gvec.size() != n || gvec.size() != n)
    throw Error(ErrorKind::ShapeMismatch, "linear data must have n components");
  const double rn = std::sqrt(double(n));
  StructuralCoefficients s;
  s.p = s.gamma = s.psi = s.delta = 2;
  s.a = 2;
  s.b = CoefficientField::constant(rn * Gvec.norm());
  s.c = CoefficientField::constant(rn * Hvec.norm());
  s.d = CoefficientField::constant(std::abs(F));
  s.e = CoefficientField::constant(rn * gvec.norm());
  s.f = CoefficientField::constant(std::abs(fdat));
  s.g = CoefficientField::constant(4 * n * gvec.squaredNorm());
  s.h = CoefficientField::constant(4 * n * Gvec.squaredNorm());
  return s;
}

RangesReport check_ranges(double p, double sigma, double gamma, double psi, double delta) {
  if (!(p > 1) || !(sigma > 1)) throw Error(ErrorKind::InvalidParams, "need p > 1 and sigma > 1");
  RangesReport r;
  r.gamma_max = sigma * (p - 1) + 1;
  r.psi_max = p + 1 - 1 / sigma;
  r.delta_max = p * sigma;
  r.gamma_ok = gamma > 1 && gamma < r.gamma_max;
  r.psi_ok = psi > 1 && psi < r.psi_max;
  r.delta_ok = delta > 1 && delta < r.delta_max;
  r.ok = r.gamma_ok && r.psi_ok && r.delta_ok;
  return r;
}

std::vector<StructSample> full_samples(const GridDomain& grid, const std::vector<Index>& cells, int nsphere) {
  const auto dirs = sphere_samples(grid.dim(), nsphere);
  std::vector<StructSample> out;
  out.reserve(cells.size() * 5 * dirs.size() * 3);
  for (Index c : cells)
    for (double z : {0.0, 1.0, -1.0, 10.0, -10.0})
      for (const auto& d : dirs)
        for (double s : {0.1, 1.0, 10.0}) out.push_back({c, z, s * d});
  return out;
}

std::vector<StructSample> trace_samples(const GridDomain& grid, const std::vector<Index>& cells,
                                        const ScalarField& u, const VectorField& grad) {
  if (u.size() != grid.size() || grad.cols() != grid.size())
    throw Error(ErrorKind::ShapeMismatch, "solution does not match the grid");
  std::vector<StructSample> out;
  for (Index c : cells) out.push_back({c, u(c), grad.col(c)});
  return out;
}

namespace {

struct PointForm {
  Eigen::MatrixXd Q, sqrtQ, N, kernel;
};

PointForm point_form(const QuadraticFormField& Qf, const Point& x) {
  PointForm f;
  f.Q = Qf.at(x);
  f.sqrtQ = matrix_sqrt(f.Q);
  f.N = sqrt_pseudo_inverse(f.Q, KernelBlock::Zero);
  f.kernel = kernel_basis(f.Q, LinalgTolerances{}.rank);
  return f;
}

// Conditions (ii) and (iv), shared by both forms.
void check_ii_iv(const OperatorSampler& op, const StructuralCoefficients& s, const StructSample& smp, const Point& x,
                 double qxi, const Eigen::VectorXd& A, std::vector<Violation>& out) {
  const double az = std::abs(smp.z);
  {
    const double lhs = smp.xi.dot(A);
    const double rhs = std::pow(qxi, s.p) / s.a - s.h.at(smp.cell) * std::pow(az, s.gamma) - s.g.at(smp.cell);
    if (lhs < rhs - slack(lhs, rhs)) out.push_back({smp.cell, smp.z, smp.xi, "ii", lhs, rhs});
  }
  {
    const double lhs = std::abs(op.B(x, smp.z, smp.xi));
    const double rhs = s.c.at(smp.cell) * std::pow(qxi, s.psi - 1) + s.d.at(smp.cell) * std::pow(az, s.delta - 1) +
                       s.f.at(smp.cell);
    if (lhs > rhs + slack(lhs, rhs)) out.push_back({smp.cell, smp.z, smp.xi, "iv", lhs, rhs});
  }
}

double growth_bound(const StructuralCoefficients& s, const StructSample& smp, double qxi) {
  return s.a * std::pow(qxi, s.p - 1) + s.b.at(smp.cell) * std::pow(std::abs(smp.z), s.gamma - 1) + s.e.at(smp.cell);
}

}  // namespace

StructReport check_struct(const OperatorSampler& op, const StructuralCoefficients& s, const QuadraticFormField& Q,
                          const GridDomain& grid, const std::vector<StructSample>& samples, const StructOptions& opt) {
  if (!op.A || !op.B) throw Error(ErrorKind::InvalidParams, "operator needs A and B");
  if (!op.Atilde && opt.strict) throw Error(ErrorKind::MissingAtilde, "strict check needs an explicit A~");
  StructReport rep;
  rep.reconstructed_atilde = !op.Atilde;
  Index last = -1;
  PointForm pf;
  Point x;
  for (const auto& smp : samples) {
    if (smp.cell != last) {
      x = grid.center(smp.cell);
      pf = point_form(Q, x);
      last = smp.cell;
    }
    const Eigen::VectorXd A = op.A(x, smp.z, smp.xi);
    const double qxi = (pf.sqrtQ * smp.xi).norm();
    Eigen::VectorXd At;
    if (op.Atilde) {
      At = op.Atilde(x, smp.z, smp.xi);
      const double lhs = (A - pf.sqrtQ * At).norm();
      const double tol = 1e-9 * (1 + A.norm() + At.norm());
      if (lhs > tol) rep.violations.push_back({smp.cell, smp.z, smp.xi, "i", lhs, 0});
    } else {
      // Reconstructible iff A has no kernel component.
      const double leak = pf.kernel.cols() ? (pf.kernel.transpose() * A).norm() : 0.0;
      if (leak > 1e-9 * (1 + A.norm())) rep.violations.push_back({smp.cell, smp.z, smp.xi, "i", leak, 0});
      At = pf.N * A;
    }
    {
      const double lhs = At.norm(), rhs = growth_bound(s, smp, qxi);
      if (lhs > rhs + slack(lhs, rhs)) rep.violations.push_back({smp.cell, smp.z, smp.xi, "iii", lhs, rhs});
    }
    check_ii_iv(op, s, smp, x, qxi, A, rep.violations);
    ++rep.checked;
  }
  return rep;
}

StructReport check_struct3(const OperatorSampler& op, const StructuralCoefficients& s, const QuadraticFormField& Q,
                           const GridDomain& grid, const std::vector<StructSample>& samples,
                           const StructOptions& opt) {
  if (!op.A || !op.B) throw Error(ErrorKind::InvalidParams, "operator needs A and B");
  if (!op.atilde) throw Error(ErrorKind::MissingAtilde, "operator has no scalar a~");
  StructReport rep;
  const auto etas = sphere_samples(grid.dim(), opt.eta_samples);
  Index last = -1;
  PointForm pf;
  Point x;
  for (const auto& smp : samples) {
    if (smp.cell != last) {
      x = grid.center(smp.cell);
      pf = point_form(Q, x);
      last = smp.cell;
    }
    const Eigen::VectorXd A = op.A(x, smp.z, smp.xi);
    const double at = op.atilde(x, smp.z, smp.xi);
    const double qxi = (pf.sqrtQ * smp.xi).norm();
    // Kernel directions are where (i) bites hardest, so test them explicitly.
    std::vector<Eigen::VectorXd> dirs = etas;
    for (Index k = 0; k < pf.kernel.cols(); ++k) dirs.push_back(pf.kernel.col(k));
    double worst = 0, worst_rhs = 0, worst_lhs = 0;
    for (const auto& eta : dirs) {
      const double lhs = std::abs(eta.dot(A)), rhs = (pf.sqrtQ * eta).norm() * at;
      const double excess = lhs - rhs - slack(lhs, rhs);
      if (excess > worst) {
        worst = excess;
        worst_lhs = lhs;
        worst_rhs = rhs;
      }
    }
    if (worst > 0) rep.violations.push_back({smp.cell, smp.z, smp.xi, "i", worst_lhs, worst_rhs});
    {
      const double rhs = growth_bound(s, smp, qxi);
      if (at < 0 || at > rhs + slack(at, rhs)) rep.violations.push_back({smp.cell, smp.z, smp.xi, "iii", at, rhs});
    }
    check_ii_iv(op, s, smp, x, qxi, A, rep.violations);
    ++rep.checked;
  }
  return rep;
}

OperatorSampler struct_to_struct3(const OperatorSampler& op) {
  if (!op.Atilde) throw Error(ErrorKind::MissingAtilde, "conversion needs A~");
  OperatorSampler out = op;
  auto At = op.Atilde;
  out.atilde = [At](const Point& x, double z, const Eigen::VectorXd& xi) { return At(x, z, xi).norm(); };
  out.name = op.name + "/struct3";
  return out;
}

OperatorSampler struct3_to_struct(const OperatorSampler& op, const QuadraticFormField& Q) {
  if (!op.A) throw Error(ErrorKind::InvalidParams, "operator needs A");
  OperatorSampler out = op;
  auto A = op.A;
  out.Atilde = [A, Q](const Point& x, double z, const Eigen::VectorXd& xi) {
    const Eigen::MatrixXd Qx = Q.at(x);
    const Eigen::VectorXd a = A(x, z, xi);
    const Eigen::MatrixXd K = kernel_basis(Qx, LinalgTolerances{}.rank);
    if (K.cols() && (K.transpose() * a).norm() > 1e-9 * (1 + a.norm()))
      throw Error(ErrorKind::AnotInRange, "A has a component in ker Q");
    return Eigen::VectorXd(sqrt_pseudo_inverse(Qx, KernelBlock::Identity) * a);
  };
  out.name = op.name + "/struct";
  return out;
}

BarredCoefficients bar_coefficients(const StructuralCoefficients& s, double k) {
  if (!(k > 0)) throw Error(ErrorKind::NonpositiveK, "k must be positive");
  return {s.b + s.e * std::pow(k, 1 - s.p), s.h + s.g * std::pow(k, -s.p), s.d + s.f * std::pow(k, 1 - s.p)};
}

double coefficient_avnorm(const CoefficientField& f, double alpha, const std::vector<Index>& cells) {
  if (cells.empty()) throw Error(ErrorKind::EmptyBall, "average over an empty set");
  if (f.is_constant()) return f.constant_value();
  return avnorm(f.values(), alpha, cells);
}

double compute_k(const StructuralCoefficients& s, const BallIndexSet& ball, double eps2, double eps3, double sigma) {
  if (!(eps2 > 0 && eps2 <= 1) || !(eps3 > 0 && eps3 <= 1))
    throw Error(ErrorKind::InvalidParams, "eps2 and eps3 must lie in (0, 1]");
  const double p = s.p, r = ball.radius;
  const double sp = dual_exponent(sigma), pp = dual_exponent(p);
  const auto& cells = ball.cells;
  const double te = std::pow(std::pow(r, p - 1) * coefficient_avnorm(s.e, pp * sp, cells), 1 / (p - 1));
  const double tg = std::pow(std::pow(r, p) * coefficient_avnorm(s.g, p * sp / (p - eps2), cells), 1 / p);
  const double tf = std::pow(std::pow(r, p) * coefficient_avnorm(s.f, p * sp / (p - eps3), cells), 1 / (p - 1));
  return te + tg + tf;
}

BundledCoefficients bundle_coefficients(const StructuralCoefficients& s, const ScalarField& u, const GridDomain& grid) {
  if (s.gamma < s.p || s.delta < s.p) throw Error(ErrorKind::ExponentBelowP, "bundling needs gamma, delta >= p");
  if (u.size() != grid.size()) throw Error(ErrorKind::ShapeMismatch, "field does not match the grid");
  BundledCoefficients out{s.b.on(grid), s.d.on(grid), s.h.on(grid)};
  for (Index c = 0; c < grid.size(); ++c) {
    // 0^0 = 1 keeps the gamma = p case an exact identity.
    const double ug = s.gamma == s.p ? 1.0 : std::pow(std::abs(u(c)), s.gamma - s.p);
    const double ud = s.delta == s.p ? 1.0 : std::pow(std::abs(u(c)), s.delta - s.p);
    out.bstar(c) *= ug;
    out.hstar(c) *= ug;
    out.dstar(c) *= ud;
  }
  return out;
}

StructuralCoefficients reduce_below_p(const StructuralCoefficients& s) {
  if (!(s.gamma < s.p && s.psi < s.p && s.delta < s.p))
    throw Error(ErrorKind::ExponentAboveP, "reduction needs gamma, psi, delta < p");
  StructuralCoefficients t = s;
  t.gamma = t.psi = t.delta = s.p;
  t.e = s.e + s.b;
  t.g = s.g + s.h;
  t.f = s.f + s.c + s.d;
  return t;
}

IntegrabilityTable required_integrability(double p, double sigma, double gamma, double psi, double delta) {
  const auto rr = check_ranges(p, sigma, gamma, psi, delta);
  if (!rr.ok) throw Error(ErrorKind::RangeViolation, "exponents outside the admissible ranges");
  IntegrabilityTable t;
  const double sp = sigma * p;
  t.c = sp / (sp - 1 - sigma * (psi - 1));
  t.e = dual_exponent(p);
  t.f = dual_exponent(sp);
  t.b = sp / (sigma * (p - 1) - gamma + 1);
  t.d = sp / (sp - delta);
  return t;
}

}  // namespace degen
