#include "degen/operators.hpp"

#include <cmath>

#include "degen/errors.hpp"
#include "degen/linalg.hpp"

namespace degen {

namespace {

void require_subunit_rows(const Eigen::MatrixXd& M, int n, const char* name) {
  if (M.rows() != n || M.cols() != n) throw Error(ErrorKind::ShapeMismatch, std::string(name) + " must be n x n");
  for (Index i = 0; i < n; ++i)
    if (M.row(i).norm() > 1 + 1e-12) throw Error(ErrorKind::InvalidParams, std::string(name) + " row norm exceeds 1");
}

}  // namespace

BuiltinOperator p_laplacian(const QuadraticFormField& Q, double p) {
  if (!(p > 1) || std::isinf(p)) throw Error(ErrorKind::InvalidParams, "p must lie in (1, inf)");
  BuiltinOperator b;
  b.op.name = "p-laplacian";
  b.op.A = [Q, p](const Point& x, double, const Eigen::VectorXd& xi) {
    const Eigen::MatrixXd Qx = Q.at(x);
    const double len = std::sqrt(std::max(0.0, xi.dot(Qx * xi)));
    if (len == 0) return Eigen::VectorXd::Zero(xi.size()).eval();
    return Eigen::VectorXd(std::pow(len, p - 2) * (Qx * xi));
  };
  b.op.Atilde = [Q, p](const Point& x, double, const Eigen::VectorXd& xi) {
    const Eigen::VectorXd v = matrix_sqrt(Q.at(x)) * xi;
    const double len = v.norm();
    if (len == 0) return Eigen::VectorXd::Zero(xi.size()).eval();
    return Eigen::VectorXd(std::pow(len, p - 2) * v);
  };
  b.op.B = [](const Point&, double, const Eigen::VectorXd&) { return 0.0; };
  b.coeffs.p = b.coeffs.gamma = b.coeffs.psi = b.coeffs.delta = p;
  b.coeffs.a = 2;
  return b;
}

BuiltinOperator linear_divergence(const QuadraticFormField& Q, const LinearData& d) {
  const int n = Q.dim();
  if (d.H.size() != n || d.G.size() != n || d.g.size() != n)
    throw Error(ErrorKind::ShapeMismatch, "H, G, g must have n components");
  require_subunit_rows(d.R, n, "R");
  require_subunit_rows(d.S, n, "S");
  require_subunit_rows(d.T, n, "T");
  BuiltinOperator b;
  b.op.name = "linear-divergence";
  b.op.Atilde = [Q, d](const Point& x, double z, const Eigen::VectorXd& xi) {
    return Eigen::VectorXd(matrix_sqrt(Q.at(x)) * xi - d.S.transpose() * d.G * z + d.T.transpose() * d.g);
  };
  auto At = b.op.Atilde;
  b.op.A = [Q, At](const Point& x, double z, const Eigen::VectorXd& xi) {
    return Eigen::VectorXd(matrix_sqrt(Q.at(x)) * At(x, z, xi));
  };
  b.op.B = [Q, d](const Point& x, double z, const Eigen::VectorXd& xi) {
    return d.f - d.H.dot(d.R * (matrix_sqrt(Q.at(x)) * xi)) - d.F * z;
  };
  b.coeffs = linear_to_structural(d.H, d.G, d.F, d.f, d.g, n);
  return b;
}

BuiltinOperator yamabe_type(const QuadraticFormField& Q, double R, double Rbar, double q) {
  if (!(R >= 0) || !(Rbar >= 0)) throw Error(ErrorKind::InvalidParams, "R and Rbar must be >= 0");
  if (!(q >= 2)) throw Error(ErrorKind::InvalidParams, "yamabe exponent must be >= 2");
  BuiltinOperator b;
  b.op.name = "yamabe-type";
  b.op.A = [Q](const Point& x, double, const Eigen::VectorXd& xi) { return Eigen::VectorXd(Q.at(x) * xi); };
  b.op.Atilde = [Q](const Point& x, double, const Eigen::VectorXd& xi) {
    return Eigen::VectorXd(matrix_sqrt(Q.at(x)) * xi);
  };
  b.op.B = [R, Rbar, q](const Point&, double z, const Eigen::VectorXd&) {
    return R * z - Rbar * std::pow(std::abs(z), q - 2) * z;
  };
  // |B| <= R |z| + Rbar |z|^{q-1} <= (R + Rbar) |z|^{q-1} + R since |z| <= |z|^{q-1} + 1.
  b.coeffs.p = b.coeffs.gamma = b.coeffs.psi = 2;
  b.coeffs.delta = q;
  b.coeffs.a = 2;
  b.coeffs.d = CoefficientField::constant(R + Rbar);
  b.coeffs.f = CoefficientField::constant(R);
  return b;
}

}  // namespace degen
