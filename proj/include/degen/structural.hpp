#pragma once

// Structural coefficients of div A(x, u, grad u) = B(x, u, grad u), pointwise
// checks of the two equivalent forms of the structure conditions, and the
// coefficient surgery used by the local bound.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "degen/geometry.hpp"
#include "degen/grid.hpp"

namespace degen {

// Nonnegative coefficient: a constant or one value per grid cell.
class CoefficientField {
 public:
  CoefficientField() = default;
  static CoefficientField constant(double v);
  static CoefficientField cells(ScalarField v);

  bool is_constant() const { return values_.size() == 0; }
  double constant_value() const { return constant_; }
  // Per-cell values; empty for constants.
  const ScalarField& values() const { return values_; }
  double at(Index c) const { return is_constant() ? constant_ : values_(c); }
  // Per-cell values on `grid` (constants broadcast).
  ScalarField on(const GridDomain& grid) const;
  bool vanishes_on(const std::vector<Index>& cells) const;
  double sup_on(const std::vector<Index>& cells) const;

  CoefficientField operator*(double s) const;
  CoefficientField operator+(const CoefficientField& o) const;

 private:
  double constant_ = 0;
  ScalarField values_;
};

struct StructuralCoefficients {
  double p = 2, gamma = 2, psi = 2, delta = 2;
  double a = 2;
  CoefficientField b, c, d, e, f, g, h;
};

// a' = C^{p/2} a, b' = C^{1/2} b, e' = C^{1/2} e, c' = C^{(psi-1)/2} c; valid
// for any form H with C^{-1} Q <= H <= C Q.
StructuralCoefficients transform_structure(const StructuralCoefficients& s, double C);

// Coefficients of the linear equation
//   div(Q grad u - sqrt(Q) S^T G u + sqrt(Q) T^T g) = f - <H, R sqrt(Q) grad u> - F u
// with subunit row matrices R, S, T; all exponents equal 2.
StructuralCoefficients linear_to_structural(const Eigen::VectorXd& Hvec, const Eigen::VectorXd& Gvec, double F,
                                            double fdat, const Eigen::VectorXd& gvec, int n);

struct RangesReport {
  bool ok = false;
  bool gamma_ok = false, psi_ok = false, delta_ok = false;
  double gamma_max = 0, psi_max = 0, delta_max = 0;  // open upper ends; lower ends are 1
};

RangesReport check_ranges(double p, double sigma, double gamma, double psi, double delta);

using VectorMap = std::function<Eigen::VectorXd(const Point& x, double z, const Eigen::VectorXd& xi)>;
using ScalarMap = std::function<double(const Point& x, double z, const Eigen::VectorXd& xi)>;

struct OperatorSampler {
  std::string name;
  VectorMap A;
  VectorMap Atilde;  // optional
  ScalarMap B;
  ScalarMap atilde;  // optional
};

struct StructSample {
  Index cell = 0;
  double z = 0;
  Eigen::VectorXd xi;
};

// z in {0, +-1, +-10} times xi in (sphere samples) x {0.1, 1, 10}, at each cell.
std::vector<StructSample> full_samples(const GridDomain& grid, const std::vector<Index>& cells, int nsphere = 16);
// z = u(x), xi = grad u(x): the relaxed form that only involves the solution.
std::vector<StructSample> trace_samples(const GridDomain& grid, const std::vector<Index>& cells,
                                        const ScalarField& u, const VectorField& grad);

struct Violation {
  Index cell = 0;
  double z = 0;
  Eigen::VectorXd xi;
  std::string condition;  // "i".."iv"
  double lhs = 0, rhs = 0;
};

struct StructReport {
  std::vector<Violation> violations;
  std::size_t checked = 0;
  // (i) was checked through A in range(sqrt Q) and A~ = N A.
  bool reconstructed_atilde = false;
  bool ok() const { return violations.empty(); }
};

struct StructOptions {
  // Demand an explicit A~ for condition (i).
  bool strict = false;
  int eta_samples = 32;
};

StructReport check_struct(const OperatorSampler& op, const StructuralCoefficients& s, const QuadraticFormField& Q,
                          const GridDomain& grid, const std::vector<StructSample>& samples,
                          const StructOptions& opt = {});
StructReport check_struct3(const OperatorSampler& op, const StructuralCoefficients& s, const QuadraticFormField& Q,
                           const GridDomain& grid, const std::vector<StructSample>& samples,
                           const StructOptions& opt = {});

// atilde = |A~|.
OperatorSampler struct_to_struct3(const OperatorSampler& op);
// A~ = N A with N the inverse of sqrt(Q) on its range and the identity on
// ker Q; evaluating A~ throws AnotInRange when A has a kernel component.
OperatorSampler struct3_to_struct(const OperatorSampler& op, const QuadraticFormField& Q);

struct BarredCoefficients {
  CoefficientField bbar, hbar, dbar;
};

// b + k^{1-p} e, h + k^{-p} g, d + k^{1-p} f.
BarredCoefficients bar_coefficients(const StructuralCoefficients& s, double k);

// Average of a coefficient over cells (constants returned exactly).
double coefficient_avnorm(const CoefficientField& f, double alpha, const std::vector<Index>& cells);

// The shift constant built from e, g, f on the ball; zero when they vanish there.
double compute_k(const StructuralCoefficients& s, const BallIndexSet& ball, double eps2, double eps3, double sigma);

struct BundledCoefficients {
  ScalarField bstar, dstar, hstar;
};

// b |u|^{gamma-p}, d |u|^{delta-p}, h |u|^{gamma-p}.
BundledCoefficients bundle_coefficients(const StructuralCoefficients& s, const ScalarField& u, const GridDomain& grid);

// Exponents below p folded into the inhomogeneous terms: e + b, g + h, f + c + d.
StructuralCoefficients reduce_below_p(const StructuralCoefficients& s);

struct IntegrabilityTable {
  double c = 0, e = 0, f = 0, b = 0, d = 0;
};

IntegrabilityTable required_integrability(double p, double sigma, double gamma, double psi, double delta);

// Dual exponent t/(t-1), with 1 <-> inf.
double dual_exponent(double t);

}  // namespace degen
