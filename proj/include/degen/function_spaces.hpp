#pragma once

// Degenerate Sobolev pairs, ball averages and norms, cutoff sequences, and the
// truncated power test functions used in the Moser iteration.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "degen/errors.hpp"
#include "degen/geometry.hpp"
#include "degen/grid.hpp"

namespace degen {

// A function together with its designated gradient; v is never recomputed from w.
struct SobolevPair {
  ScalarField w;
  VectorField v;
};

// Pair whose gradient is the centered-difference gradient of w.
SobolevPair pair_from_values(const ScalarField& w, const GridDomain& grid);

// Per-cell |sqrt(Q) v|.
ScalarField form_lengths(const VectorField& v, const FormSamples& Q, const GridDomain& grid);

// (sum |w|^p h^n + sum <Q v, v>^{p/2} h^n)^{1/p} over masked cells.
double wqp_norm(const SobolevPair& pair, const FormSamples& Q, const GridDomain& grid, double p);
// Gradient part only.
double form_weighted_norm(const VectorField& v, const FormSamples& Q, const GridDomain& grid, double p);

// log of (mean over `cells` of |f|^alpha)^{1/alpha}, evaluated with the
// maximum factored out so that large alpha does not overflow. alpha = inf
// gives the max. Returns -inf when f vanishes on the cells.
template <typename Derived>
double log_avnorm(const Eigen::DenseBase<Derived>& f, double alpha, const std::vector<Index>& cells) {
  if (cells.empty()) throw Error(ErrorKind::EmptyBall, "average over an empty set");
  if (!(alpha > 0)) throw Error(ErrorKind::InvalidParams, "average exponent must be positive");
  double M = 0;
  for (Index c : cells) M = std::max(M, std::abs(double(f(c))));
  if (M == 0) return -std::numeric_limits<double>::infinity();
  if (std::isinf(M)) return M;
  if (std::isinf(alpha)) return std::log(M);
  double acc = 0;
  for (Index c : cells) acc += std::pow(std::abs(double(f(c))) / M, alpha);
  return std::log(M) + std::log(acc / double(cells.size())) / alpha;
}

template <typename Derived>
double avnorm(const Eigen::DenseBase<Derived>& f, double alpha, const std::vector<Index>& cells) {
  return std::exp(log_avnorm(f, alpha, cells));
}

template <typename Derived>
double avnorm(const Eigen::DenseBase<Derived>& f, double alpha, const BallIndexSet& ball) {
  return avnorm(f, alpha, ball.cells);
}

// Unnormalized (sum_E |f|^alpha h^n)^{1/alpha}; alpha = inf gives the max.
template <typename Derived>
double lp_norm(const Eigen::DenseBase<Derived>& f, double alpha, const std::vector<Index>& cells,
               const GridDomain& grid) {
  if (cells.empty()) return 0;
  const double la = log_avnorm(f, alpha, cells);
  if (std::isinf(alpha)) return std::exp(la);
  return std::exp(la + std::log(double(cells.size()) * grid.cell_volume()) / alpha);
}

struct MorreyRow {
  Point center;
  double radius = 0;
  double value = 0;
};

struct MorreyResult {
  double value = 0;
  std::vector<MorreyRow> rows;
};

// max over balls of r^alpha * avnorm(m, beta, B(y, r)).
MorreyResult morrey_norm(const ScalarField& m, double alpha, double beta, const QuasimetricSpace& space,
                         const GridDomain& grid, const std::vector<BallSample>& balls);
std::string morrey_csv(const MorreyResult& result);

struct CutoffSequence {
  // etas[j-1] is eta_j, j = 1..jmax+1.
  std::vector<ScalarField> etas;
  std::vector<double> radii;  // r_1..r_{jmax+2}
  double tau = 0.5;
  double N = 2;
  double sstar = std::numeric_limits<double>::infinity();
  // max_j r * avnorm(|sqrt(Q) grad eta_j|, s*) / N^j
  double Csstar = 0;
  // avnorm(|sqrt(Q)|_op, s*) / (1 - tau)
  double Csstar_predicted = 0;
  std::vector<double> slope_constants;
  std::vector<ScalarField> gradient_lengths;  // |sqrt(Q) grad eta_j| per cell
};

// Piecewise linear cutoffs in rho(y, .): eta_j = 1 on B(y, r_{j+1}), zero off
// B(y, r_j), with r_j = tau r + (1 - tau) r 2^{1-j}.
CutoffSequence cutoff_sequence(const BallIndexSet& ball, double tau, int jmax, const FormSamples& Q,
                               const GridDomain& grid,
                               double sstar = std::numeric_limits<double>::infinity());

struct TestFamily {
  std::vector<double> betas{1, 2, 4};
  // Bumps are placed at scales r, r/2, r/4, ... down to this many cells.
  double min_scale_cells = 3;
  int max_levels = 12;
  // Multiply each bump by 1, (x_1 - y_1)/s and 1 + (x_1 - y_1)/s.
  bool with_polynomials = true;
};

struct SobolevResult {
  double C = 0;
  BallSample worst_ball;
  double worst_scale = 0;
  double worst_beta = 0;
  int evaluated = 0;
};

// Best constant of avnorm(w, p sigma) <= C [ r avnorm(|sqrt(Q) grad w|, p) + avnorm(w, p) ]
// over the test family on each ball.
SobolevResult verify_sobolev(const FormSamples& Q, const QuasimetricSpace& space, const GridDomain& grid, double p,
                             double sigma, const std::vector<BallSample>& balls, const TestFamily& family = {});

// Truncated powers F, G and their derivatives.
struct TestFunctions {
  double k = 0, q = 1, l = 1, mu = 1, beta = 1;

  double F(double tbar) const;
  double dF(double tbar) const;
  double G(double t) const;
  // Value on the inner branch at |t| + k = l.
  double dG(double t) const;
  // |G| <= F F'^mu and 0 <= G' <= beta q^mu l^{(mu+1)(q-1)} on the samples.
  bool satisfies_bounds(const std::vector<double>& ts) const;
};

TestFunctions build_F_G(double k, double q, double l, double p, double sigma);

// (G(u), G'(u) grad u); throws BadLevel when |u| + k hits the corner l.
SobolevPair apply_G(const SobolevPair& u, const TestFunctions& g, const GridDomain& grid);

struct Truncation {
  double q = 1, theta = 1, l = 1, p = 2, m = 1;
  double H(double t) const;
  double dH(double t) const;
  // m l^{m-1}
  double derivative_bound() const;
};

Truncation build_H_trunc(double q, double theta, double l, double p);

// (|u| + k, sign(u) grad u) with sign(0) = +1.
SobolevPair abs_shift(const SobolevPair& u, double k);

// (eta^theta w, theta eta^{theta-1} w grad eta + eta^theta grad w).
SobolevPair product_with_cutoff(const ScalarField& eta, double theta, const SobolevPair& w, const GridDomain& grid);

// Increasing positive levels that no field attains.
std::vector<double> pick_good_levels(const std::vector<ScalarField>& fields, int count, const GridDomain& grid);

struct IntegrabilityResult {
  double lpsigma_norm = 0;  // ||w||_{L^{p sigma}(tau B)}
  double wqp = 0;
  double ratio = 0;
};

IntegrabilityResult higher_integrability(const SobolevPair& pair, const BallIndexSet& ball, double tau,
                                         const FormSamples& Q, const GridDomain& grid, double p, double sigma);

}  // namespace degen
