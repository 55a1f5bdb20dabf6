#pragma once

// Finite-difference solvers for div(Q grad u) = f and the p-Laplacian, the
// weak form Lambda(phi, u), and the dual-norm bounds for A~ and B.

#include <optional>

#include "degen/function_spaces.hpp"
#include "degen/structural.hpp"

namespace degen {

struct DiscreteProblem {
  GridDomain grid;
  QuadraticFormField Q;
  ScalarField rhs;       // f, one value per cell
  ScalarField boundary;  // Dirichlet values, read on boundary cells
  double p = 2;
};

struct SolveResult {
  SobolevPair u;            // gradient = centered differences of u
  double shift = 0;         // diagonal shift used by the factorization, 0 if none
  double residual = 0;      // relative residual of the (nonlinear) discrete system
  int iterations = 0;
  bool converged = true;
};

// Conservative flux scheme with face-averaged Q (tangential face derivatives
// from averaged centered differences), Dirichlet data on boundary cells.
SolveResult solve_linear_divergence(const DiscreteProblem& problem);

struct PicardOptions {
  int max_iter = 200;
  double damping = 1.0;
  double tolerance = 1e-6;
  double regularization = 1e-8;
};

// Damped Picard iteration on div((|grad u|^2 + reg)^{(p-2)/2} grad u) = f.
SolveResult solve_plaplacian(const GridDomain& grid, double p, const ScalarField& rhs, const ScalarField& boundary,
                             const PicardOptions& opt = {});

// Midpoint value of sum h^n [sqrt(Q) grad phi . A~ + phi B]; falls back to
// grad phi . A when the operator has no A~. phi must vanish on boundary cells.
double weak_residual(const SobolevPair& u, const OperatorSampler& op, const SobolevPair& phi, const FormSamples& Q,
                     const GridDomain& grid);

// Declared integrability of the coefficients (same layout as the required table).
struct DeclaredIntegrability {
  IntegrabilityTable exponents;
};

struct DualNorms {
  double norm_Atilde = 0;  // ||A~(., u, grad u)||_{L^{p'}(B)}
  double norm_B = 0;       // ||B(., u, grad u)||_{L^{(sigma p)'}(B)}
  double bound_Atilde = 0;
  double bound_B = 0;
  bool dominated = false;
};

// Norms on the ball and the Hoelder-split upper bounds built from the
// structural coefficients; IntegrabilityViolated when a declared exponent is
// below the required one.
DualNorms dual_norms(const SobolevPair& u, const OperatorSampler& op, const BallIndexSet& ball, double sigma,
                     const StructuralCoefficients& s, const FormSamples& Q, const GridDomain& grid,
                     const std::optional<DeclaredIntegrability>& declared = std::nullopt);

struct LambdaEstimate {
  double lambda = 0;
  double bound = 0;     // (||A~||_{p'} + C ||B||_{(sigma p)'}) ||phi||_{W^{1,p}_Q(B)}
  double sobolev_C = 0; // ||phi||_{L^{sigma p}(B)} / ||phi||_{W^{1,p}_Q(B)}
  bool holds = false;
};

LambdaEstimate lambda_estimate(const SobolevPair& u, const OperatorSampler& op, const SobolevPair& phi,
                               const BallIndexSet& ball, double p, double sigma, const FormSamples& Q,
                               const GridDomain& grid);

}  // namespace degen
