#pragma once

// Constants of the local sup bound, the exponent cascade, a numerical trace of
// the Moser iteration, the bound itself, the gradient estimate, and the
// constants of the corollaries.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "degen/function_spaces.hpp"
#include "degen/structural.hpp"

namespace degen {

enum class Psi0Convention { Proof, Statement };

struct EstimateParams {
  double eps1 = 1, eps2 = 1, eps3 = 1;
  double tau = 0.5;
  double sstar = std::numeric_limits<double>::infinity();
  // Exponent of the energy condition; t' = t/(t-1), t = inf gives t' = 1.
  double t = std::numeric_limits<double>::infinity();
  int jmax = 10;
  Psi0Convention psi0 = Psi0Convention::Proof;
  // Power of q in the caloric inequality; the recursion uses c* + 1.
  double cstar = 0;
};

struct DerivedExponents {
  double sprime = 0, s = 1, tprime = 1;
};

// s' = s*/p, s its dual (s = 1 when s* = inf); requires s* > p sigma' so that 1 <= s < sigma.
DerivedExponents derive_exponents(const EstimateParams& params, double p, double sigma);

struct ZTerms {
  double total = 1;
  double b = 0, c = 0, h = 0, d = 0;
};

// 1 + r^{p-1} <b>_{p'sigma'} + (r^p <c^{p/(p+1-psi)} ubar^{p(psi-p)/(p+1-psi)}>_{p sigma'/(p-eps1)})^{1/eps1}
//   + (r^p <h>_{p sigma'/(p-eps2)})^{1/eps2} + (r^p <d>_{p sigma'/(p-eps3)})^{1/eps3}
ZTerms z_form(const CoefficientField& b, const CoefficientField& c, const CoefficientField& h,
              const CoefficientField& d, const ScalarField& ubar, const BallIndexSet& ball,
              const EstimateParams& params, double p, double sigma, double psi);

// With barred coefficients for shift k. k = 0 is accepted only when e, f, g
// vanish on the ball (the k -> 0 limit, where the bars drop).
ZTerms compute_Zbar(const StructuralCoefficients& s, double k, const ScalarField& ubar, const BallIndexSet& ball,
                    const EstimateParams& params, double sigma);
ZTerms compute_Z(const StructuralCoefficients& s, const ScalarField& ubar, const BallIndexSet& ball,
                 const EstimateParams& params, double sigma);
// Bundled coefficients b|u|^{gamma-p}, h|u|^{gamma-p}, d|u|^{delta-p}.
ZTerms compute_Zstar(const StructuralCoefficients& s, const ScalarField& u, const ScalarField& ubar,
                     const BallIndexSet& ball, const EstimateParams& params, double sigma, const GridDomain& grid);
// Upper bound for Z* with sup norms of the coefficients factored out.
ZTerms zstar_strong(const StructuralCoefficients& s, const ScalarField& u, const ScalarField& ubar,
                    const BallIndexSet& ball, const EstimateParams& params, double sigma);

struct ChainCheck {
  double barred = 0;    // b-, h-, d-terms of Zbar
  double split = 0;     // same with the bars expanded by Minkowski
  double bound = 0;     // 1 + 2^{1/eps2} + 2^{1/eps3} + unbarred terms with factors
  bool holds = false;
};

ChainCheck zbar_chain(const StructuralCoefficients& s, double k, const BallIndexSet& ball,
                      const EstimateParams& params, double sigma);

double psi0(double sigma, double s, Psi0Convention convention = Psi0Convention::Proof);

struct Cascade {
  double X = 0, mu = 0;
  std::vector<double> Y, q, beta;  // j = 0..jmax
};

Cascade exponent_cascade(double p, double sigma, double s, int jmax);

struct IterationStep {
  int j = 0;
  double Y = 0, q = 0;
  // log of the averages x, y, z for eta = eta_j, Y = Y_j
  double log_x = 0, log_y = 0, log_z = 0;
  // caloric inequality: z <= C q^{c*} Zbar (y + x/r)
  double caloric_measured = 0;
  // recursion: lhs <= (C Zbar N^j q^{b*})^{p/Y} rhs; measured is the rooted C^{p/Y}
  double recursion_lhs = 0, recursion_rhs = 0, recursion_measured = 0;
  double log_recursion_C = 0;  // log of C itself, (Y/p) log(measured)
};

struct GradientEstimate {
  double lhs = 0, rhs = 0, ratio = 0;
};

struct IterationTrace {
  std::vector<IterationStep> steps;
  // avnorm(ubar, s p X^j, tau B), j = 0..jmax
  std::vector<double> cascade_norms;
  double sup_tau_ball = 0;
  GradientEstimate gradient;
};

// Shift data shared by the trace and the bound.
struct ShiftedSolution {
  double k = 0;
  bool k_limit = false;  // k = 0 by the vanishing of e, f, g
  SobolevPair ubar;
  ZTerms Zbar;
};

ShiftedSolution shift_solution(const SobolevPair& u, const BallIndexSet& ball, const StructuralCoefficients& s,
                               const EstimateParams& params, double sigma);

IterationTrace iteration_trace(const SobolevPair& u, const BallIndexSet& ball, const CutoffSequence& cutoffs,
                               const StructuralCoefficients& s, const EstimateParams& params, const FormSamples& Q,
                               const GridDomain& grid, double sigma);

GradientEstimate gradient_estimate(const SobolevPair& u, const BallIndexSet& ball, const StructuralCoefficients& s,
                                   const EstimateParams& params, const FormSamples& Q, const GridDomain& grid,
                                   double sigma);

struct BoundReport {
  double k = 0;
  bool k_limit = false;
  ZTerms Zbar, Z;
  ChainCheck chain;
  double Psi0 = 0, s = 1, X = 0;
  double avnorm_sp = 0;
  double rhs_bound = 0;
  double measured_sup = 0;
  double measured_C = 0;
  bool radius_admissible = false;  // r < tau r1(y)
  double r1 = 0;
  CutoffSequence cutoffs;
  IterationTrace trace;
};

// Requires gamma = delta = p and psi in [p, p + 1 - 1/sigma).
BoundReport verify_main_bound(const SobolevPair& u, const BallIndexSet& ball, const StructuralCoefficients& s,
                              const EstimateParams& params, const FormSamples& Q, const QuasimetricSpace& space,
                              const GridDomain& grid, double sigma);

struct SweepAssessment {
  double min = 0, max = 0, drift = 0;
  bool stable = false;
};

// drift = max/min - 1 (zero when every value is zero).
SweepAssessment assess_sweep(const std::vector<double>& values, double tolerance);

enum class CorollaryVariant { AllP, AllBelowP, FirstAboveP, SecondAboveP };

CorollaryVariant corollary_variant_from_string(const std::string& name);
std::string to_string(CorollaryVariant v);

struct CorollaryInput {
  double qstar = 0, c0 = 0;
  double eps = 0.01;
  // Declared integrability exponents for the second variant (B, C, D, E, F, G, H).
  double expB = 0, expC = 0, expD = 0, expE = 0, expF = 0, expG = 0, expH = 0;
};

struct CorollaryReport {
  CorollaryVariant variant = CorollaryVariant::AllP;
  double K = 0;
  double eta = 0;          // exponent of r in K (first variant)
  bool eta_positive = false;
  double theta = 0;
  bool C1_zero = false, C2_zero = false;
  double sup_b = 0, sup_c = 0, sup_d = 0, sup_e = 0, sup_f = 0, sup_g = 0, sup_h = 0;
  double avnorm_sp = 0;       // of |u|
  double avnorm_theta = 0;    // of |u| at exponent theta (first > p)
  double avnorm_psigma = 0;   // of |u| at exponent p sigma (second > p)
  double Zstar_strong = 0;
  double rhs = 0;             // assembled with unit constants
  double qstar_limit = 0;     // second > p: min of the exponent products
};

CorollaryReport corollary_constants(CorollaryVariant variant, const StructuralCoefficients& s,
                                    const BallIndexSet& ball, const GridDomain& grid, const CorollaryInput& in,
                                    const EstimateParams& params, double sigma, const ScalarField* u = nullptr);

}  // namespace degen
