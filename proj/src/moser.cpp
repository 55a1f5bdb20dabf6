#include "degen/moser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "degen/errors.hpp"

namespace degen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log of (mean over the entries of exp(alpha * lf))^{1/alpha}, entries may be -inf.
double log_power_mean(const std::vector<double>& lf, double alpha) {
  if (lf.empty()) throw Error(ErrorKind::EmptyBall, "average over an empty set");
  const double M = *std::max_element(lf.begin(), lf.end());
  if (std::isinf(M)) {
    if (M > 0) throw Error(ErrorKind::DivergentNorm, "infinite value inside the ball");
    return M;
  }
  if (std::isinf(alpha)) return M;
  double acc = 0;
  for (double v : lf) acc += std::exp(alpha * (v - M));
  return M + std::log(acc / double(lf.size())) / alpha;
}

double log_add(double a, double b) {
  if (std::isinf(a) && a < 0) return b;
  if (std::isinf(b) && b < 0) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double safe_log(double v) { return v > 0 ? std::log(v) : -kInf; }

void require_params(const EstimateParams& params) {
  for (double e : {params.eps1, params.eps2, params.eps3})
    if (!(e > 0 && e <= 1)) throw Error(ErrorKind::InvalidParams, "eps_i must lie in (0, 1]");
  if (!(params.tau > 0 && params.tau < 1)) throw Error(ErrorKind::InvalidParams, "tau must lie in (0, 1)");
  if (params.jmax < 1) throw Error(ErrorKind::InvalidParams, "jmax must be >= 1");
}

void require_psi_window(double p, double sigma, double psi) {
  if (!(psi >= p && psi < p + 1 - 1 / sigma))
    throw Error(ErrorKind::RangeViolation, "psi must lie in [p, p + 1 - 1/sigma)");
}

// r^{p-1} <b>_{p'sigma'}
double b_term(const CoefficientField& b, const BallIndexSet& ball, double p, double sigma) {
  return std::pow(ball.radius, p - 1) *
         coefficient_avnorm(b, dual_exponent(p) * dual_exponent(sigma), ball.cells);
}

// (r^p <f>_{p sigma'/(p-eps)})^{1/eps}
double eps_term(const CoefficientField& f, const BallIndexSet& ball, double p, double sigma, double eps) {
  return std::pow(std::pow(ball.radius, p) * coefficient_avnorm(f, p * dual_exponent(sigma) / (p - eps), ball.cells),
                  1 / eps);
}

double coefficient_lp(const CoefficientField& f, double alpha, const BallIndexSet& ball) {
  if (std::isinf(alpha)) return f.sup_on(ball.cells);
  return coefficient_avnorm(f, alpha, ball.cells) * std::pow(ball.measure, 1 / alpha);
}

}  // namespace

DerivedExponents derive_exponents(const EstimateParams& params, double p, double sigma) {
  const double sigp = dual_exponent(sigma);
  if (!(params.sstar > p * sigp)) throw Error(ErrorKind::InvalidParams, "s* must exceed p sigma'");
  if (!(params.t >= 1)) throw Error(ErrorKind::InvalidParams, "t must be >= 1");
  DerivedExponents d;
  d.sprime = params.sstar / p;
  d.s = dual_exponent(d.sprime);
  d.tprime = dual_exponent(params.t);
  return d;
}

ZTerms z_form(const CoefficientField& b, const CoefficientField& c, const CoefficientField& h,
              const CoefficientField& d, const ScalarField& ubar, const BallIndexSet& ball,
              const EstimateParams& params, double p, double sigma, double psi) {
  require_params(params);
  ZTerms z;
  z.b = b_term(b, ball, p, sigma);
  const double alpha1 = p * dual_exponent(sigma) / (p - params.eps1);
  const double ec = p / (p + 1 - psi), eu = p * (psi - p) / (p + 1 - psi);
  double cav;
  if (psi == p) {
    cav = std::pow(coefficient_avnorm(c, alpha1 * ec, ball.cells), ec);
  } else {
    ScalarField w = ScalarField::Zero(ubar.size());
    for (Index cell : ball.cells) w(cell) = std::pow(c.at(cell), ec) * std::pow(ubar(cell), eu);
    cav = avnorm(w, alpha1, ball);
  }
  z.c = std::pow(std::pow(ball.radius, p) * cav, 1 / params.eps1);
  z.h = eps_term(h, ball, p, sigma, params.eps2);
  z.d = eps_term(d, ball, p, sigma, params.eps3);
  z.total = 1 + z.b + z.c + z.h + z.d;
  return z;
}

ZTerms compute_Zbar(const StructuralCoefficients& s, double k, const ScalarField& ubar, const BallIndexSet& ball,
                    const EstimateParams& params, double sigma) {
  require_psi_window(s.p, sigma, s.psi);
  if (k < 0 || std::isnan(k)) throw Error(ErrorKind::NonpositiveK, "k must be positive");
  if (k == 0) {
    if (!(s.e.vanishes_on(ball.cells) && s.f.vanishes_on(ball.cells) && s.g.vanishes_on(ball.cells)))
      throw Error(ErrorKind::NonpositiveK, "k = 0 needs e, f, g to vanish on the ball");
    return z_form(s.b, s.c, s.h, s.d, ubar, ball, params, s.p, sigma, s.psi);
  }
  const auto bar = bar_coefficients(s, k);
  return z_form(bar.bbar, s.c, bar.hbar, bar.dbar, ubar, ball, params, s.p, sigma, s.psi);
}

ZTerms compute_Z(const StructuralCoefficients& s, const ScalarField& ubar, const BallIndexSet& ball,
                 const EstimateParams& params, double sigma) {
  require_psi_window(s.p, sigma, s.psi);
  return z_form(s.b, s.c, s.h, s.d, ubar, ball, params, s.p, sigma, s.psi);
}

ZTerms compute_Zstar(const StructuralCoefficients& s, const ScalarField& u, const ScalarField& ubar,
                     const BallIndexSet& ball, const EstimateParams& params, double sigma, const GridDomain& grid) {
  const auto rr = check_ranges(s.p, sigma, s.gamma, s.psi, s.delta);
  if (!rr.ok || s.gamma < s.p || s.psi < s.p || s.delta < s.p)
    throw Error(ErrorKind::RangeViolation, "bundling needs p <= gamma, psi, delta inside the admissible ranges");
  const auto bund = bundle_coefficients(s, u, grid);
  const bool flat_g = s.gamma == s.p, flat_d = s.delta == s.p;
  return z_form(flat_g ? s.b : CoefficientField::cells(bund.bstar), s.c,
                flat_g ? s.h : CoefficientField::cells(bund.hstar), flat_d ? s.d : CoefficientField::cells(bund.dstar),
                ubar, ball, params, s.p, sigma, s.psi);
}

ZTerms zstar_strong(const StructuralCoefficients& s, const ScalarField& u, const ScalarField& ubar,
                    const BallIndexSet& ball, const EstimateParams& params, double sigma) {
  require_params(params);
  const double p = s.p, sp = dual_exponent(sigma), pp = dual_exponent(p);
  ScalarField ug = ScalarField::Ones(u.size()), ud = ug, uc = ug;
  const double ec = p / (p + 1 - s.psi), eu = p * (s.psi - p) / (p + 1 - s.psi);
  for (Index c : ball.cells) {
    ug(c) = std::pow(std::abs(u(c)), s.gamma - p);
    ud(c) = std::pow(std::abs(u(c)), s.delta - p);
    uc(c) = std::pow(ubar(c), eu);
  }
  ZTerms z;
  z.b = s.b.sup_on(ball.cells) * avnorm(ug, pp * sp, ball);
  z.c = std::pow(std::pow(s.c.sup_on(ball.cells), ec) * avnorm(uc, p * sp / (p - params.eps1), ball),
                 1 / params.eps1);
  z.h = std::pow(s.h.sup_on(ball.cells) * avnorm(ug, p * sp / (p - params.eps2), ball), 1 / params.eps2);
  z.d = std::pow(s.d.sup_on(ball.cells) * avnorm(ud, p * sp / (p - params.eps3), ball), 1 / params.eps3);
  z.total = 1 + z.b + z.c + z.h + z.d;
  return z;
}

ChainCheck zbar_chain(const StructuralCoefficients& s, double k, const BallIndexSet& ball,
                      const EstimateParams& params, double sigma) {
  require_params(params);
  const double p = s.p, r = ball.radius, e2 = params.eps2, e3 = params.eps3;
  const double sp = dual_exponent(sigma), pp = dual_exponent(p);
  const double a1 = pp * sp, a2 = p * sp / (p - e2), a3 = p * sp / (p - e3);
  const auto& cells = ball.cells;
  ChainCheck ch;
  const double avb = coefficient_avnorm(s.b, a1, cells), avh = coefficient_avnorm(s.h, a2, cells),
               avd = coefficient_avnorm(s.d, a3, cells);
  if (k > 0) {
    const auto bar = bar_coefficients(s, k);
    ch.barred = b_term(bar.bbar, ball, p, sigma) + eps_term(bar.hbar, ball, p, sigma, e2) +
                eps_term(bar.dbar, ball, p, sigma, e3);
    const double ave = coefficient_avnorm(s.e, a1, cells), avg = coefficient_avnorm(s.g, a2, cells),
                 avf = coefficient_avnorm(s.f, a3, cells);
    ch.split = std::pow(r, p - 1) * (avb + std::pow(k, 1 - p) * ave) +
               std::pow(std::pow(r, p) * avh + std::pow(k, -p) * std::pow(r, p) * avg, 1 / e2) +
               std::pow(std::pow(r, p) * avd + std::pow(k, 1 - p) * std::pow(r, p) * avf, 1 / e3);
  } else {
    ch.barred = b_term(s.b, ball, p, sigma) + eps_term(s.h, ball, p, sigma, e2) + eps_term(s.d, ball, p, sigma, e3);
    ch.split = ch.barred;
  }
  const double t2 = std::pow(2.0, 1 / e2), t3 = std::pow(2.0, 1 / e3);
  ch.bound = 1 + t2 + t3 + std::pow(r, p - 1) * avb + t2 * std::pow(std::pow(r, p) * avh, 1 / e2) +
             t3 * std::pow(std::pow(r, p) * avd, 1 / e3);
  const double tol = 1e-12;
  ch.holds = ch.barred <= ch.split * (1 + tol) + tol && ch.split <= ch.bound * (1 + tol);
  return ch;
}

double psi0(double sigma, double s, Psi0Convention convention) {
  if (!(s >= 1 && s < sigma)) throw Error(ErrorKind::InvalidParams, "need 1 <= s < sigma");
  return convention == Psi0Convention::Proof ? sigma / (sigma - s) : s / (sigma - s);
}

Cascade exponent_cascade(double p, double sigma, double s, int jmax) {
  if (!(s >= 1 && s < sigma)) throw Error(ErrorKind::InvalidParams, "need 1 <= s < sigma");
  if (jmax < 0) throw Error(ErrorKind::InvalidParams, "jmax must be >= 0");
  Cascade c;
  c.X = sigma / s;
  c.mu = p * sigma - 1;
  for (int j = 0; j <= jmax; ++j) {
    const double Y = p * std::pow(c.X, j);
    const double q = 1 + (Y - p) / (p * sigma);
    c.Y.push_back(Y);
    c.q.push_back(q);
    c.beta.push_back((c.mu + 1) * q - c.mu);
  }
  return c;
}

ShiftedSolution shift_solution(const SobolevPair& u, const BallIndexSet& ball, const StructuralCoefficients& s,
                               const EstimateParams& params, double sigma) {
  ShiftedSolution out;
  out.k = compute_k(s, ball, params.eps2, params.eps3, sigma);
  out.k_limit = out.k == 0;
  out.ubar = abs_shift(u, out.k);
  out.Zbar = compute_Zbar(s, out.k, out.ubar.w, ball, params, sigma);
  return out;
}

namespace {

GradientEstimate gradient_from_shift(const SobolevPair& u, const ShiftedSolution& sh, const BallIndexSet& ball,
                                     const StructuralCoefficients& s, const EstimateParams& params,
                                     const FormSamples& Q, const GridDomain& grid, double sigma) {
  const auto d = derive_exponents(params, s.p, sigma);
  const auto inner = sub_ball(grid, ball, params.tau * ball.radius);
  GradientEstimate g;
  g.lhs = lp_norm(form_lengths(u.v, Q, grid), s.p, inner.cells, grid);
  g.rhs = sh.Zbar.total * (lp_norm(sh.ubar.w, s.p, ball.cells, grid) / ball.radius +
                           lp_norm(sh.ubar.w, d.tprime * s.p, ball.cells, grid));
  g.ratio = g.rhs > 0 ? g.lhs / g.rhs : 0;
  return g;
}

IterationTrace trace_from_shift(const SobolevPair& u, const ShiftedSolution& sh, const BallIndexSet& ball,
                                const CutoffSequence& cutoffs, const StructuralCoefficients& s,
                                const EstimateParams& params, const FormSamples& Q, const GridDomain& grid,
                                double sigma) {
  const double p = s.p;
  const auto d = derive_exponents(params, p, sigma);
  const auto cas = exponent_cascade(p, sigma, d.s, params.jmax);
  if (int(cutoffs.etas.size()) < params.jmax + 1)
    throw Error(ErrorKind::InvalidParams, "cutoff sequence shorter than jmax + 1");
  const double bstar = params.cstar + 1;
  const double logZ = std::log(sh.Zbar.total), logr = std::log(ball.radius);

  std::vector<double> lu, lgu;
  const ScalarField gu = form_lengths(sh.ubar.v, Q, grid);
  for (Index c : ball.cells) {
    if (!std::isfinite(sh.ubar.w(c))) throw Error(ErrorKind::DivergentNorm, "non-finite solution value");
    lu.push_back(safe_log(sh.ubar.w(c)));
    lgu.push_back(safe_log(gu(c)));
  }

  IterationTrace tr;
  const std::size_t m = ball.cells.size();
  std::vector<double> lx(m), ly(m), lz(m), lhs(m), rhs(m);
  for (int j = 1; j <= params.jmax; ++j) {
    const double Y = cas.Y[j], q = cas.q[j], a = Y / p;
    const ScalarField& eta = cutoffs.etas[j - 1];
    const ScalarField& next = cutoffs.etas[j];
    const ScalarField& geta = cutoffs.gradient_lengths[j - 1];
    for (std::size_t i = 0; i < m; ++i) {
      const Index c = ball.cells[i];
      const double le = safe_log(eta(c));
      lx[i] = le + a * lu[i];
      ly[i] = a * lu[i] + safe_log(geta(c));
      lz[i] = (a - 1) * lu[i] + le + lgu[i];
      lhs[i] = next(c) > 0 ? lu[i] : -kInf;
      rhs[i] = eta(c) > 0 ? lu[i] : -kInf;
    }
    IterationStep st;
    st.j = j;
    st.Y = Y;
    st.q = q;
    st.log_x = log_power_mean(lx, p);
    st.log_y = log_power_mean(ly, p);
    st.log_z = log_power_mean(lz, p);
    const double den = params.cstar * std::log(q) + logZ + log_add(st.log_y, st.log_x - logr);
    st.caloric_measured = std::isinf(st.log_z) ? 0.0 : std::exp(st.log_z - den);

    const double llhs = log_power_mean(lhs, sigma * Y), lrhs = log_power_mean(rhs, d.s * Y);
    st.recursion_lhs = std::exp(llhs);
    st.recursion_rhs = std::exp(lrhs);
    const double lfac = (p / Y) * (logZ + j * std::log(cutoffs.N) + bstar * std::log(q));
    const double lmeas = std::isinf(llhs) ? -kInf : llhs - lfac - lrhs;
    st.recursion_measured = std::exp(lmeas);
    st.log_recursion_C = (Y / p) * lmeas;
    tr.steps.push_back(st);
  }

  const auto inner = sub_ball(grid, ball, params.tau * ball.radius);
  std::vector<double> li;
  for (Index c : inner.cells) li.push_back(safe_log(sh.ubar.w(c)));
  for (int j = 0; j <= params.jmax; ++j)
    tr.cascade_norms.push_back(std::exp(log_power_mean(li, d.s * p * std::pow(cas.X, j))));
  tr.sup_tau_ball = std::exp(log_power_mean(li, kInf));
  tr.gradient = gradient_from_shift(u, sh, ball, s, params, Q, grid, sigma);
  return tr;
}

}  // namespace

IterationTrace iteration_trace(const SobolevPair& u, const BallIndexSet& ball, const CutoffSequence& cutoffs,
                               const StructuralCoefficients& s, const EstimateParams& params, const FormSamples& Q,
                               const GridDomain& grid, double sigma) {
  const auto sh = shift_solution(u, ball, s, params, sigma);
  return trace_from_shift(u, sh, ball, cutoffs, s, params, Q, grid, sigma);
}

GradientEstimate gradient_estimate(const SobolevPair& u, const BallIndexSet& ball, const StructuralCoefficients& s,
                                   const EstimateParams& params, const FormSamples& Q, const GridDomain& grid,
                                   double sigma) {
  const auto sh = shift_solution(u, ball, s, params, sigma);
  return gradient_from_shift(u, sh, ball, s, params, Q, grid, sigma);
}

BoundReport verify_main_bound(const SobolevPair& u, const BallIndexSet& ball, const StructuralCoefficients& s,
                              const EstimateParams& params, const FormSamples& Q, const QuasimetricSpace& space,
                              const GridDomain& grid, double sigma) {
  if (s.gamma != s.p || s.delta != s.p) throw Error(ErrorKind::RangeViolation, "the bound needs gamma = delta = p");
  require_psi_window(s.p, sigma, s.psi);
  require_params(params);
  if (ball.cells.empty()) throw Error(ErrorKind::EmptyBall, "empty ball");
  const auto d = derive_exponents(params, s.p, sigma);

  BoundReport rep;
  const auto sh = shift_solution(u, ball, s, params, sigma);
  rep.k = sh.k;
  rep.k_limit = sh.k_limit;
  rep.Zbar = sh.Zbar;
  rep.Z = compute_Z(s, sh.ubar.w, ball, params, sigma);
  rep.chain = zbar_chain(s, sh.k, ball, params, sigma);
  rep.s = d.s;
  rep.X = sigma / d.s;
  rep.Psi0 = psi0(sigma, d.s, params.psi0);
  rep.cutoffs = cutoff_sequence(ball, params.tau, params.jmax, Q, grid, params.sstar);
  rep.trace = trace_from_shift(u, sh, ball, rep.cutoffs, s, params, Q, grid, sigma);
  rep.avnorm_sp = avnorm(sh.ubar.w, d.s * s.p, ball);
  rep.rhs_bound = std::pow(rep.Zbar.total, rep.Psi0) * rep.avnorm_sp;
  rep.measured_sup = rep.trace.sup_tau_ball;
  rep.measured_C = rep.rhs_bound > 0 ? rep.measured_sup / rep.rhs_bound : 0;
  rep.r1 = space.r1(grid, ball.center);
  rep.radius_admissible = ball.radius < params.tau * rep.r1;
  return rep;
}

SweepAssessment assess_sweep(const std::vector<double>& values, double tolerance) {
  SweepAssessment a;
  if (values.empty()) throw Error(ErrorKind::InsufficientSamples, "empty sweep");
  a.min = *std::min_element(values.begin(), values.end());
  a.max = *std::max_element(values.begin(), values.end());
  if (a.max == 0)
    a.drift = 0;
  else if (a.min <= 0)
    a.drift = kInf;
  else
    a.drift = a.max / a.min - 1;
  a.stable = a.drift <= tolerance;
  return a;
}

CorollaryVariant corollary_variant_from_string(const std::string& name) {
  if (name == "allp") return CorollaryVariant::AllP;
  if (name == "all<p") return CorollaryVariant::AllBelowP;
  if (name == "first>p") return CorollaryVariant::FirstAboveP;
  if (name == "second>p") return CorollaryVariant::SecondAboveP;
  throw Error(ErrorKind::ConfigError, "unknown corollary variant '" + name + "'");
}

std::string to_string(CorollaryVariant v) {
  switch (v) {
    case CorollaryVariant::AllP: return "allp";
    case CorollaryVariant::AllBelowP: return "all<p";
    case CorollaryVariant::FirstAboveP: return "first>p";
    case CorollaryVariant::SecondAboveP: return "second>p";
  }
  return "unknown";
}

namespace {

void require(bool ok, const std::string& inequality) {
  if (!ok) throw Error(ErrorKind::PreconditionViolated, inequality);
}

// K for the equal-exponent case with unnormalized norms.
double k_equal_exponents(const StructuralCoefficients& s, const BallIndexSet& ball, double qstar, double eps,
                         double sigma) {
  const double p = s.p, r = ball.radius, sp = dual_exponent(sigma), pp = dual_exponent(p);
  const double lead = 1 - qstar / (p * sp);
  const double ef = eps / (1 + eps);
  const double ne = coefficient_lp(s.e, pp * sp, ball);
  const double nf = coefficient_lp(s.f, sp * (1 + eps), ball);
  const double ng = coefficient_lp(s.g, sp * (1 + eps), ball);
  return std::pow(r, lead) * (std::pow(ne, 1 / (p - 1)) +
                              std::pow(r, (lead + (qstar / sp) * ef) / (p - 1)) * std::pow(nf, 1 / (p - 1)) +
                              std::pow(r, (qstar / (p * sp)) * ef) * std::pow(ng, 1 / p));
}

}  // namespace

CorollaryReport corollary_constants(CorollaryVariant variant, const StructuralCoefficients& s,
                                    const BallIndexSet& ball, const GridDomain& grid, const CorollaryInput& in,
                                    const EstimateParams& params, double sigma, const ScalarField* u) {
  const double p = s.p, sp = dual_exponent(sigma), pp = dual_exponent(p), r = ball.radius;
  require(in.eps > 0, "eps > 0");
  CorollaryReport rep;
  rep.variant = variant;
  const auto& cells = ball.cells;
  rep.sup_b = s.b.sup_on(cells);
  rep.sup_c = s.c.sup_on(cells);
  rep.sup_d = s.d.sup_on(cells);
  rep.sup_e = s.e.sup_on(cells);
  rep.sup_f = s.f.sup_on(cells);
  rep.sup_g = s.g.sup_on(cells);
  rep.sup_h = s.h.sup_on(cells);
  const auto d = derive_exponents(params, p, sigma);
  ScalarField absu;
  if (u) {
    if (u->size() != grid.size()) throw Error(ErrorKind::ShapeMismatch, "solution does not match the grid");
    absu = u->cwiseAbs();
    rep.avnorm_sp = avnorm(absu, d.s * p, ball);
  }

  switch (variant) {
    case CorollaryVariant::AllP:
    case CorollaryVariant::AllBelowP: {
      StructuralCoefficients t = s;
      if (variant == CorollaryVariant::AllP) {
        require(s.psi == p && s.gamma == p && s.delta == p, "psi = gamma = delta = p");
      } else {
        require(s.gamma < p && s.psi < p && s.delta < p, "gamma, psi, delta < p");
        t = reduce_below_p(s);
      }
      require(in.qstar > 0 && in.qstar <= p * sp, "q* <= p sigma'");
      rep.K = k_equal_exponents(t, ball, in.qstar, in.eps, sigma);
      rep.eta = 1 - in.qstar / (p * sp);
      rep.eta_positive = in.qstar < p * sp;
      if (u) rep.rhs = rep.avnorm_sp + rep.K;
      break;
    }
    case CorollaryVariant::FirstAboveP: {
      require(s.gamma > p && s.psi > p && s.delta > p, "gamma, psi, delta > p");
      const auto rr = check_ranges(p, sigma, s.gamma, s.psi, s.delta);
      require(rr.ok, "gamma, psi, delta inside the admissible ranges");
      rep.theta = std::max({(s.gamma - p) * pp * sp, (s.psi - p) * p * sp * (1 + in.eps) / (p + 1 - s.psi),
                            (s.delta - p) * sp * (1 + in.eps)});
      rep.C1_zero = s.c.vanishes_on(cells) ||
                    (s.e.vanishes_on(cells) && s.f.vanishes_on(cells) && s.g.vanishes_on(cells));
      rep.C2_zero = s.b.vanishes_on(cells) && s.c.vanishes_on(cells) && s.d.vanishes_on(cells) &&
                    s.h.vanishes_on(cells);
      rep.K = r * std::pow(rep.sup_e, 1 / (p - 1)) + std::pow(r, pp) * std::pow(rep.sup_f, 1 / (p - 1)) +
              r * std::pow(rep.sup_g, 1 / p);
      if (u) {
        rep.avnorm_theta = avnorm(absu, rep.theta, ball);
        const double k = compute_k(s, ball, params.eps2, params.eps3, sigma);
        const ScalarField ubar = (absu.array() + k).matrix();
        rep.Zstar_strong = zstar_strong(s, *u, ubar, ball, params, sigma).total;
        rep.rhs = std::pow(rep.Zstar_strong, psi0(sigma, d.s, params.psi0)) * (rep.avnorm_sp + rep.K);
      }
      break;
    }
    case CorollaryVariant::SecondAboveP: {
      require(s.gamma > p && s.psi > p && s.delta > p, "gamma, psi, delta > p");
      const auto rr = check_ranges(p, sigma, s.gamma, s.psi, s.delta);
      require(rr.ok, "gamma, psi, delta inside the admissible ranges");
      const double ps = p * sigma;
      require(in.expB >= ps / (sigma * (p - 1) + 1 - s.gamma), "B >= p sigma / (sigma (p-1) + 1 - gamma)");
      require(in.expC > ps / (sigma * (p + 1 - s.psi) - 1), "C > p sigma / (sigma (p+1-psi) - 1)");
      require(in.expD > ps / (ps - s.delta), "D > p sigma / (p sigma - delta)");
      require(in.expE >= pp * sp, "E >= p' sigma'");
      require(in.expF > sp, "F > sigma'");
      require(in.expG > sp, "G > sigma'");
      require(in.expH > ps / (ps - s.gamma), "H > p sigma / (p sigma - gamma)");
      rep.qstar_limit = std::min({in.expB * (p - 1), in.expE * (p - 1), in.expC * (p + 1 - s.psi), in.expD * p,
                                  in.expF * p, in.expG * p, in.expH * p});
      require(in.qstar > 0 && in.qstar <= rep.qstar_limit,
              "q* <= min{B(p-1), E(p-1), C(p+1-psi), D p, F p, G p, H p}");
      rep.K = std::pow(r, 1 - in.qstar / ((p - 1) * in.expE)) * std::pow(coefficient_lp(s.e, in.expE, ball), 1 / (p - 1)) +
              std::pow(r, pp * (1 - in.qstar / (p * in.expF))) * std::pow(coefficient_lp(s.f, in.expF, ball), 1 / (p - 1)) +
              std::pow(r, 1 - in.qstar / (p * in.expG)) * std::pow(coefficient_lp(s.g, in.expG, ball), 1 / p);
      rep.C1_zero = s.c.vanishes_on(cells) ||
                    (s.e.vanishes_on(cells) && s.f.vanishes_on(cells) && s.g.vanishes_on(cells));
      rep.C2_zero = s.b.vanishes_on(cells) && s.c.vanishes_on(cells) && s.d.vanishes_on(cells) &&
                    s.h.vanishes_on(cells);
      if (u) {
        rep.avnorm_psigma = avnorm(absu, ps, ball);
        rep.rhs = rep.avnorm_sp + rep.K;
      }
      break;
    }
  }
  return rep;
}

}  // namespace degen
