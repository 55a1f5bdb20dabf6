#include "degen/function_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace degen {

namespace {

void require_shape(const ScalarField& w, const VectorField& v, const GridDomain& grid) {
  if (w.size() != grid.size() || v.rows() != grid.dim() || v.cols() != grid.size())
    throw Error(ErrorKind::ShapeMismatch, "pair does not match the grid layout");
}

double sgn(double t) { return t >= 0 ? 1.0 : -1.0; }

}  // namespace

SobolevPair pair_from_values(const ScalarField& w, const GridDomain& grid) {
  if (w.size() != grid.size()) throw Error(ErrorKind::ShapeMismatch, "field does not match the grid");
  return {w, centered_gradient(w, grid)};
}

ScalarField form_lengths(const VectorField& v, const FormSamples& Q, const GridDomain& grid) {
  if (v.rows() != grid.dim() || v.cols() != grid.size())
    throw Error(ErrorKind::ShapeMismatch, "vector field does not match the grid");
  ScalarField out = ScalarField::Zero(grid.size());
  for (Index c = 0; c < grid.size(); ++c)
    if (grid.in_mask(c)) out(c) = Q.length(c, v.col(c));
  return out;
}

double wqp_norm(const SobolevPair& pair, const FormSamples& Q, const GridDomain& grid, double p) {
  if (!(p > 1) || std::isinf(p)) throw Error(ErrorKind::InvalidParams, "p must lie in (1, inf)");
  require_shape(pair.w, pair.v, grid);
  const ScalarField len = form_lengths(pair.v, Q, grid);
  double acc = 0;
  for (Index c = 0; c < grid.size(); ++c)
    if (grid.in_mask(c)) acc += std::pow(std::abs(pair.w(c)), p) + std::pow(len(c), p);
  return std::pow(acc * grid.cell_volume(), 1 / p);
}

double form_weighted_norm(const VectorField& v, const FormSamples& Q, const GridDomain& grid, double p) {
  if (!(p > 1) || std::isinf(p)) throw Error(ErrorKind::InvalidParams, "p must lie in (1, inf)");
  const ScalarField len = form_lengths(v, Q, grid);
  double acc = 0;
  for (Index c = 0; c < grid.size(); ++c)
    if (grid.in_mask(c)) acc += std::pow(len(c), p);
  return std::pow(acc * grid.cell_volume(), 1 / p);
}

MorreyResult morrey_norm(const ScalarField& m, double alpha, double beta, const QuasimetricSpace& space,
                         const GridDomain& grid, const std::vector<BallSample>& balls) {
  if (balls.empty()) throw Error(ErrorKind::InsufficientSamples, "no sample balls");
  if (!(alpha > 0) || std::isinf(alpha) || !(beta > 0))
    throw Error(ErrorKind::InvalidParams, "need 0 < alpha < inf and beta > 0");
  MorreyResult out;
  for (const auto& s : balls) {
    const auto ball = ball_membership(space, grid, s.center, s.radius);
    const double lim = std::min(1.0, space.r0_from_distances(grid, *ball.rho) / (2 * space.kappa()));
    if (s.radius >= lim) throw Error(ErrorKind::PreconditionViolated, "sample radius >= min{1, r1(y)}");
    const double v = std::pow(s.radius, alpha) * avnorm(m, beta, ball);
    out.rows.push_back({s.center, s.radius, v});
    out.value = std::max(out.value, v);
  }
  return out;
}

std::string morrey_csv(const MorreyResult& result) {
  std::ostringstream os;
  os.precision(17);
  if (result.rows.empty()) return "radius,value\n";
  const Index n = result.rows.front().center.size();
  for (Index a = 0; a < n; ++a) os << "y" << a << ",";
  os << "radius,value\n";
  for (const auto& r : result.rows) {
    for (Index a = 0; a < n; ++a) os << r.center(a) << ",";
    os << r.radius << "," << r.value << "\n";
  }
  return os.str();
}

CutoffSequence cutoff_sequence(const BallIndexSet& ball, double tau, int jmax, const FormSamples& Q,
                               const GridDomain& grid, double sstar) {
  if (!(tau > 0 && tau < 1)) throw Error(ErrorKind::InvalidParams, "tau must lie in (0, 1)");
  if (jmax < 1) throw Error(ErrorKind::InvalidParams, "jmax must be >= 1");
  if (!ball.rho) throw Error(ErrorKind::InvalidParams, "ball carries no distance field");
  const double r = ball.radius;
  if (tau * r < grid.h()) throw Error(ErrorKind::DegenerateRadii, "tau r is below the grid spacing");

  CutoffSequence cs;
  cs.tau = tau;
  cs.sstar = sstar;
  for (int j = 1; j <= jmax + 2; ++j) cs.radii.push_back(tau * r + (1 - tau) * r * std::pow(2.0, 1 - j));

  const ScalarField& rho = *ball.rho;
  for (int j = 1; j <= jmax + 1; ++j) {
    const double rj = cs.radii[j - 1], rn = cs.radii[j];
    ScalarField eta = ScalarField::Zero(grid.size());
    for (Index c = 0; c < grid.size(); ++c) {
      if (!grid.in_mask(c)) continue;
      eta(c) = std::clamp((rj - rho(c)) / (rj - rn), 0.0, 1.0);
    }
    const ScalarField len = form_lengths(centered_gradient(eta, grid), Q, grid);
    const double c = r * avnorm(len, sstar, ball) / std::pow(cs.N, j);
    cs.slope_constants.push_back(c);
    cs.Csstar = std::max(cs.Csstar, c);
    cs.etas.push_back(std::move(eta));
    cs.gradient_lengths.push_back(len);
  }
  ScalarField opnorm = ScalarField::Zero(grid.size());
  for (Index c : ball.cells) opnorm(c) = Q.sqrt_norm(c);
  cs.Csstar_predicted = avnorm(opnorm, sstar, ball) / (1 - tau);
  return cs;
}

SobolevResult verify_sobolev(const FormSamples& Q, const QuasimetricSpace& space, const GridDomain& grid, double p,
                             double sigma, const std::vector<BallSample>& balls, const TestFamily& family) {
  if (!(sigma > 1)) throw Error(ErrorKind::InvalidParams, "sigma must exceed 1");
  SobolevResult out;
  for (const auto& s : balls) {
    const auto ball = ball_membership(space, grid, s.center, s.radius);
    const ScalarField& rho = *ball.rho;
    // Keep the outermost bump two cells inside so its difference stencil stays in the ball.
    double scale = s.radius - 2 * grid.h();
    for (int level = 0; level < family.max_levels && scale >= family.min_scale_cells * grid.h();
         ++level, scale *= 0.5) {
      std::vector<std::function<double(const Point&)>> polys{[](const Point&) { return 1.0; }};
      if (family.with_polynomials) {
        const Point y = s.center;
        polys.push_back([y, scale](const Point& x) { return (x(0) - y(0)) / scale; });
        polys.push_back([y, scale](const Point& x) { return 1 + (x(0) - y(0)) / scale; });
      }
      for (double beta : family.betas)
        for (const auto& poly : polys) {
          ScalarField w = ScalarField::Zero(grid.size());
          for (Index c = 0; c < grid.size(); ++c)
            if (grid.in_mask(c) && rho(c) < scale)
              w(c) = std::pow(1 - rho(c) / scale, beta) * poly(grid.center(c));
          const double lhs = avnorm(w, p * sigma, ball);
          if (lhs == 0) continue;
          const ScalarField len = form_lengths(centered_gradient(w, grid), Q, grid);
          const double rhs = s.radius * avnorm(len, p, ball) + avnorm(w, p, ball);
          ++out.evaluated;
          const double ratio = lhs / rhs;
          if (ratio > out.C) {
            out.C = ratio;
            out.worst_ball = {s.center, s.radius, ball.measure};
            out.worst_scale = scale;
            out.worst_beta = beta;
          }
        }
    }
  }
  if (out.evaluated == 0) throw Error(ErrorKind::EmptyFamily, "no nonzero test function fits the balls");
  return out;
}

TestFunctions build_F_G(double k, double q, double l, double p, double sigma) {
  if (!(q >= 1) || !(k >= 0) || !(l > k) || !(p > 1) || !(sigma > 1))
    throw Error(ErrorKind::InvalidParams, "need q >= 1, l > k >= 0, p > 1, sigma > 1");
  TestFunctions g;
  g.k = k;
  g.q = q;
  g.l = l;
  g.mu = p * sigma - 1;
  g.beta = (g.mu + 1) * q - g.mu;
  return g;
}

double TestFunctions::F(double tbar) const {
  if (tbar <= l) return std::pow(tbar, q);
  return q * std::pow(l, q - 1) * tbar - (q - 1) * std::pow(l, q);
}

double TestFunctions::dF(double tbar) const {
  if (tbar <= l) return q * std::pow(tbar, q - 1);
  return q * std::pow(l, q - 1);
}

double TestFunctions::G(double t) const {
  const double tbar = std::abs(t) + k;
  return sgn(t) * (F(tbar) * std::pow(dF(tbar), mu) - std::pow(q, mu) * std::pow(k, beta));
}

double TestFunctions::dG(double t) const {
  const double tbar = std::abs(t) + k;
  if (tbar <= l) return std::pow(q, mu) * beta * std::pow(tbar, (q - 1) * (mu + 1));
  return std::pow(q * std::pow(l, q - 1), mu + 1);
}

bool TestFunctions::satisfies_bounds(const std::vector<double>& ts) const {
  const double cap = beta * std::pow(q, mu) * std::pow(l, (mu + 1) * (q - 1));
  for (double t : ts) {
    const double tbar = std::abs(t) + k;
    const double env = F(tbar) * std::pow(dF(tbar), mu);
    const double slack = 1e-12 * (1 + env + cap);
    if (std::abs(G(t)) > env + slack) return false;
    const double d = dG(t);
    if (d < -slack || d > cap + slack) return false;
  }
  return true;
}

SobolevPair apply_G(const SobolevPair& u, const TestFunctions& g, const GridDomain& grid) {
  require_shape(u.w, u.v, grid);
  SobolevPair out{ScalarField::Zero(grid.size()), VectorField::Zero(grid.dim(), grid.size())};
  std::vector<long> bad;
  for (Index c = 0; c < grid.size(); ++c) {
    if (!grid.in_mask(c)) continue;
    if (std::abs(u.w(c)) + g.k == g.l) bad.push_back(long(c));
    out.w(c) = g.G(u.w(c));
    out.v.col(c) = g.dG(u.w(c)) * u.v.col(c);
  }
  if (!bad.empty()) throw Error(ErrorKind::BadLevel, "level l is attained by |u| + k", bad);
  return out;
}

Truncation build_H_trunc(double q, double theta, double l, double p) {
  if (!(l > 0) || !(theta > 0) || !(q >= 1) || !(p > 0))
    throw Error(ErrorKind::InvalidParams, "need l > 0, theta > 0, q >= 1, p > 0");
  Truncation t;
  t.q = q;
  t.theta = theta;
  t.l = l;
  t.p = p;
  t.m = ((q - 1) * theta + p) / p;
  return t;
}

double Truncation::H(double t) const {
  const double a = std::abs(t);
  if (a <= l) return sgn(t) * std::pow(a, m);
  return sgn(t) * (m * std::pow(l, m - 1) * a - (m - 1) * std::pow(l, m));
}

double Truncation::dH(double t) const {
  const double a = std::abs(t);
  if (a <= l) return m * std::pow(a, m - 1);
  return m * std::pow(l, m - 1);
}

double Truncation::derivative_bound() const { return m * std::pow(l, (q - 1) * theta / p); }

SobolevPair abs_shift(const SobolevPair& u, double k) {
  if (!(k >= 0)) throw Error(ErrorKind::InvalidParams, "shift k must be nonnegative");
  SobolevPair out{u.w, u.v};
  for (Index c = 0; c < u.w.size(); ++c) {
    const double s = sgn(u.w(c));
    out.w(c) = std::abs(u.w(c)) + k;
    out.v.col(c) = s * u.v.col(c);
  }
  return out;
}

SobolevPair product_with_cutoff(const ScalarField& eta, double theta, const SobolevPair& w, const GridDomain& grid) {
  if (!(theta >= 1)) throw Error(ErrorKind::InvalidParams, "theta must be >= 1");
  require_shape(w.w, w.v, grid);
  if (eta.size() != grid.size()) throw Error(ErrorKind::ShapeMismatch, "cutoff does not match the grid");
  std::vector<long> bad;
  for (Index c : grid.boundary_cells())
    if (eta(c) != 0) bad.push_back(long(c));
  if (!bad.empty()) throw Error(ErrorKind::SupportViolation, "cutoff does not vanish on the boundary", bad);
  const VectorField ge = centered_gradient(eta, grid);
  SobolevPair out{ScalarField::Zero(grid.size()), VectorField::Zero(grid.dim(), grid.size())};
  for (Index c = 0; c < grid.size(); ++c) {
    if (!grid.in_mask(c)) continue;
    const double et = std::pow(eta(c), theta);
    const double dt = eta(c) > 0 ? theta * std::pow(eta(c), theta - 1) : (theta == 1 ? 1.0 : 0.0);
    out.w(c) = et * w.w(c);
    out.v.col(c) = dt * w.w(c) * ge.col(c) + et * w.v.col(c);
  }
  return out;
}

std::vector<double> pick_good_levels(const std::vector<ScalarField>& fields, int count, const GridDomain& grid) {
  if (count < 1) throw Error(ErrorKind::InvalidParams, "count must be >= 1");
  std::set<double> attained{0.0};
  for (const auto& f : fields)
    for (Index c = 0; c < grid.size(); ++c)
      if (grid.in_mask(c) && f(c) > 0) attained.insert(f(c));
  const std::vector<double> vals(attained.begin(), attained.end());
  std::vector<double> mids;
  for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
    const double m = 0.5 * (vals[i] + vals[i + 1]);
    // Adjacent doubles have no midpoint strictly between them.
    if (m > vals[i] && m < vals[i + 1]) mids.push_back(m);
  }
  std::vector<double> out;
  if (int(mids.size()) >= count) {
    for (int i = 0; i < count; ++i) {
      const std::size_t idx = count == 1 ? mids.size() - 1 : std::size_t(i) * (mids.size() - 1) / std::size_t(count - 1);
      if (out.empty() || mids[idx] > out.back()) out.push_back(mids[idx]);
    }
  } else {
    out = mids;
  }
  const double M = vals.back();
  for (int i = 1; int(out.size()) < count; ++i) {
    const double v = M > 0 ? M * (2 - std::pow(2.0, -i)) : double(i);
    if (out.empty() || v > out.back()) out.push_back(v);
  }
  return out;
}

IntegrabilityResult higher_integrability(const SobolevPair& pair, const BallIndexSet& ball, double tau,
                                         const FormSamples& Q, const GridDomain& grid, double p, double sigma) {
  IntegrabilityResult out;
  out.wqp = wqp_norm(pair, Q, grid, p);
  if (out.wqp == 0) throw Error(ErrorKind::ZeroNorm, "pair has zero norm");
  const auto inner = sub_ball(grid, ball, tau * ball.radius);
  out.lpsigma_norm = lp_norm(pair.w, p * sigma, inner.cells, grid);
  out.ratio = out.lpsigma_norm / out.wqp;
  return out;
}

}  // namespace degen
