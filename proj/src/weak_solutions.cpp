#include "degen/weak_solutions.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <deque>

#include "degen/errors.hpp"
#include "degen/linalg.hpp"

namespace degen {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Stencil = std::vector<std::pair<Index, double>>;

// Centered difference along `axis`, one-sided at the mask edge.
Stencil axis_derivative(const GridDomain& grid, Index c, int axis) {
  const double h = grid.h();
  const Index up = grid.shift(c, axis, 1), dn = grid.shift(c, axis, -1);
  const bool has_up = up >= 0 && grid.in_mask(up), has_dn = dn >= 0 && grid.in_mask(dn);
  if (has_up && has_dn) return {{up, 0.5 / h}, {dn, -0.5 / h}};
  if (has_up) return {{up, 1 / h}, {c, -1 / h}};
  if (has_dn) return {{c, 1 / h}, {dn, -1 / h}};
  return {};
}

// Stencils of the gradient at the face between c and nb = c + s e_axis.
std::vector<Stencil> face_gradient(const GridDomain& grid, Index c, Index nb, int axis, int s) {
  const int n = grid.dim();
  std::vector<Stencil> g(n);
  const double h = grid.h();
  g[axis] = {{nb, s / h}, {c, -s / h}};
  for (int j = 0; j < n; ++j) {
    if (j == axis) continue;
    for (Index cell : {c, nb})
      for (auto [k, w] : axis_derivative(grid, cell, j)) g[j].push_back({k, 0.5 * w});
  }
  return g;
}

Eigen::VectorXd eval_gradient(const std::vector<Stencil>& g, const ScalarField& u) {
  Eigen::VectorXd v(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    double acc = 0;
    for (auto [k, w] : g[j]) acc += w * u(k);
    v(Index(j)) = acc;
  }
  return v;
}

bool is_unknown(const GridDomain& grid, Index c) { return grid.in_mask(c) && !grid.is_boundary(c); }

using FaceForm = std::function<Eigen::MatrixXd(Index c, Index nb, const std::vector<Stencil>& g)>;

struct System {
  SpMat A;
  Eigen::VectorXd b;
};

System assemble(const GridDomain& grid, const FaceForm& face, const ScalarField& rhs, const ScalarField& boundary) {
  const Index N = grid.size();
  const int n = grid.dim();
  const double h = grid.h();
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
  for (Index c = 0; c < N; ++c) {
    if (!is_unknown(grid, c)) {
      trip.emplace_back(c, c, 1.0);
      b(c) = grid.in_mask(c) ? boundary(c) : 0.0;
      continue;
    }
    b(c) = rhs(c);
    for (int i = 0; i < n; ++i)
      for (int s : {-1, 1}) {
        const Index nb = grid.shift(c, i, s);
        const auto g = face_gradient(grid, c, nb, i, s);
        const Eigen::MatrixXd M = face(c, nb, g);
        // outward flux s e_i . M grad u, divided by h
        for (int j = 0; j < n; ++j) {
          const double coef = s * M(i, j) / h;
          if (coef == 0) continue;
          for (auto [k, w] : g[j]) trip.emplace_back(c, k, coef * w);
        }
      }
  }
  SpMat A(N, N);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return {std::move(A), std::move(b)};
}

// Unknown cells that no coupling path links to Dirichlet data.
std::vector<long> disconnected_cells(const GridDomain& grid, const SpMat& A) {
  const Index N = grid.size();
  std::vector<std::vector<Index>> adj(N);
  for (Index col = 0; col < A.outerSize(); ++col)
    for (SpMat::InnerIterator it(A, col); it; ++it)
      if (it.row() != it.col() && it.value() != 0) {
        adj[it.row()].push_back(it.col());
        adj[it.col()].push_back(it.row());
      }
  std::vector<char> seen(N, 0);
  std::deque<Index> queue;
  for (Index c = 0; c < N; ++c)
    if (grid.in_mask(c) && grid.is_boundary(c)) {
      seen[c] = 1;
      queue.push_back(c);
    }
  while (!queue.empty()) {
    const Index c = queue.front();
    queue.pop_front();
    for (Index k : adj[c])
      if (!seen[k] && is_unknown(grid, k)) {
        seen[k] = 1;
        queue.push_back(k);
      }
  }
  std::vector<long> bad;
  for (Index c = 0; c < N; ++c)
    if (is_unknown(grid, c) && (!seen[c] || A.coeff(c, c) == 0)) bad.push_back(long(c));
  return bad;
}

double relative_residual(const SpMat& A, const Eigen::VectorXd& b, const Eigen::VectorXd& u) {
  const Eigen::VectorXd r = A * u - b;
  const Eigen::VectorXd scale = SpMat(A.cwiseAbs()) * u.cwiseAbs();
  const double den = scale.norm() + b.norm();
  return den > 0 ? r.norm() / den : r.norm();
}

struct Solved {
  Eigen::VectorXd u;
  double shift = 0;
};

Solved factor_and_solve(const GridDomain& grid, const SpMat& A, const Eigen::VectorXd& b) {
  const auto bad = disconnected_cells(grid, A);
  if (!bad.empty())
    throw Error(ErrorKind::SingularSystem,
                std::to_string(bad.size()) + " cells are cut off from the boundary data", bad);
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() == Eigen::Success) {
    Eigen::VectorXd u = lu.solve(b);
    if (lu.info() == Eigen::Success && u.allFinite()) return {u, 0.0};
  }
  // Retry with a small diagonal shift toward the sign of each unknown row, then refine once.
  double dmax = 0;
  for (Index c = 0; c < A.rows(); ++c) dmax = std::max(dmax, std::abs(A.coeff(c, c)));
  const double shift = 1e-12 * dmax;
  SpMat As = A;
  for (Index c = 0; c < A.rows(); ++c)
    if (is_unknown(grid, c)) As.coeffRef(c, c) += (A.coeff(c, c) < 0 ? -shift : shift);
  lu.compute(As);
  if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "factorization failed after diagonal shift");
  Eigen::VectorXd u = lu.solve(b);
  u += lu.solve(b - A * u);
  if (!u.allFinite()) throw Error(ErrorKind::SingularSystem, "non-finite solution after diagonal shift");
  return {u, shift};
}

void require_problem(const GridDomain& grid, const ScalarField& rhs, const ScalarField& boundary) {
  if (rhs.size() != grid.size() || boundary.size() != grid.size())
    throw Error(ErrorKind::ShapeMismatch, "rhs and boundary must have one value per cell");
  for (Index c = 0; c < grid.size(); ++c) {
    if (!grid.in_mask(c)) continue;
    if (!std::isfinite(rhs(c))) throw Error(ErrorKind::InvalidParams, "rhs must be finite");
    if (grid.is_boundary(c) && !std::isfinite(boundary(c)))
      throw Error(ErrorKind::InvalidParams, "boundary values must be finite");
  }
}

}  // namespace

SolveResult solve_linear_divergence(const DiscreteProblem& pb) {
  const GridDomain& grid = pb.grid;
  require_problem(grid, pb.rhs, pb.boundary);
  const FormSamples Qs(pb.Q, grid);
  for (Index c = 0; c < grid.size(); ++c) {
    if (!grid.in_mask(c)) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Qs.at(c), Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
      throw Error(ErrorKind::NotNonnegDefinite, "Q is not nonnegative definite", {long(c)});
  }
  const auto face = [&](Index c, Index nb, const std::vector<Stencil>&) {
    return Eigen::MatrixXd(0.5 * (Qs.at(c) + Qs.at(nb)));
  };
  const System sys = assemble(grid, face, pb.rhs, pb.boundary);
  const Solved sol = factor_and_solve(grid, sys.A, sys.b);
  SolveResult out;
  out.u = pair_from_values(sol.u, grid);
  out.shift = sol.shift;
  out.residual = relative_residual(sys.A, sys.b, sol.u);
  out.iterations = 1;
  return out;
}

SolveResult solve_plaplacian(const GridDomain& grid, double p, const ScalarField& rhs, const ScalarField& boundary,
                             const PicardOptions& opt) {
  if (!(p > 1) || std::isinf(p)) throw Error(ErrorKind::InvalidParams, "p must lie in (1, inf)");
  if (!(opt.damping > 0 && opt.damping <= 1)) throw Error(ErrorKind::InvalidParams, "damping must lie in (0, 1]");
  if (opt.max_iter < 1) throw Error(ErrorKind::InvalidParams, "max_iter must be >= 1");
  require_problem(grid, rhs, boundary);
  const int n = grid.dim();
  const auto weighted = [&](const Eigen::VectorXd& u) {
    return [&, u](Index, Index, const std::vector<Stencil>& g) {
      const double w = std::pow(eval_gradient(g, u).squaredNorm() + opt.regularization, (p - 2) / 2);
      return Eigen::MatrixXd(w * Eigen::MatrixXd::Identity(n, n));
    };
  };
  const FaceForm unit = [&](Index, Index, const std::vector<Stencil>&) { return Eigen::MatrixXd::Identity(n, n).eval(); };
  System sys = assemble(grid, unit, rhs, boundary);
  Solved sol = factor_and_solve(grid, sys.A, sys.b);
  Eigen::VectorXd u = sol.u;
  SolveResult out;
  out.shift = sol.shift;
  out.converged = false;
  for (int it = 1; it <= opt.max_iter; ++it) {
    sys = assemble(grid, weighted(u), rhs, boundary);
    out.residual = relative_residual(sys.A, sys.b, u);
    out.iterations = it;
    if (!std::isfinite(out.residual)) throw Error(ErrorKind::NonConvergence, "Picard iteration diverged");
    if (out.residual <= opt.tolerance) {
      out.converged = true;
      break;
    }
    sol = factor_and_solve(grid, sys.A, sys.b);
    out.shift = std::max(out.shift, sol.shift);
    u = (1 - opt.damping) * u + opt.damping * sol.u;
  }
  if (!out.converged) {
    sys = assemble(grid, weighted(u), rhs, boundary);
    out.residual = relative_residual(sys.A, sys.b, u);
    out.converged = out.residual <= opt.tolerance;
  }
  out.u = pair_from_values(u, grid);
  return out;
}

namespace {

Eigen::VectorXd eval_atilde_or_a(const OperatorSampler& op, const Point& x, double z, const Eigen::VectorXd& xi,
                                 bool& tilde) {
  tilde = bool(op.Atilde);
  if (tilde) return op.Atilde(x, z, xi);
  if (!op.A) throw Error(ErrorKind::MissingAtilde, "operator has neither A nor A~");
  return op.A(x, z, xi);
}

double atilde_length(const OperatorSampler& op, const Point& x, double z, const Eigen::VectorXd& xi) {
  if (op.Atilde) return op.Atilde(x, z, xi).norm();
  if (op.atilde) return op.atilde(x, z, xi);
  throw Error(ErrorKind::MissingAtilde, "dual norm of A~ needs A~ or its length");
}

void require_pair(const SobolevPair& u, const GridDomain& grid) {
  if (u.w.size() != grid.size() || u.v.rows() != grid.dim() || u.v.cols() != grid.size())
    throw Error(ErrorKind::ShapeMismatch, "pair does not match the grid");
}

}  // namespace

double weak_residual(const SobolevPair& u, const OperatorSampler& op, const SobolevPair& phi, const FormSamples& Q,
                     const GridDomain& grid) {
  require_pair(u, grid);
  require_pair(phi, grid);
  std::vector<long> bad;
  for (Index c = 0; c < grid.size(); ++c)
    if (grid.in_mask(c) && grid.is_boundary(c) && (phi.w(c) != 0 || phi.v.col(c).squaredNorm() != 0))
      bad.push_back(long(c));
  if (!bad.empty()) throw Error(ErrorKind::SupportViolation, "test function does not vanish on the boundary", bad);
  double acc = 0;
  for (Index c = 0; c < grid.size(); ++c) {
    if (!grid.in_mask(c)) continue;
    const Eigen::VectorXd dphi = phi.v.col(c);
    if (phi.w(c) == 0 && dphi.squaredNorm() == 0) continue;
    const Point x = grid.center(c);
    const Eigen::VectorXd xi = u.v.col(c);
    bool tilde = false;
    const Eigen::VectorXd a = eval_atilde_or_a(op, x, u.w(c), xi, tilde);
    double term = tilde ? (matrix_sqrt(Q.at(c)) * dphi).dot(a)
                        : dphi.dot(a);
    if (op.B) term += phi.w(c) * op.B(x, u.w(c), xi);
    acc += term;
  }
  return acc * grid.cell_volume();
}

DualNorms dual_norms(const SobolevPair& u, const OperatorSampler& op, const BallIndexSet& ball, double sigma,
                     const StructuralCoefficients& s, const FormSamples& Q, const GridDomain& grid,
                     const std::optional<DeclaredIntegrability>& declared) {
  require_pair(u, grid);
  const double p = s.p;
  const IntegrabilityTable req = required_integrability(p, sigma, s.gamma, s.psi, s.delta);
  if (declared) {
    const auto& d = declared->exponents;
    const std::pair<double, double> pairs[] = {{d.b, req.b}, {d.c, req.c}, {d.d, req.d}, {d.e, req.e}, {d.f, req.f}};
    const char* names[] = {"b", "c", "d", "e", "f"};
    for (int i = 0; i < 5; ++i)
      if (pairs[i].first < pairs[i].second)
        throw Error(ErrorKind::IntegrabilityViolated,
                    std::string("coefficient ") + names[i] + " is below the required integrability");
  }
  const double pp = dual_exponent(p), sps = dual_exponent(sigma * p);
  const ScalarField glen = form_lengths(u.v, Q, grid);
  ScalarField at = ScalarField::Zero(grid.size()), bv = at, absu = at;
  for (Index c : ball.cells) {
    const Point x = grid.center(c);
    at(c) = atilde_length(op, x, u.w(c), u.v.col(c));
    bv(c) = op.B ? std::abs(op.B(x, u.w(c), u.v.col(c))) : 0.0;
    absu(c) = std::abs(u.w(c));
  }
  DualNorms out;
  out.norm_Atilde = lp_norm(at, pp, ball.cells, grid);
  out.norm_B = lp_norm(bv, sps, ball.cells, grid);
  const auto lp = [&](const CoefficientField& f, double alpha) {
    return lp_norm(f.on(grid), alpha, ball.cells, grid);
  };
  const double ng = lp_norm(glen, p, ball.cells, grid), nu = lp_norm(absu, sigma * p, ball.cells, grid);
  for (double v : {out.norm_Atilde, out.norm_B, ng, nu})
    if (!std::isfinite(v)) throw Error(ErrorKind::IntegrabilityViolated, "a norm on the ball is infinite");
  out.bound_Atilde = std::pow(std::pow(3.0, pp) * (std::pow(s.a, pp) * std::pow(ng, p) +
                                                   std::pow(lp(s.b, req.b), pp) * std::pow(nu, (s.gamma - 1) * pp) +
                                                   std::pow(lp(s.e, req.e), pp)),
                              1 / pp);
  out.bound_B = std::pow(std::pow(3.0, sps) * (std::pow(lp(s.c, req.c), sps) *
                                                   std::pow(ng, p * sigma * (s.psi - 1) / (sigma * p - 1)) +
                                               std::pow(lp(s.d, req.d), sps) *
                                                   std::pow(nu, sigma * p * (s.delta - 1) / (sigma * p - 1)) +
                                               std::pow(lp(s.f, req.f), sps)),
                         1 / sps);
  const double slack = 1e-9;
  out.dominated = out.norm_Atilde <= out.bound_Atilde * (1 + slack) + slack &&
                  out.norm_B <= out.bound_B * (1 + slack) + slack;
  return out;
}

LambdaEstimate lambda_estimate(const SobolevPair& u, const OperatorSampler& op, const SobolevPair& phi,
                               const BallIndexSet& ball, double p, double sigma, const FormSamples& Q,
                               const GridDomain& grid) {
  require_pair(phi, grid);
  std::vector<char> inside(grid.size(), 0);
  for (Index c : ball.cells) inside[c] = 1;
  for (Index c = 0; c < grid.size(); ++c)
    if (grid.in_mask(c) && !inside[c] && (phi.w(c) != 0 || phi.v.col(c).squaredNorm() != 0))
      throw Error(ErrorKind::SupportViolation, "test function is not supported in the ball", {long(c)});
  LambdaEstimate out;
  out.lambda = weak_residual(u, op, phi, Q, grid);
  const double pp = dual_exponent(p), sps = dual_exponent(sigma * p);
  ScalarField at = ScalarField::Zero(grid.size()), bv = at, absphi = phi.w.cwiseAbs();
  for (Index c : ball.cells) {
    const Point x = grid.center(c);
    at(c) = atilde_length(op, x, u.w(c), u.v.col(c));
    bv(c) = op.B ? std::abs(op.B(x, u.w(c), u.v.col(c))) : 0.0;
  }
  const ScalarField plen = form_lengths(phi.v, Q, grid);
  double acc = 0;
  for (Index c : ball.cells) acc += std::pow(absphi(c), p) + std::pow(plen(c), p);
  const double wnorm = std::pow(acc * grid.cell_volume(), 1 / p);
  out.sobolev_C = wnorm > 0 ? lp_norm(absphi, sigma * p, ball.cells, grid) / wnorm : 0;
  out.bound = (lp_norm(at, pp, ball.cells, grid) + out.sobolev_C * lp_norm(bv, sps, ball.cells, grid)) * wnorm;
  out.holds = std::abs(out.lambda) <= out.bound * (1 + 1e-9) + 1e-12;
  return out;
}

}  // namespace degen
