#include "degen/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include "degen/errors.hpp"
#include "degen/linalg.hpp"

namespace degen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<int>> neighbor_offsets(int n) {
  std::vector<std::vector<int>> out;
  for (int a = 0; a < n; ++a)
    for (int s : {-1, 1}) {
      std::vector<int> d(n, 0);
      d[a] = s;
      out.push_back(d);
    }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int sa : {-1, 1})
        for (int sb : {-1, 1}) {
          std::vector<int> d(n, 0);
          d[a] = sa;
          d[b] = sb;
          out.push_back(d);
        }
  return out;
}

// sqrt(d^T Q^+ d) for a unit direction d, +inf when d leaves range(Q).
double direction_cost(const Eigen::MatrixXd& Q, const Eigen::VectorXd& d, double tol_rank) {
  LinalgTolerances tol;
  tol.rank = tol_rank;
  RangeSplit<double> s;
  try {
    s = range_split(Q, tol);
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidForm, e.what());
  }
  const Eigen::Index n = Q.rows();
  if (s.k == n) return kInf;
  if (s.k > 0 && (s.kernel().transpose() * d).norm() > tol_rank * d.norm()) return kInf;
  const Eigen::VectorXd c = s.range().transpose() * d;
  return std::sqrt((c.array().square() / s.range_values.array()).sum());
}

}  // namespace

SubunitGraph::SubunitGraph(const QuadraticFormField& Q, const GridDomain& grid, double tol_rank)
    : grid_(grid), offsets_(neighbor_offsets(grid.dim())) {
  if (Q.dim() != grid.dim()) throw Error(ErrorKind::ShapeMismatch, "form dimension differs from grid");
  const std::size_t m = offsets_.size();
  weights_.assign(std::size_t(grid.size()) * m, kInf);
  const double h = grid.h();
  for (Index c = 0; c < grid.size(); ++c) {
    if (!grid.in_mask(c)) continue;
    const Point xc = grid.center(c);
    for (std::size_t k = 0; k < m; ++k) {
      const Index nb = grid.offset(c, offsets_[k]);
      if (nb < 0 || !grid.in_mask(nb)) continue;
      // Edges are symmetric; reuse the reverse edge when already computed.
      if (nb < c) {
        const std::size_t rev = (k % 2 == 0) ? k + 1 : k - 1;
        // Axis offsets come in (-,+) pairs; diagonals in blocks of four where
        // the reverse of (sa, sb) is (-sa, -sb), i.e. index 3 - local.
        std::size_t r = rev;
        if (k >= std::size_t(2 * grid.dim())) {
          const std::size_t base = k - (k - 2 * grid.dim()) % 4;
          r = base + 3 - (k - base);
        }
        weights_[c * m + k] = weights_[nb * m + r];
        continue;
      }
      Eigen::VectorXd d(grid.dim());
      for (int a = 0; a < grid.dim(); ++a) d(a) = offsets_[k][a];
      const double len = d.norm();
      d /= len;
      const Point mid = xc + 0.5 * h * len * d;
      const double cost = direction_cost(Q.at(mid), d, tol_rank);
      weights_[c * m + k] = std::isinf(cost) ? kInf : h * len * cost;
    }
  }
}

ScalarField SubunitGraph::distances(Index source) const {
  ScalarField dist = ScalarField::Constant(grid_.size(), kInf);
  if (source < 0 || source >= grid_.size() || !grid_.in_mask(source)) return dist;
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist(source) = 0;
  heap.push({0.0, source});
  const std::size_t m = offsets_.size();
  while (!heap.empty()) {
    const auto [dc, c] = heap.top();
    heap.pop();
    if (dc > dist(c)) continue;
    for (std::size_t k = 0; k < m; ++k) {
      const double w = weights_[c * m + k];
      if (std::isinf(w)) continue;
      const Index nb = grid_.offset(c, offsets_[k]);
      const double nd = dc + w;
      if (nd < dist(nb)) {
        dist(nb) = nd;
        heap.push({nd, nb});
      }
    }
  }
  return dist;
}

ScalarField subunit_distance(const QuadraticFormField& Q, const GridDomain& grid, const Point& x, double tol_rank) {
  return SubunitGraph(Q, grid, tol_rank).distances(grid.nearest_cell(x));
}

QuasimetricSpace QuasimetricSpace::euclidean() { return QuasimetricSpace(); }

QuasimetricSpace QuasimetricSpace::scaled(Eigen::VectorXd axis_scales) {
  if ((axis_scales.array() <= 0).any()) throw Error(ErrorKind::InvalidParams, "axis scales must be positive");
  QuasimetricSpace s;
  s.backend_ = MetricBackend::Scaled;
  s.scales_ = std::move(axis_scales);
  return s;
}

QuasimetricSpace QuasimetricSpace::subunit(const QuadraticFormField& Q, const GridDomain& grid, double tol_rank) {
  QuasimetricSpace s;
  s.backend_ = MetricBackend::Subunit;
  s.graph_ = std::make_shared<const SubunitGraph>(Q, grid, tol_rank);
  return s;
}

std::string QuasimetricSpace::backend_name() const {
  switch (backend_) {
    case MetricBackend::Euclidean: return "euclidean";
    case MetricBackend::Scaled: return "scaled";
    case MetricBackend::Subunit: return "subunit";
  }
  return "unknown";
}

ScalarField QuasimetricSpace::distances_from(const GridDomain& grid, const Point& y) const {
  if (y.size() != grid.dim()) throw Error(ErrorKind::ShapeMismatch, "point dimension differs from grid");
  if (backend_ == MetricBackend::Subunit) {
    if (!graph_->grid().same_layout(grid))
      throw Error(ErrorKind::ShapeMismatch, "subunit metric was built on a different grid");
    return graph_->distances(grid.nearest_cell(y));
  }
  if (backend_ == MetricBackend::Scaled && scales_.size() != grid.dim())
    throw Error(ErrorKind::ShapeMismatch, "axis scales differ from grid dimension");
  ScalarField rho(grid.size());
  for (Index c = 0; c < grid.size(); ++c) {
    if (!grid.in_mask(c)) {
      rho(c) = kInf;
      continue;
    }
    const Eigen::VectorXd d = grid.center(c) - y;
    rho(c) = backend_ == MetricBackend::Scaled ? d.cwiseQuotient(scales_).norm() : d.norm();
  }
  return rho;
}

double QuasimetricSpace::r0_from_distances(const GridDomain& grid, const ScalarField& rho) const {
  double best = kInf;
  for (Index c : grid.boundary_cells()) best = std::min(best, rho(c));
  return best;
}

double QuasimetricSpace::r0(const GridDomain& grid, const Point& y) const {
  return r0_from_distances(grid, distances_from(grid, y));
}

double QuasimetricSpace::r1(const GridDomain& grid, const Point& y) const {
  return std::min(1.0, r0(grid, y) / (2 * kappa_));
}

BallIndexSet ball_from_distances(const GridDomain& grid, std::shared_ptr<const ScalarField> rho, const Point& y,
                                 double r) {
  if (!(r > 0)) throw Error(ErrorKind::InvalidParams, "ball radius must be positive");
  BallIndexSet b;
  b.center = y;
  b.radius = r;
  for (Index c = 0; c < grid.size(); ++c)
    if (grid.in_mask(c) && (*rho)(c) < r) b.cells.push_back(c);
  if (b.cells.empty()) throw Error(ErrorKind::EmptyBall, "no cell center within the radius");
  b.measure = double(b.cells.size()) * grid.cell_volume();
  b.rho = std::move(rho);
  return b;
}

BallIndexSet ball_membership(const QuasimetricSpace& space, const GridDomain& grid, const Point& y, double r) {
  auto rho = std::make_shared<const ScalarField>(space.distances_from(grid, y));
  return ball_from_distances(grid, std::move(rho), y, r);
}

BallIndexSet sub_ball(const GridDomain& grid, const BallIndexSet& ball, double r) {
  return ball_from_distances(grid, ball.rho, ball.center, r);
}

namespace {

double measure_below(const GridDomain& grid, const ScalarField& rho, double r) {
  Index count = 0;
  for (Index c = 0; c < grid.size(); ++c)
    if (grid.in_mask(c) && rho(c) < r) ++count;
  return double(count) * grid.cell_volume();
}

}  // namespace

DqstarEstimate estimate_Dqstar(const QuasimetricSpace& space, const GridDomain& grid,
                               const std::vector<Point>& centers, const std::vector<double>& radii) {
  std::vector<double> rs = radii;
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  if (centers.empty() || rs.size() < 2)
    throw Error(ErrorKind::InsufficientSamples, "need at least one center and two distinct radii");

  DqstarEstimate out;
  for (const Point& y : centers) {
    const ScalarField rho = space.distances_from(grid, y);
    const double lim = std::min(1.0, space.r0_from_distances(grid, rho) / (2 * space.kappa()));
    std::vector<double> lx, ly;
    for (double r : rs) {
      if (!(r > 0) || r >= lim)
        throw Error(ErrorKind::PreconditionViolated, "radius " + std::to_string(r) + " >= min{1, r1(y)}");
      const double m = measure_below(grid, rho, r);
      if (m <= 0) throw Error(ErrorKind::EmptyBall, "sample ball contains no cell");
      out.samples.push_back({y, r, m});
      lx.push_back(std::log(r));
      ly.push_back(std::log(m));
    }
    const double k = double(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i] / k;
      my += ly[i] / k;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    out.center_slopes.push_back(sxy / sxx);
  }
  out.qstar = *std::max_element(out.center_slopes.begin(), out.center_slopes.end());
  out.c0 = kInf;
  for (const auto& s : out.samples) {
    const double c = s.measure / std::pow(s.radius, out.qstar);
    if (c < out.c0) {
      out.c0 = c;
      out.worst = s;
    }
  }
  return out;
}

DoublingEstimate estimate_doubling(const QuasimetricSpace& space, const GridDomain& grid,
                                   const std::vector<BallSample>& samples) {
  if (samples.empty()) throw Error(ErrorKind::InsufficientSamples, "no doubling samples");
  DoublingEstimate out;
  // One distance field per distinct center.
  std::map<std::vector<double>, ScalarField> cache;
  for (const auto& s : samples) {
    std::vector<double> key(s.center.data(), s.center.data() + s.center.size());
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, space.distances_from(grid, s.center)).first;
    const ScalarField& rho = it->second;
    const double small = measure_below(grid, rho, s.radius);
    if (small <= 0) throw Error(ErrorKind::EmptyBall, "sample ball contains no cell");
    const double big = measure_below(grid, rho, 2 * s.radius);
    if (2 * s.radius >= space.r0_from_distances(grid, rho)) ++out.saturated;
    out.ratios.push_back(big / small);
  }
  out.Cdoub = *std::max_element(out.ratios.begin(), out.ratios.end());
  out.Dstar = std::log2(out.Cdoub);
  return out;
}

CompatibilityReport check_compatibility(const QuasimetricSpace& space, const GridDomain& grid,
                                        const std::vector<Point>& centers, const std::vector<double>& eps,
                                        const std::vector<double>& radii) {
  CompatibilityReport rep;
  for (const Point& y : centers) {
    CompatibilityEntry e;
    e.center = y;
    const ScalarField rho = space.distances_from(grid, y);
    for (Index c = 0; c < grid.size(); ++c)
      if (grid.in_mask(c) && !std::isfinite(rho(c))) e.metric_finite = false;
    e.r0 = space.r0_from_distances(grid, rho);
    for (Index c = 0; c < grid.size(); ++c)
      if (grid.in_mask(c) && rho(c) < e.r0 && grid.is_boundary(c)) e.closure_inside = false;

    std::vector<double> euclid(grid.size());
    for (Index c = 0; c < grid.size(); ++c) euclid[c] = (grid.center(c) - y).norm();

    // B(y, delta) sits in the Euclidean ball D(y, eps).
    for (double ep : eps) {
      double delta = kInf;
      for (Index c = 0; c < grid.size(); ++c)
        if (grid.in_mask(c) && euclid[c] >= ep) delta = std::min(delta, rho(c));
      e.delta_of_eps.push_back({ep, delta});
      if (!(delta > 0)) e.cond1 = false;
    }
    // D(y, s) sits in B(y, r).
    for (double r : radii) {
      double s = kInf;
      for (Index c = 0; c < grid.size(); ++c)
        if (grid.in_mask(c) && rho(c) >= r) s = std::min(s, euclid[c]);
      e.s_of_r.push_back({r, s});
      if (!(s > 0)) e.cond0 = false;
    }
    if (!e.metric_finite) e.cond1 = false;
    rep.cond1 = rep.cond1 && e.cond1;
    rep.cond0 = rep.cond0 && e.cond0;
    rep.closure_inside = rep.closure_inside && e.closure_inside;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

}  // namespace degen
