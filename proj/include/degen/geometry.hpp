#pragma once

// Quasimetric backends on grids: Euclidean, axis-scaled, and the subunit
// (control) distance of a degenerate form computed by Dijkstra on the grid graph.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "degen/grid.hpp"

namespace degen {

// Grid graph with 2n axis and 2n(n-1) planar diagonal neighbors; an edge of
// Euclidean length l in unit direction d costs l * sqrt(d^T Q^+ d) with Q taken
// at the edge midpoint, and +inf when d leaves range(Q).
class SubunitGraph {
 public:
  SubunitGraph(const QuadraticFormField& Q, const GridDomain& grid, double tol_rank = 1e-8);

  const GridDomain& grid() const { return grid_; }
  // Shortest-path distances from `source` to every cell (+inf if unreachable
  // or outside the mask).
  ScalarField distances(Index source) const;

 private:
  GridDomain grid_;
  std::vector<std::vector<int>> offsets_;
  std::vector<double> weights_;  // cell-major, one entry per offset
};

ScalarField subunit_distance(const QuadraticFormField& Q, const GridDomain& grid, const Point& x,
                             double tol_rank = 1e-8);

enum class MetricBackend { Euclidean, Scaled, Subunit };

class QuasimetricSpace {
 public:
  static QuasimetricSpace euclidean();
  // rho(x, y) = |diag(scales)^{-1} (x - y)|
  static QuasimetricSpace scaled(Eigen::VectorXd axis_scales);
  static QuasimetricSpace subunit(const QuadraticFormField& Q, const GridDomain& grid, double tol_rank = 1e-8);

  MetricBackend backend() const { return backend_; }
  std::string backend_name() const;
  double kappa() const { return kappa_; }

  // rho(y, cell center) for every cell; +inf outside the mask. The subunit
  // backend snaps y to its nearest cell.
  ScalarField distances_from(const GridDomain& grid, const Point& y) const;
  // Distance from y to the discrete boundary layer of the mask.
  double r0(const GridDomain& grid, const Point& y) const;
  double r0_from_distances(const GridDomain& grid, const ScalarField& rho) const;
  // Default admissible radius min(1, r0(y) / (2 kappa)).
  double r1(const GridDomain& grid, const Point& y) const;

 private:
  MetricBackend backend_ = MetricBackend::Euclidean;
  double kappa_ = 1;
  Eigen::VectorXd scales_;
  std::shared_ptr<const SubunitGraph> graph_;
};

struct BallIndexSet {
  Point center;
  double radius = 0;
  std::vector<Index> cells;
  double measure = 0;
  // Distances from the center used for the enumeration (shared, immutable).
  std::shared_ptr<const ScalarField> rho;
};

BallIndexSet ball_membership(const QuasimetricSpace& space, const GridDomain& grid, const Point& y, double r);
// Same enumeration from a precomputed distance field.
BallIndexSet ball_from_distances(const GridDomain& grid, std::shared_ptr<const ScalarField> rho, const Point& y,
                                 double r);
// Concentric ball of radius `r` sharing the distance field of `ball`.
BallIndexSet sub_ball(const GridDomain& grid, const BallIndexSet& ball, double r);

struct BallSample {
  Point center;
  double radius = 0;
  double measure = 0;
};

struct DqstarEstimate {
  double qstar = 0;
  double c0 = 0;
  BallSample worst;
  std::vector<double> center_slopes;
  std::vector<BallSample> samples;
};

DqstarEstimate estimate_Dqstar(const QuasimetricSpace& space, const GridDomain& grid,
                               const std::vector<Point>& centers, const std::vector<double>& radii);

struct DoublingEstimate {
  double Cdoub = 0;
  double Dstar = 0;
  // Samples where 2r >= r0(x); they are still included in the maximum.
  int saturated = 0;
  std::vector<double> ratios;
};

DoublingEstimate estimate_doubling(const QuasimetricSpace& space, const GridDomain& grid,
                                   const std::vector<BallSample>& samples);

struct CompatibilityEntry {
  Point center;
  bool metric_finite = true;
  bool cond1 = true;  // small rho-balls sit inside small Euclidean balls
  bool cond0 = true;  // small Euclidean balls sit inside small rho-balls
  double r0 = 0;
  bool closure_inside = true;
  std::vector<std::pair<double, double>> delta_of_eps;  // (eps, delta)
  std::vector<std::pair<double, double>> s_of_r;        // (r, s)
};

struct CompatibilityReport {
  bool cond1 = true;
  bool cond0 = true;
  bool closure_inside = true;
  std::vector<CompatibilityEntry> entries;
};

CompatibilityReport check_compatibility(const QuasimetricSpace& space, const GridDomain& grid,
                                        const std::vector<Point>& centers, const std::vector<double>& eps,
                                        const std::vector<double>& radii);

}  // namespace degen
