#pragma once

// Uniform cell-centered grids, grid fields, and sampled quadratic forms.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace degen {

using Index = Eigen::Index;
using Point = Eigen::VectorXd;
// One value per cell of the bounding box; cells outside the mask are ignored.
using ScalarField = Eigen::VectorXd;
// n rows, one column per cell.
using VectorField = Eigen::MatrixXd;

class GridDomain {
 public:
  // `origin` is the center of the first cell; cells are h-cubes.
  GridDomain(Point origin, double h, std::vector<Index> counts, std::vector<std::uint8_t> mask = {});

  // Cells tiling the box [lower, upper] (extent rounded to a multiple of h).
  static GridDomain box(const Point& lower, const Point& upper, double h);
  // Symmetric grid with a cell centered at the origin and centers in [-L, L]^n.
  static GridDomain centered(int n, double half_width, double h);

  int dim() const { return int(origin_.size()); }
  double h() const { return h_; }
  double cell_volume() const { return cell_volume_; }
  Index size() const { return size_; }
  const std::vector<Index>& counts() const { return counts_; }
  const Point& origin() const { return origin_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  bool in_mask(Index c) const { return mask_[c] != 0; }

  Index index(const std::vector<Index>& multi) const;
  std::vector<Index> multi(Index c) const;
  Point center(Index c) const;
  // Cell reached by moving `step` cells along `axis`; -1 when outside the box.
  Index shift(Index c, int axis, int step) const;
  // Cell reached by a multi-axis offset; -1 when outside the box.
  Index offset(Index c, const std::vector<int>& delta) const;
  Index nearest_cell(const Point& x) const;

  // Masked cells with an axis neighbor outside the mask or the box.
  bool is_boundary(Index c) const { return boundary_[c] != 0; }
  std::vector<Index> boundary_cells() const;
  std::vector<Index> masked_cells() const;
  Index masked_count() const { return masked_count_; }

  ScalarField sample(const std::function<double(const Point&)>& f) const;
  GridDomain with_mask(std::vector<std::uint8_t> mask) const;
  bool same_layout(const GridDomain& other) const;

 private:
  Point origin_;
  double h_;
  double cell_volume_;
  std::vector<Index> counts_;
  std::vector<Index> strides_;
  Index size_;
  Index masked_count_ = 0;
  std::vector<std::uint8_t> mask_;
  std::vector<std::uint8_t> boundary_;
};

// Centered differences (one-sided at the mask edge, zero for isolated cells).
VectorField centered_gradient(const ScalarField& f, const GridDomain& grid);

// Pointwise symmetric nonnegative matrices Q(x).
class QuadraticFormField {
 public:
  using Evaluator = std::function<Eigen::MatrixXd(const Point&)>;

  QuadraticFormField(int n, Evaluator eval, std::string name);

  static QuadraticFormField identity(int n);
  // c * I
  static QuadraticFormField scaled(int n, double c);
  // diag(1, (scale |x_1|^alpha)^2, ..., (scale |x_1|^alpha)^2)
  static QuadraticFormField grushin(int n, double alpha = 1.0, double scale = 1.0);
  // Per-cell matrices (n*n row-major per cell), multilinearly interpolated
  // between cell centers and clamped at the box edge.
  static QuadraticFormField sampled(const GridDomain& grid, Eigen::MatrixXd cell_values);

  int dim() const { return n_; }
  const std::string& name() const { return name_; }
  Eigen::MatrixXd at(const Point& x) const { return eval_(x); }
  QuadraticFormField times(double c) const;

 private:
  int n_;
  Evaluator eval_;
  std::string name_;
};

// Q evaluated at all cell centers, stored contiguously.
class FormSamples {
 public:
  FormSamples(const QuadraticFormField& Q, const GridDomain& grid);

  int dim() const { return n_; }
  Eigen::Map<const Eigen::MatrixXd> at(Index c) const {
    return Eigen::Map<const Eigen::MatrixXd>(data_.data() + c * n_ * n_, n_, n_);
  }
  // |sqrt(Q) v| = <Q v, v>^{1/2}, negative rounding clamped.
  double length(Index c, const Eigen::Ref<const Eigen::VectorXd>& v) const;
  // Operator norm of sqrt(Q) at the cell.
  double sqrt_norm(Index c) const;

 private:
  int n_;
  std::vector<double> data_;
};

}  // namespace degen
