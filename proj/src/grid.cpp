#include "degen/grid.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "degen/errors.hpp"
#include "degen/linalg.hpp"

namespace degen {

GridDomain::GridDomain(Point origin, double h, std::vector<Index> counts, std::vector<std::uint8_t> mask)
    : origin_(std::move(origin)), h_(h), counts_(std::move(counts)), mask_(std::move(mask)) {
  const int n = int(origin_.size());
  if (n < 1 || int(counts_.size()) != n) throw Error(ErrorKind::ShapeMismatch, "grid dimension mismatch");
  if (!(h_ > 0)) throw Error(ErrorKind::InvalidParams, "grid spacing must be positive");
  strides_.assign(n, 1);
  size_ = 1;
  for (int a = n - 1; a >= 0; --a) {
    if (counts_[a] < 1) throw Error(ErrorKind::InvalidParams, "empty grid axis");
    strides_[a] = size_;
    size_ *= counts_[a];
  }
  cell_volume_ = std::pow(h_, n);
  if (mask_.empty()) mask_.assign(size_, 1);
  if (Index(mask_.size()) != size_) throw Error(ErrorKind::ShapeMismatch, "mask size mismatch");
  masked_count_ = std::count_if(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; });
  if (masked_count_ == 0) throw Error(ErrorKind::InvalidParams, "mask is empty");

  boundary_.assign(size_, 0);
  for (Index c = 0; c < size_; ++c) {
    if (!mask_[c]) continue;
    for (int a = 0; a < n && !boundary_[c]; ++a)
      for (int s : {-1, 1}) {
        const Index nb = shift(c, a, s);
        if (nb < 0 || !mask_[nb]) boundary_[c] = 1;
      }
  }
}

GridDomain GridDomain::box(const Point& lower, const Point& upper, double h) {
  const int n = int(lower.size());
  std::vector<Index> counts(n);
  Point origin(n);
  for (int a = 0; a < n; ++a) {
    counts[a] = std::max<Index>(1, Index(std::llround((upper(a) - lower(a)) / h)));
    origin(a) = lower(a) + 0.5 * h;
  }
  return GridDomain(origin, h, counts);
}

GridDomain GridDomain::centered(int n, double half_width, double h) {
  const Index m = Index(std::floor(half_width / h + 1e-9));
  std::vector<Index> counts(n, 2 * m + 1);
  return GridDomain(Point::Constant(n, -double(m) * h), h, counts);
}

Index GridDomain::index(const std::vector<Index>& multi) const {
  Index c = 0;
  for (int a = 0; a < dim(); ++a) c += multi[a] * strides_[a];
  return c;
}

std::vector<Index> GridDomain::multi(Index c) const {
  std::vector<Index> m(dim());
  for (int a = 0; a < dim(); ++a) {
    m[a] = c / strides_[a];
    c -= m[a] * strides_[a];
  }
  return m;
}

Point GridDomain::center(Index c) const {
  Point x(dim());
  for (int a = 0; a < dim(); ++a) {
    const Index i = c / strides_[a];
    c -= i * strides_[a];
    x(a) = origin_(a) + double(i) * h_;
  }
  return x;
}

Index GridDomain::shift(Index c, int axis, int step) const {
  const Index i = (c / strides_[axis]) % counts_[axis];
  const Index j = i + step;
  if (j < 0 || j >= counts_[axis]) return -1;
  return c + Index(step) * strides_[axis];
}

Index GridDomain::offset(Index c, const std::vector<int>& delta) const {
  Index out = c;
  for (int a = 0; a < dim(); ++a) {
    if (delta[a] == 0) continue;
    out = shift(out, a, delta[a]);
    if (out < 0) return -1;
  }
  return out;
}

Index GridDomain::nearest_cell(const Point& x) const {
  std::vector<Index> m(dim());
  for (int a = 0; a < dim(); ++a) {
    const double t = std::round((x(a) - origin_(a)) / h_);
    m[a] = std::clamp<Index>(Index(t), 0, counts_[a] - 1);
  }
  return index(m);
}

std::vector<Index> GridDomain::boundary_cells() const {
  std::vector<Index> out;
  for (Index c = 0; c < size_; ++c)
    if (boundary_[c]) out.push_back(c);
  return out;
}

std::vector<Index> GridDomain::masked_cells() const {
  std::vector<Index> out;
  out.reserve(masked_count_);
  for (Index c = 0; c < size_; ++c)
    if (mask_[c]) out.push_back(c);
  return out;
}

ScalarField GridDomain::sample(const std::function<double(const Point&)>& f) const {
  ScalarField out(size_);
  for (Index c = 0; c < size_; ++c) out(c) = f(center(c));
  return out;
}

GridDomain GridDomain::with_mask(std::vector<std::uint8_t> mask) const {
  return GridDomain(origin_, h_, counts_, std::move(mask));
}

bool GridDomain::same_layout(const GridDomain& other) const {
  return counts_ == other.counts_ && h_ == other.h_ && origin_ == other.origin_ && mask_ == other.mask_;
}

VectorField centered_gradient(const ScalarField& f, const GridDomain& grid) {
  const int n = grid.dim();
  const double h = grid.h();
  VectorField g = VectorField::Zero(n, grid.size());
  for (Index c = 0; c < grid.size(); ++c) {
    if (!grid.in_mask(c)) continue;
    for (int a = 0; a < n; ++a) {
      const Index lo = grid.shift(c, a, -1), hi = grid.shift(c, a, 1);
      const bool has_lo = lo >= 0 && grid.in_mask(lo), has_hi = hi >= 0 && grid.in_mask(hi);
      if (has_lo && has_hi)
        g(a, c) = (f(hi) - f(lo)) / (2 * h);
      else if (has_hi)
        g(a, c) = (f(hi) - f(c)) / h;
      else if (has_lo)
        g(a, c) = (f(c) - f(lo)) / h;
    }
  }
  return g;
}

QuadraticFormField::QuadraticFormField(int n, Evaluator eval, std::string name)
    : n_(n), eval_(std::move(eval)), name_(std::move(name)) {}

QuadraticFormField QuadraticFormField::identity(int n) {
  return QuadraticFormField(n, [n](const Point&) { return Eigen::MatrixXd::Identity(n, n).eval(); }, "identity");
}

QuadraticFormField QuadraticFormField::scaled(int n, double c) {
  if (!(c >= 0)) throw Error(ErrorKind::InvalidForm, "scaled form needs c >= 0");
  return QuadraticFormField(
      n, [n, c](const Point&) { return (c * Eigen::MatrixXd::Identity(n, n)).eval(); }, "scaled");
}

QuadraticFormField QuadraticFormField::grushin(int n, double alpha, double scale) {
  if (n < 2) throw Error(ErrorKind::InvalidForm, "grushin form needs n >= 2");
  return QuadraticFormField(
      n,
      [n, alpha, scale](const Point& x) {
        Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
        const double w = scale * std::pow(std::abs(x(0)), alpha);
        for (int a = 1; a < n; ++a) Q(a, a) = w * w;
        return Q;
      },
      "grushin");
}

QuadraticFormField QuadraticFormField::sampled(const GridDomain& grid, Eigen::MatrixXd cell_values) {
  const int n = grid.dim();
  if (cell_values.rows() != n * n || cell_values.cols() != grid.size())
    throw Error(ErrorKind::ShapeMismatch, "sampled form needs n*n rows and one column per cell");
  auto data = std::make_shared<Eigen::MatrixXd>(std::move(cell_values));
  auto g = std::make_shared<GridDomain>(grid);
  return QuadraticFormField(
      n,
      [n, data, g](const Point& x) {
        // Multilinear interpolation over the 2^n surrounding centers.
        std::vector<Index> base(n);
        std::vector<double> frac(n);
        for (int a = 0; a < n; ++a) {
          const double t = (x(a) - g->origin()(a)) / g->h();
          const Index last = g->counts()[a] - 1;
          double fl = std::floor(t);
          if (fl < 0) {
            fl = 0;
            frac[a] = 0;
          } else if (fl >= double(last)) {
            fl = double(last);
            frac[a] = 0;
          } else {
            frac[a] = t - fl;
          }
          base[a] = Index(fl);
        }
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(n * n);
        for (int corner = 0; corner < (1 << n); ++corner) {
          double w = 1;
          std::vector<Index> m = base;
          for (int a = 0; a < n; ++a) {
            const bool up = (corner >> a) & 1;
            w *= up ? frac[a] : 1 - frac[a];
            if (up) m[a] = std::min(m[a] + 1, g->counts()[a] - 1);
          }
          if (w == 0) continue;
          acc += w * data->col(g->index(m));
        }
        Eigen::MatrixXd Q = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            acc.data(), n, n);
        return Q;
      },
      "sampled");
}

QuadraticFormField QuadraticFormField::times(double c) const {
  auto inner = eval_;
  return QuadraticFormField(n_, [inner, c](const Point& x) { return (c * inner(x)).eval(); }, name_);
}

FormSamples::FormSamples(const QuadraticFormField& Q, const GridDomain& grid) : n_(grid.dim()) {
  if (Q.dim() != n_) throw Error(ErrorKind::ShapeMismatch, "form dimension differs from grid");
  data_.assign(std::size_t(grid.size()) * n_ * n_, 0.0);
  for (Index c = 0; c < grid.size(); ++c) {
    if (!grid.in_mask(c)) continue;
    const Eigen::MatrixXd M = Q.at(grid.center(c));
    std::copy(M.data(), M.data() + n_ * n_, data_.begin() + c * n_ * n_);
  }
}

double FormSamples::length(Index c, const Eigen::Ref<const Eigen::VectorXd>& v) const {
  const double q = v.dot(at(c) * v);
  return q > 0 ? std::sqrt(q) : 0.0;
}

double FormSamples::sqrt_norm(Index c) const {
  const auto e = sym_eigen(Eigen::MatrixXd(at(c)));
  return std::sqrt(e.values(e.values.size() - 1));
}

}  // namespace degen
