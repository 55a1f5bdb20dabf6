#pragma once

// Pointwise symmetric-matrix machinery: square roots, kernels, equivalence
// maps between forms, and subunit decompositions. All routines are templated
// on the scalar type and accept any Eigen dense expression.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "degen/errors.hpp"

namespace degen {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct LinalgTolerances {
  // Eigenvalues in [-psd * max(1, |Q|_max), 0) are clamped to zero.
  double psd = 1e-10;
  // Eigenvalues below rank * lambda_max count as kernel directions.
  double rank = 1e-8;
  // Relative asymmetry allowed before NotSymmetric.
  double symmetry = 1e-12;
  // Condition number of the range block above which results are flagged.
  double ill_conditioned = 1e10;
};

template <typename Scalar>
struct SymEigen {
  VectorX<Scalar> values;   // ascending, clamped at zero
  MatrixX<Scalar> vectors;  // orthonormal columns
};

template <typename Derived>
void require_symmetric(const Eigen::MatrixBase<Derived>& Q, const LinalgTolerances& tol = {}) {
  using Scalar = typename Derived::Scalar;
  if (Q.rows() != Q.cols()) throw Error(ErrorKind::NotSymmetric, "matrix is not square");
  const Scalar scale = Q.cwiseAbs().maxCoeff();
  const Scalar asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  if (asym > Scalar(tol.symmetry) * scale)
    throw Error(ErrorKind::NotSymmetric, "asymmetry " + std::to_string(double(asym)));
}

// Eigendecomposition with deterministic vector ordering and signs:
// stable sort by eigenvalue, modified Gram-Schmidt in index order, and the
// largest-magnitude entry of each vector made positive.
template <typename Derived>
SymEigen<typename Derived::Scalar> sym_eigen(const Eigen::MatrixBase<Derived>& Qin,
                                             const LinalgTolerances& tol = {}) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> Q = Qin;
  require_symmetric(Q, tol);
  const Eigen::Index n = Q.rows();
  const MatrixX<Scalar> S = (Q + Q.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(S);
  VectorX<Scalar> lam = es.eigenvalues();
  MatrixX<Scalar> U = es.eigenvectors();

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return lam(i) < lam(j); });

  SymEigen<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  const Scalar clamp = Scalar(tol.psd) * std::max(Scalar(1), S.cwiseAbs().maxCoeff());
  for (Eigen::Index c = 0; c < n; ++c) {
    Scalar l = lam(order[c]);
    if (l < -clamp)
      throw Error(ErrorKind::NotNonnegDefinite, "eigenvalue " + std::to_string(double(l)));
    out.values(c) = l < Scalar(0) ? Scalar(0) : l;
    VectorX<Scalar> v = U.col(order[c]);
    for (Eigen::Index k = 0; k < c; ++k) v -= out.vectors.col(k).dot(v) * out.vectors.col(k);
    v.normalize();
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < Scalar(0)) v = -v;
    out.vectors.col(c) = v;
  }
  return out;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> matrix_sqrt(const Eigen::MatrixBase<Derived>& Q,
                                              const LinalgTolerances& tol = {}) {
  using Scalar = typename Derived::Scalar;
  const auto e = sym_eigen(Q, tol);
  // Rounding-level eigenvalues are kernel directions; their roots (~1e-8) would leak into ker Q.
  const Eigen::Index n = e.values.size();
  const Scalar floor = Scalar(16 * n) * Eigen::NumTraits<Scalar>::epsilon() *
                       (n ? std::max(Scalar(1), e.values(n - 1)) : Scalar(1));
  const VectorX<Scalar> roots = (e.values.array() <= floor).select(Scalar(0), e.values.cwiseSqrt());
  MatrixX<Scalar> R = e.vectors * roots.asDiagonal() * e.vectors.transpose();
  return (R + R.transpose()) / Scalar(2);
}

template <typename Scalar>
Eigen::Index numerical_rank(const SymEigen<Scalar>& e, double tol_rank) {
  const Eigen::Index n = e.values.size();
  if (n == 0) return 0;
  const Scalar top = e.values(n - 1);
  if (top <= Scalar(0)) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (e.values(i) > Scalar(tol_rank) * top) ++r;
  return r;
}

// Orthonormal kernel basis as matrix columns (n x k).
template <typename Derived>
MatrixX<typename Derived::Scalar> kernel_basis(const Eigen::MatrixBase<Derived>& Q,
                                               double tol_rank = 1e-8,
                                               const LinalgTolerances& tol = {}) {
  const auto e = sym_eigen(Q, tol);
  const Eigen::Index n = e.values.size();
  const Eigen::Index k = n - numerical_rank(e, tol_rank);
  return e.vectors.leftCols(k);
}

// Orthogonal splitting R^n = ker Q (+) range Q. Rows of `O` are the kernel
// basis followed by range eigenvectors, so O Q O^T = diag(0_k, Q1) with Q1
// diagonal (entries `range_values`).
template <typename Scalar>
struct RangeSplit {
  MatrixX<Scalar> O;
  Eigen::Index k = 0;
  VectorX<Scalar> range_values;

  auto kernel() const { return O.topRows(k).transpose(); }
  auto range() const { return O.bottomRows(O.rows() - k).transpose(); }
};

template <typename Derived>
RangeSplit<typename Derived::Scalar> range_split(const Eigen::MatrixBase<Derived>& Q,
                                                 const LinalgTolerances& tol = {}) {
  using Scalar = typename Derived::Scalar;
  const auto e = sym_eigen(Q, tol);
  const Eigen::Index n = e.values.size();
  RangeSplit<Scalar> s;
  s.k = n - numerical_rank(e, tol.rank);
  s.O = e.vectors.transpose();
  s.range_values = e.values.tail(n - s.k);
  return s;
}

enum class KernelBlock { Zero, Identity };

// N = O^T diag(B_k, (sqrt Q1)^{-1}) O: the pseudo-inverse of sqrt(Q) when
// B_k = 0_k, and the variant with the identity on the kernel when B_k = I_k.
template <typename Derived>
MatrixX<typename Derived::Scalar> sqrt_pseudo_inverse(const Eigen::MatrixBase<Derived>& Q,
                                                      KernelBlock block = KernelBlock::Zero,
                                                      const LinalgTolerances& tol = {}) {
  using Scalar = typename Derived::Scalar;
  const auto s = range_split(Q, tol);
  const Eigen::Index n = s.O.rows();
  VectorX<Scalar> d(n);
  for (Eigen::Index i = 0; i < s.k; ++i) d(i) = block == KernelBlock::Identity ? Scalar(1) : Scalar(0);
  for (Eigen::Index i = s.k; i < n; ++i) d(i) = Scalar(1) / std::sqrt(s.range_values(i - s.k));
  return s.O.transpose() * d.asDiagonal() * s.O;
}

// Pseudo-inverse of Q restricted to its numerical range.
template <typename Derived>
MatrixX<typename Derived::Scalar> form_pseudo_inverse(const Eigen::MatrixBase<Derived>& Q,
                                                      const LinalgTolerances& tol = {}) {
  using Scalar = typename Derived::Scalar;
  const auto s = range_split(Q, tol);
  const Eigen::Index n = s.O.rows();
  VectorX<Scalar> d = VectorX<Scalar>::Zero(n);
  for (Eigen::Index i = s.k; i < n; ++i) d(i) = Scalar(1) / s.range_values(i - s.k);
  return s.O.transpose() * d.asDiagonal() * s.O;
}

// Deterministic direction samples on the unit sphere: the +-axes first, then
// normalized Halton points of [-1,1]^n.
template <typename Scalar = double>
std::vector<VectorX<Scalar>> sphere_samples(int n, int count) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  std::vector<VectorX<Scalar>> out;
  out.reserve(count);
  for (int i = 0; i < n && int(out.size()) < count; ++i) {
    out.push_back(VectorX<Scalar>::Unit(n, i));
    if (int(out.size()) < count) out.push_back(-VectorX<Scalar>::Unit(n, i));
  }
  for (long idx = 1; int(out.size()) < count; ++idx) {
    VectorX<Scalar> v(n);
    for (int d = 0; d < n; ++d) {
      const int b = primes[d % 16];
      Scalar f = 1, r = 0;
      for (long i = idx; i > 0; i /= b) {
        f /= b;
        r += f * Scalar(i % b);
      }
      v(d) = Scalar(2) * r - Scalar(1);
    }
    const Scalar len = v.norm();
    if (len < Scalar(1e-3)) continue;
    out.push_back(v / len);
  }
  return out;
}

template <typename Scalar>
struct EquivalenceMap {
  MatrixX<Scalar> M;
  double condition = 1;         // condition number of the range block of H
  bool ill_conditioned = false;  // condition above LinalgTolerances::ill_conditioned
};

// Builds M with Q = M^T H M and sqrt(Q) = sqrt(H) M = M^T sqrt(H), for forms
// satisfying C^{-1} <Q xi, xi> <= <H xi, xi> <= C <Q xi, xi>.
template <typename DQ, typename DH>
EquivalenceMap<typename DQ::Scalar> equivalence_map(const Eigen::MatrixBase<DQ>& Qin,
                                                    const Eigen::MatrixBase<DH>& Hin, double C,
                                                    int nsamples = 256,
                                                    const LinalgTolerances& tol = {}) {
  using Scalar = typename DQ::Scalar;
  const MatrixX<Scalar> Q = Qin, H = Hin;
  const Eigen::Index n = Q.rows();
  if (H.rows() != n || H.cols() != n) throw Error(ErrorKind::NotSymmetric, "shape mismatch");

  const auto sq = range_split(Q, tol);
  const auto sh = range_split(H, tol);
  if (sq.k != sh.k) throw Error(ErrorKind::KernelsDiffer, "kernel dimensions differ");
  if (sq.k > 0) {
    const Scalar hs = std::max(Scalar(1), H.cwiseAbs().maxCoeff());
    const Scalar leak = (H * sq.kernel()).cwiseAbs().maxCoeff();
    if (leak > Scalar(tol.rank) * hs) throw Error(ErrorKind::KernelsDiffer, "ker Q not in ker H");
  }

  for (const auto& xi : sphere_samples<Scalar>(int(n), nsamples)) {
    const Scalar q = xi.dot(Q * xi), h = xi.dot(H * xi);
    const Scalar slack = Scalar(1e-10) * (Scalar(1) + std::abs(q) + std::abs(h));
    if (h > Scalar(C) * q + slack || q > Scalar(C) * h + slack)
      throw Error(ErrorKind::EquivalenceViolated, "sampled direction breaks the equivalence");
  }

  EquivalenceMap<Scalar> out;
  const auto R = sq.range();
  const Eigen::Index m = n - sq.k;
  MatrixX<Scalar> M1 = MatrixX<Scalar>::Identity(m, m);
  if (m > 0) {
    const MatrixX<Scalar> H1 = R.transpose() * H * R;
    const auto eh = sym_eigen(H1, tol);
    if (eh.values(0) <= Scalar(0)) throw Error(ErrorKind::KernelsDiffer, "H singular on range Q");
    const MatrixX<Scalar> invSqrtH1 =
        eh.vectors * eh.values.cwiseSqrt().cwiseInverse().asDiagonal() * eh.vectors.transpose();
    M1 = invSqrtH1 * sq.range_values.cwiseSqrt().asDiagonal();
    out.condition = double(eh.values(m - 1) / eh.values(0));
  }
  out.M = sq.kernel() * sq.kernel().transpose() + R * M1 * R.transpose();
  out.ill_conditioned = out.condition > tol.ill_conditioned;
  return out;
}

// Projection residual of T onto ker Q, relative to max(1, |T|).
template <typename DQ, typename DT>
typename DQ::Scalar kernel_component(const Eigen::MatrixBase<DQ>& Q, const Eigen::MatrixBase<DT>& T,
                                     const LinalgTolerances& tol = {}) {
  const auto s = range_split(Q, tol);
  if (s.k == 0) return 0;
  return (s.kernel().transpose() * T).norm();
}

template <typename DQ, typename DT>
bool is_subunit(const Eigen::MatrixBase<DQ>& Qin, const Eigen::MatrixBase<DT>& Tin, int nsamples = 256,
                const LinalgTolerances& tol = {}) {
  using Scalar = typename DQ::Scalar;
  const MatrixX<Scalar> Q = Qin;
  const VectorX<Scalar> T = Tin;
  for (const auto& xi : sphere_samples<Scalar>(int(Q.rows()), nsamples)) {
    const Scalar t = T.dot(xi);
    if (t * t > xi.dot(Q * xi) * Scalar(1 + 1e-10) + Scalar(1e-300)) return false;
  }
  const Scalar scale = std::max(Scalar(1), T.norm());
  if (kernel_component(Q, T, tol) > Scalar(tol.rank) * scale) return false;
  return (sqrt_pseudo_inverse(Q, KernelBlock::Zero, tol) * T).norm() <= Scalar(1 + 1e-10);
}

// V = N T with N the pseudo-inverse of sqrt(Q), so that sqrt(Q) V = T and |V| <= 1.
template <typename DQ, typename DT>
VectorX<typename DQ::Scalar> subunit_decompose(const Eigen::MatrixBase<DQ>& Q,
                                               const Eigen::MatrixBase<DT>& T,
                                               const LinalgTolerances& tol = {}) {
  using Scalar = typename DQ::Scalar;
  const Scalar scale = std::max(Scalar(1), T.norm());
  if (kernel_component(Q, T, tol) > Scalar(tol.rank) * scale)
    throw Error(ErrorKind::NotSubunit, "vector has a component in ker Q");
  VectorX<Scalar> V = sqrt_pseudo_inverse(Q, KernelBlock::Zero, tol) * T;
  if (V.norm() > Scalar(1 + 1e-10)) throw Error(ErrorKind::NotSubunit, "decomposition has |V| > 1");
  return V;
}

}  // namespace degen
