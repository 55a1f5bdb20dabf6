#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

MatrixXd random_psd(std::mt19937& rng, int n, int kernel_dim) {
  std::normal_distribution<double> nd;
  MatrixXd B(n - kernel_dim, n);
  for (int i = 0; i < B.rows(); ++i)
    for (int j = 0; j < n; ++j) B(i, j) = nd(rng);
  MatrixXd A = B.transpose() * B;
  return 0.5 * (A + A.transpose());
}

MatrixXd svd_sqrt(const MatrixXd& A) {
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Singular values at rounding level belong to the kernel; their roots would be ~1e-8.
  VectorXd s = svd.singularValues();
  const double cut = 1e-12 * std::max(1.0, s(0));
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = s(i) <= cut ? 0 : std::sqrt(s(i));
  MatrixXd R = svd.matrixU() * s.asDiagonal() * svd.matrixU().transpose();
  return 0.5 * (R + R.transpose());
}

int svd_nullity(const MatrixXd& A, double rel_tol) {
  Eigen::JacobiSVD<MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  int k = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) <= rel_tol * s(0)) ++k;
  return k;
}

std::tuple<MatrixXd, MatrixXd, double> random_equivalent_pair(std::mt19937& rng, int n, int k) {
  std::normal_distribution<double> nd;
  MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = nd(rng);
  Eigen::HouseholderQR<MatrixXd> qr(G);
  const MatrixXd O = qr.householderQ();
  const int m = n - k;
  MatrixXd D = MatrixXd::Zero(n, n), W = MatrixXd::Zero(n, n);
  std::uniform_real_distribution<double> ud(0.5, 2.0);
  for (int i = k; i < n; ++i) D(i, i) = ud(rng);
  MatrixXd Bm(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) Bm(i, j) = 0.3 * nd(rng);
  W.bottomRightCorner(m, m) = Bm.transpose() * Bm + MatrixXd::Identity(m, m);
  const MatrixXd Q = O * D * O.transpose(), H = O * W * O.transpose();
  // Generalized eigenvalues of (W1, D1) give the best constant.
  const MatrixXd D1 = D.bottomRightCorner(m, m), W1 = W.bottomRightCorner(m, m);
  const MatrixXd Dm = D1.diagonal().cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Dm * W1 * Dm);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  const double C = 1.01 * std::max(hi, 1 / lo);
  return {0.5 * (Q + Q.transpose()), 0.5 * (H + H.transpose()), C};
}

bool equivalence_posts_hold(const MatrixXd& Q, const MatrixXd& H, double C, const MatrixXd& M, double tol) {
  const double scale = 1 + Q.cwiseAbs().maxCoeff() + H.cwiseAbs().maxCoeff();
  const MatrixXd rq = svd_sqrt(Q), rh = svd_sqrt(H);
  if ((M.transpose() * H * M - Q).cwiseAbs().maxCoeff() > tol * scale) return false;
  if ((rh * M - rq).cwiseAbs().maxCoeff() > tol * scale) return false;
  if ((M.transpose() * rh - rq).cwiseAbs().maxCoeff() > tol * scale) return false;
  std::mt19937 rng(99);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 200; ++t) {
    VectorXd xi(Q.rows());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = nd(rng);
    xi.normalize();
    const double l = (M.transpose() * xi).norm();
    if (l < 1 / std::sqrt(C) - tol || l > std::sqrt(C) + tol) return false;
  }
  return true;
}

double mean_power(const std::vector<double>& v, double alpha) {
  if (std::isinf(alpha)) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  long double acc = 0;
  for (double x : v) acc += std::pow((long double)std::abs(x), (long double)alpha);
  return double(std::pow(acc / (long double)v.size(), 1 / (long double)alpha));
}

double sum_power(const std::vector<double>& v, double alpha, double vol) {
  if (std::isinf(alpha)) return mean_power(v, alpha);
  long double acc = 0;
  for (double x : v) acc += std::pow((long double)std::abs(x), (long double)alpha);
  return double(std::pow(acc * (long double)vol, 1 / (long double)alpha));
}

double dual(double t) {
  if (t == 1) return std::numeric_limits<double>::infinity();
  if (std::isinf(t)) return 1;
  return t / (t - 1);
}

Coeffs constant_coeffs(double p, double gamma, double psi, double delta, std::size_t cells,
                       const std::vector<double>& v) {
  Coeffs s;
  s.p = p;
  s.gamma = gamma;
  s.psi = psi;
  s.delta = delta;
  s.b.assign(cells, v[0]);
  s.c.assign(cells, v[1]);
  s.d.assign(cells, v[2]);
  s.e.assign(cells, v[3]);
  s.f.assign(cells, v[4]);
  s.g.assign(cells, v[5]);
  s.h.assign(cells, v[6]);
  return s;
}

double shift_k(const Coeffs& s, double r, double eps2, double eps3, double sigma) {
  const double p = s.p, sp = dual(sigma);
  const double t1 = std::pow(std::pow(r, p - 1) * mean_power(s.e, dual(p) * sp), 1 / (p - 1));
  const double t2 = std::pow(std::pow(r, p) * mean_power(s.g, p * sp / (p - eps2)), 1 / p);
  const double t3 = std::pow(std::pow(r, p) * mean_power(s.f, p * sp / (p - eps3)), 1 / (p - 1));
  return t1 + t2 + t3;
}

Z z_form(const std::vector<double>& b, const std::vector<double>& c, const std::vector<double>& h,
         const std::vector<double>& d, const std::vector<double>& ubar, double r, double p, double sigma, double psi,
         double eps1, double eps2, double eps3) {
  const double sp = dual(sigma);
  std::vector<double> cu(c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    cu[i] = std::pow(c[i], p / (p + 1 - psi)) * std::pow(ubar[i], p * (psi - p) / (p + 1 - psi));
  Z z;
  z.b = std::pow(r, p - 1) * mean_power(b, dual(p) * sp);
  z.c = std::pow(std::pow(r, p) * mean_power(cu, p * sp / (p - eps1)), 1 / eps1);
  z.h = std::pow(std::pow(r, p) * mean_power(h, p * sp / (p - eps2)), 1 / eps2);
  z.d = std::pow(std::pow(r, p) * mean_power(d, p * sp / (p - eps3)), 1 / eps3);
  z.total = 1 + z.b + z.c + z.h + z.d;
  return z;
}

Z zbar(const Coeffs& s, double k, const std::vector<double>& ubar, double r, double sigma, double eps1, double eps2,
       double eps3) {
  const double p = s.p;
  std::vector<double> bb(s.b.size()), hb(s.b.size()), db(s.b.size());
  for (std::size_t i = 0; i < s.b.size(); ++i) {
    bb[i] = s.b[i] + std::pow(k, 1 - p) * s.e[i];
    hb[i] = s.h[i] + std::pow(k, -p) * s.g[i];
    db[i] = s.d[i] + std::pow(k, 1 - p) * s.f[i];
  }
  return z_form(bb, s.c, hb, db, ubar, r, p, sigma, s.psi, eps1, eps2, eps3);
}

Z zstar(const Coeffs& s, const std::vector<double>& u, const std::vector<double>& ubar, double r, double sigma,
        double eps1, double eps2, double eps3) {
  const double p = s.p;
  std::vector<double> bs(u.size()), hs(u.size()), ds(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    bs[i] = s.b[i] * std::pow(std::abs(u[i]), s.gamma - p);
    hs[i] = s.h[i] * std::pow(std::abs(u[i]), s.gamma - p);
    ds[i] = s.d[i] * std::pow(std::abs(u[i]), s.delta - p);
  }
  return z_form(bs, s.c, hs, ds, ubar, r, p, sigma, s.psi, eps1, eps2, eps3);
}

Z zstar_strong(const Coeffs& s, const std::vector<double>& u, const std::vector<double>& ubar, double sigma,
               double eps1, double eps2, double eps3) {
  const double p = s.p, sp = dual(sigma);
  const auto sup = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); };
  std::vector<double> ug(u.size()), ud(u.size()), uc(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    ug[i] = std::pow(std::abs(u[i]), s.gamma - p);
    ud[i] = std::pow(std::abs(u[i]), s.delta - p);
    uc[i] = std::pow(ubar[i], p * (s.psi - p) / (p + 1 - s.psi));
  }
  Z z;
  z.b = sup(s.b) * mean_power(ug, dual(p) * sp);
  z.c = std::pow(std::pow(sup(s.c), p / (p + 1 - s.psi)) * mean_power(uc, p * sp / (p - eps1)), 1 / eps1);
  z.h = std::pow(sup(s.h) * mean_power(ug, p * sp / (p - eps2)), 1 / eps2);
  z.d = std::pow(sup(s.d) * mean_power(ud, p * sp / (p - eps3)), 1 / eps3);
  z.total = 1 + z.b + z.c + z.h + z.d;
  return z;
}

double k_allp(const Coeffs& s, double r, double qstar, double eps, double sigma, double vol) {
  const double p = s.p, sp = dual(sigma);
  const double lead = 1 - qstar / (p * sp);
  const double a = std::pow(sum_power(s.e, dual(p) * sp, vol), 1 / (p - 1));
  const double b = std::pow(r, (lead + qstar / sp * eps / (1 + eps)) / (p - 1)) *
                   std::pow(sum_power(s.f, sp * (1 + eps), vol), 1 / (p - 1));
  const double c = std::pow(r, qstar / (p * sp) * eps / (1 + eps)) * std::pow(sum_power(s.g, sp * (1 + eps), vol), 1 / p);
  return std::pow(r, lead) * (a + b + c);
}

double k_first_above(const Coeffs& s, double r) {
  const double p = s.p;
  const auto sup = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); };
  return r * std::pow(sup(s.e), 1 / (p - 1)) + std::pow(r, dual(p)) * std::pow(sup(s.f), 1 / (p - 1)) +
         r * std::pow(sup(s.g), 1 / p);
}

double theta_first_above(const Coeffs& s, double sigma, double eps) {
  const double p = s.p, sp = dual(sigma);
  return std::max({(s.gamma - p) * dual(p) * sp, (s.psi - p) * p * sp * (1 + eps) / (p + 1 - s.psi),
                   (s.delta - p) * sp * (1 + eps)});
}

double k_second_above(const Coeffs& s, double r, double qstar, double E, double F, double G, double vol) {
  const double p = s.p;
  return std::pow(r, 1 - qstar / ((p - 1) * E)) * std::pow(sum_power(s.e, E, vol), 1 / (p - 1)) +
         std::pow(r, dual(p) * (1 - qstar / (p * F))) * std::pow(sum_power(s.f, F, vol), 1 / (p - 1)) +
         std::pow(r, 1 - qstar / (p * G)) * std::pow(sum_power(s.g, G, vol), 1 / p);
}

}  // namespace oracle
