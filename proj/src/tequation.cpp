#include "bandlab/tequation.hpp"

#include <cmath>
#include <map>

namespace bandlab {

Eigen::MatrixXd t_matrix(const Resolvent& r, const VarianceProfile& profile) {
  const std::int64_t n = profile.shape().size();
  Eigen::MatrixXd G2(n, n);
  for (std::int64_t y = 0; y < n; ++y)
    for (std::int64_t x = 0; x < n; ++x) G2(x, y) = std::norm(r.G(x, y));
  if (!profile.periodic_kind()) return profile.dense() * G2;
  Eigen::MatrixXd T(n, n);
  for (std::int64_t y = 0; y < n; ++y)
    T.col(y) = profile.apply(Eigen::VectorXd(G2.col(y)));
  return T;
}

Eigen::VectorXd t_column(const Resolvent& r, const VarianceProfile& profile,
                         std::int64_t y) {
  const std::int64_t n = profile.shape().size();
  Eigen::VectorXd g2(n);
  for (std::int64_t x = 0; x < n; ++x) g2(x) = std::norm(r.G(x, y));
  return profile.apply(g2);
}

namespace {

// Solve (1 - S |M|^2) X = S * RHS.
Eigen::MatrixXd stability_solve(const Eigen::VectorXcd& M,
                                const VarianceProfile& profile,
                                const Eigen::MatrixXd& rhs) {
  const std::int64_t n = profile.shape().size();
  Eigen::MatrixXd S = profile.dense();
  Eigen::MatrixXd m2 = M.array().abs2().matrix().asDiagonal();
  Eigen::MatrixXd A = -S * m2;
  A.diagonal().array() += 1.0;
  return A.partialPivLu().solve(S * rhs);
}

}  // namespace

double t_equation_residual(const Eigen::MatrixXd& T, const Resolvent& r,
                           const Eigen::VectorXcd& M,
                           const VarianceProfile& profile) {
  const std::int64_t n = profile.shape().size();
  Eigen::MatrixXd G2(n, n);
  for (std::int64_t y = 0; y < n; ++y)
    for (std::int64_t x = 0; x < n; ++x) G2(x, y) = std::norm(r.G(x, y));
  Eigen::VectorXd m2 = M.array().abs2();
  Eigen::MatrixXd rhs = G2 - m2.asDiagonal() * T;
  Eigen::MatrixXd X = stability_solve(M, profile, rhs);
  return (T - X).cwiseAbs().maxCoeff();
}

Eigen::VectorXd t_zero_column(const Resolvent& r, const Eigen::VectorXcd& M,
                              const VarianceProfile& profile, std::int64_t y) {
  const std::int64_t n = profile.shape().size();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, 1);
  e(y, 0) = 1.0;
  Eigen::VectorXd kernel_col = stability_solve(M, profile, e).col(0);
  const Eigen::VectorXd t_col = t_column(r, profile, y);
  const double source = std::norm(r.G(y, y)) - std::norm(M(y)) * t_col(y);
  return kernel_col * source;
}

double t_zero_term(const Resolvent& r, const Eigen::VectorXcd& M,
                   const VarianceProfile& profile, std::int64_t x,
                   std::int64_t y) {
  return t_zero_column(r, M, profile, y)(x);
}

double t_zero_theta_agreement(const Eigen::MatrixXd& T0,
                              const ThetaKernel& theta, Complex m, double phi,
                              double slack) {
  const std::int64_t n = T0.rows();
  const double m2 = std::norm(m);
  std::int64_t pass = 0, total = 0;
  for (std::int64_t x = 0; x < n; ++x)
    for (std::int64_t y = 0; y < T0.cols(); ++y) {
      const double th = theta.entry(x, y);
      ++total;
      if (std::abs(T0(x, y) - m2 * th) <= slack * phi * th) ++pass;
    }
  return static_cast<double>(pass) / static_cast<double>(total);
}

ProfileFit profile_bound_check(const Eigen::MatrixXd& kernel,
                               const TorusShape& shape, int W, double eta) {
  const std::int64_t n = shape.size();
  const double flat = 1.0 / (static_cast<double>(n) * eta);
  std::map<int, double> envelope;
  ProfileFit fit;
  for (std::int64_t x = 0; x < n; ++x)
    for (std::int64_t y = 0; y < n; ++y) {
      const int r = dist_flat(x, y, shape);
      auto& e = envelope[r];
      e = std::max(e, kernel(x, y));
    }
  if (envelope.size() < 2)
    throw std::invalid_argument("profile_bound_check: too few distance bins");
  // fitted_C: smallest C with kernel <= C * bound everywhere.
  double sxx = 0, sxy = 0, syy = 0, sxr = 0, syr = 0;
  for (const auto& [r, env] : envelope) {
    const double jb = 1.0 + r;  // <r>
    const double diff = std::pow(jb, 2.0 - shape.dim) / (W * static_cast<double>(W));
    const double bound = flat + diff;
    fit.fitted_C = std::max(fit.fitted_C, env / bound);
    ProfileFitRow row;
    row.distance = r;
    row.envelope = env;
    row.bound = bound;
    row.ratio = env / bound;
    fit.rows.push_back(row);
    // normal equations for envelope ~ c1*flat + c2*diff
    sxx += flat * flat;
    sxy += flat * diff;
    syy += diff * diff;
    sxr += flat * env;
    syr += diff * env;
  }
  const double det = sxx * syy - sxy * sxy;
  if (std::abs(det) > 1e-300) {
    fit.c1 = (syy * sxr - sxy * syr) / det;
    fit.c2 = (sxx * syr - sxy * sxr) / det;
  }
  return fit;
}

}  // namespace bandlab
