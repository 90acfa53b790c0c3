#include "bandlab/fluct.hpp"

#include <cmath>
#include <numbers>

namespace bandlab {

FluctStat fluct_stat(const Resolvent& r, const Eigen::VectorXcd& M,
                     const Eigen::VectorXd& t_col, const Eigen::VectorXd& b,
                     std::int64_t y_star, const ControlParams& controls) {
  const std::int64_t n = r.G.rows();
  if (b.size() != n || t_col.size() != n)
    throw std::invalid_argument("fluct_stat: size mismatch");
  FluctStat out;
  out.y_star = y_star;
  out.controls = controls;
  double acc = 0.0;
  for (std::int64_t x = 0; x < n; ++x)
    acc += b(x) * (std::norm(r.G(x, y_star)) - std::norm(M(x)) * t_col(x));
  out.value = acc;
  const double phi2 = controls.phi * controls.phi;
  out.bound_new = controls.gamma * controls.gamma * phi2 + 1.0;
  const double nd = static_cast<double>(n);
  out.bound_old = std::sqrt(nd) * phi2 + nd * phi2 * phi2;
  return out;
}

Eigen::VectorXd b_ones(const TorusShape& shape) {
  return Eigen::VectorXd::Ones(shape.size());
}

Eigen::VectorXd b_cosine(const TorusShape& shape) {
  const std::int64_t n = shape.size();
  Eigen::VectorXd b(n);
  std::int64_t stride = 1;
  for (int i = 1; i < shape.dim; ++i) stride *= shape.side;
  for (std::int64_t x = 0; x < n; ++x) {
    const int c = static_cast<int>(x / stride);  // first coordinate in [0, N)
    b(x) = std::cos(2.0 * std::numbers::pi * c / shape.side);
  }
  return b;
}

double conditional_sqmod_mc(const BandSample& sample, const Resolvent& full,
                            std::int64_t x, std::int64_t y_star,
                            int n_resample, std::uint64_t first_index) {
  if (n_resample < 1)
    throw std::invalid_argument("conditional_sqmod_mc: n_resample >= 1");
  const Eigen::MatrixXcd& G = full.G;
  const std::int64_t n = G.rows();
  double acc = 0.0;
  for (int rix = 0; rix < n_resample; ++rix) {
    Eigen::VectorXd d =
        resample_row(sample, x, first_index + static_cast<std::uint64_t>(rix));
    // support of the update
    std::vector<std::int64_t> supp;
    for (std::int64_t w = 0; w < n; ++w)
      if (d(w) != 0.0) supp.push_back(w);
    if (supp.empty()) {
      acc += std::norm(G(x, y_star));
      continue;
    }
    // H' = H + e_x d^T + d e_x^T - d_x e_x e_x^T = H + U C U^T,
    // U = [e_x, d], C = [[-d_x, 1], [1, 0]], C^-1 = [[0, 1], [1, d_x]].
    Complex gd_x = 0.0, gd_y = 0.0, dgd = 0.0;
    for (auto a : supp) {
      gd_x += G(x, a) * d(a);
      gd_y += G(y_star, a) * d(a);
      Complex inner = 0.0;
      for (auto bb : supp) inner += G(a, bb) * d(bb);
      dgd += d(a) * inner;
    }
    Eigen::Matrix2cd K;
    K(0, 0) = G(x, x);
    K(0, 1) = gd_x + 1.0;
    K(1, 0) = gd_x + 1.0;
    K(1, 1) = dgd + d(x);
    Eigen::Vector2cd rhs;
    rhs(0) = G(x, y_star);
    rhs(1) = gd_y;
    const Eigen::Vector2cd c = K.inverse() * rhs;
    const Complex gprime =
        G(x, y_star) - (G(x, x) * c(0) + gd_x * c(1));
    acc += std::norm(gprime);
  }
  return acc / n_resample;
}

SplitPQ split_pq(const BandSample& sample, const Resolvent& full,
                 const Eigen::VectorXcd& M, const Eigen::VectorXd& t_col,
                 const Eigen::VectorXd& b, std::int64_t y_star,
                 int n_resample) {
  const std::int64_t n = full.G.rows();
  SplitPQ out;
  for (std::int64_t x = 0; x < n; ++x) {
    if (x == y_star) continue;
    const double m2t = std::norm(M(x)) * t_col(x);
    out.f_offdiag += b(x) * (std::norm(full.G(x, y_star)) - m2t);
    const double ex =
        conditional_sqmod_mc(sample, full, x, y_star, n_resample);
    out.p_part += b(x) * (ex - m2t);
  }
  out.q_part = out.f_offdiag - out.p_part;
  return out;
}

}  // namespace bandlab
