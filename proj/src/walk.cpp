#include "bandlab/walk.hpp"

#include <cmath>
#include <numbers>

#include "bandlab/fft.hpp"

namespace bandlab {

WalkStep WalkStep::uniform(int W, int dim) {
  WalkStep s;
  s.dim = dim;
  s.radius = W;
  std::int64_t vol = 1;
  for (int i = 0; i < dim; ++i) vol *= 2 * W + 1;
  s.masses.assign(static_cast<std::size_t>(vol),
                  1.0 / static_cast<double>(vol));
  return s;
}

WalkStep WalkStep::from_profile(const VarianceProfile& profile) {
  if (!profile.periodic_kind())
    throw std::invalid_argument("WalkStep: profile must be periodic");
  WalkStep s;
  s.dim = profile.shape().dim;
  s.radius = profile.band_radius();
  std::int64_t vol = 1;
  for (int i = 0; i < s.dim; ++i) vol *= 2 * s.radius + 1;
  s.masses.resize(static_cast<std::size_t>(vol));
  for (std::int64_t b = 0; b < vol; ++b)
    s.masses[static_cast<std::size_t>(b)] = profile.stencil_value(b);
  if (std::abs(s.total_mass() - 1.0) > 1e-9)
    throw std::invalid_argument("WalkStep: stencil masses must sum to 1");
  return s;
}

double WalkStep::total_mass() const {
  double t = 0.0;
  for (double v : masses) t += v;
  return t;
}

Eigen::MatrixXd WalkStep::covariance() const {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(dim, dim);
  for_each_offset(dim, radius, [&](std::span<const int> u, std::int64_t box) {
    const double p = masses[static_cast<std::size_t>(box)];
    if (p == 0.0) return;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        sigma(i, j) += p * u[i] * u[j];
  });
  return sigma;
}

namespace {

Eigen::VectorXd walk_symbol(const WalkStep& step, const TorusShape& shape) {
  if (shape.dim != step.dim)
    throw std::invalid_argument("walk symbol: dimension mismatch");
  if (2 * step.radius + 1 > shape.side)
    throw std::invalid_argument("walk symbol: step wider than torus");
  const std::int64_t n = shape.size();
  Eigen::VectorXd symbol(n);
  const double twopi = 2.0 * std::numbers::pi;
  std::vector<int> pc(static_cast<std::size_t>(shape.dim));
  for (std::int64_t p = 0; p < n; ++p) {
    std::int64_t rest = p;
    for (int i = shape.dim - 1; i >= 0; --i) {
      pc[static_cast<std::size_t>(i)] = static_cast<int>(rest % shape.side);
      rest /= shape.side;
    }
    double acc = 0.0;
    for_each_offset(shape.dim, step.radius,
                    [&](std::span<const int> u, std::int64_t box) {
      const double v = step.masses[static_cast<std::size_t>(box)];
      if (v == 0.0) return;
      double phase = 0.0;
      for (int i = 0; i < shape.dim; ++i)
        phase += static_cast<double>(pc[static_cast<std::size_t>(i)]) * u[i];
      acc += v * std::cos(twopi * phase / shape.side);
    });
    symbol(p) = acc;
  }
  return symbol;
}

Eigen::VectorXd clean_masses(Eigen::VectorXd row) {
  double neg = 0.0;
  for (std::int64_t i = 0; i < row.size(); ++i)
    if (row(i) < 0.0) neg -= row(i);
  if (neg >= 1e-10)
    throw std::runtime_error("s_power: FFT negativity beyond tolerance");
  if (neg > 0.0) {
    for (std::int64_t i = 0; i < row.size(); ++i)
      if (row(i) < 0.0) row(i) = 0.0;
    row /= row.sum();
  }
  return row;
}

}  // namespace

Eigen::VectorXd s_power(const WalkStep& step, int k, const TorusShape& shape) {
  if (k < 0) throw std::invalid_argument("s_power: k must be >= 0");
  Eigen::VectorXd symbol = walk_symbol(step, shape);
  const std::int64_t n = shape.size();
  Eigen::VectorXcd modes(n);
  for (std::int64_t p = 0; p < n; ++p)
    modes(p) = std::pow(symbol(p), k);
  return clean_masses(circulant_row_from_modes(shape, modes));
}

CltReport clt_compare(const WalkStep& step, int n, const TorusShape& shape) {
  CltReport rep;
  const Eigen::MatrixXd sigma = step.covariance();
  const Eigen::MatrixXd nsigma_inv = (n * sigma).inverse();
  const double det = (n * sigma).determinant();
  rep.gaussian_peak =
      std::pow(2.0 * std::numbers::pi, -0.5 * shape.dim) / std::sqrt(det);
  rep.wraparound_ok =
      step.radius * std::sqrt(static_cast<double>(n)) <= shape.side / 2.0;
  rep.log_ratio = std::log(static_cast<double>(n)) /
                  std::log(static_cast<double>(std::max(2, step.radius)));
  const Eigen::VectorXd masses = s_power(step, n, shape);
  const double r2max = 9.0 * n * sigma.trace() / shape.dim;
  const std::int64_t total = shape.size();
  for (std::int64_t i = 0; i < total; ++i) {
    TorusPoint u = unflatten(i, shape);
    double r2 = 0.0;
    for (int c : u.coords) r2 += static_cast<double>(c) * c;
    if (r2 > r2max) continue;
    Eigen::VectorXd x(shape.dim);
    for (int a = 0; a < shape.dim; ++a) x(a) = u.coords[static_cast<std::size_t>(a)];
    const double gauss = rep.gaussian_peak *
                         std::exp(-0.5 * x.dot(nsigma_inv * x));
    const double err = std::abs(masses(i) - gauss);
    rep.max_abs_err = std::max(rep.max_abs_err, err);
    if (r2 == 0.0) rep.center_rel_err = err / gauss;
  }
  return rep;
}

TailSumReport theta_tail_sum(const WalkStep& step, Complex m, double eta,
                             const TorusShape& shape, double tau,
                             std::optional<int> K_override) {
  const double rho = std::norm(m);
  if (rho >= 1.0)
    throw std::invalid_argument("theta_tail_sum: |m| must be < 1");
  if (eta <= 0.0) throw std::invalid_argument("theta_tail_sum: eta > 0");
  TailSumReport rep;
  rep.tau = tau;
  rep.K = K_override.value_or(static_cast<int>(std::ceil(1.0 / eta)));
  rep.truncation_bound = std::pow(rho, rep.K) / (1.0 - rho);

  const Eigen::VectorXd symbol = walk_symbol(step, shape);
  const std::int64_t n = shape.size();

  // Closed-form geometric partial sum per mode.
  Eigen::VectorXcd modes(n);
  for (std::int64_t p = 0; p < n; ++p) {
    const double lam = symbol(p);
    const double q = rho * lam;
    if (std::abs(1.0 - q) < 1e-12) {
      modes(p) = lam * static_cast<double>(rep.K);
    } else {
      modes(p) = lam * (1.0 - std::pow(q, rep.K)) / (1.0 - q);
    }
  }
  rep.row = circulant_row_from_modes(shape, modes);

  // Three-regime decomposition of (S^k)_{0,u}.
  const double side = static_cast<double>(shape.side);
  const int W = step.radius;
  const int kb1 = static_cast<int>(std::floor(std::pow(side, tau)));
  const int kb2 = static_cast<int>(
      std::floor(std::pow(side, 2.0 - tau) / (W * static_cast<double>(W))));
  const double sigma_bar = step.covariance().trace() / shape.dim;
  const double late_bound = std::pow(side, -shape.dim + 0.5 * shape.dim * tau);
  Eigen::VectorXcd pk = Eigen::VectorXcd::Ones(n);
  double c_early = -1.0, c_middle = -1.0, c_late = -1.0;
  for (int k = 1; k <= rep.K; ++k) {
    for (std::int64_t p = 0; p < n; ++p) pk(p) *= symbol(p);
    const Eigen::VectorXd row_k = circulant_row_from_modes(shape, pk);
    for (std::int64_t i = 0; i < n; ++i) {
      const double mass = row_k(i);
      if (mass <= 0.0) continue;
      TorusPoint u = unflatten(i, shape);
      double rinf = 0.0, r2 = 0.0;
      for (int c : u.coords) {
        rinf = std::max(rinf, static_cast<double>(std::abs(c)));
        r2 += static_cast<double>(c) * c;
      }
      if (k <= kb1) {
        const double jb = 1.0 + rinf;
        const double bound = std::pow(side, (shape.dim - 2) * tau) *
                             std::pow(jb, 2.0 - shape.dim) /
                             (W * static_cast<double>(W));
        c_early = std::max(c_early, mass / bound);
      } else if (k <= kb2) {
        const double bound =
            std::pow(static_cast<double>(k), -0.5 * shape.dim) *
                std::pow(static_cast<double>(W), -shape.dim) *
                std::exp(-r2 / (4.0 * k * sigma_bar)) +
            std::pow(side, -10.0);
        c_middle = std::max(c_middle, mass / bound);
      } else {
        c_late = std::max(c_late, mass / late_bound);
      }
    }
  }
  if (c_early >= 0.0) rep.c_early = c_early;
  if (c_middle >= 0.0) rep.c_middle = c_middle;
  if (c_late >= 0.0) rep.c_late = c_late;
  return rep;
}

}  // namespace bandlab
