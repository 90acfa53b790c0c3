#include "bandlab/deloc.hpp"

#include <cmath>

namespace bandlab {
namespace {

void box_filter_vec(Eigen::VectorXd& v, const TorusShape& shape, int axis,
                    int radius) {
  const std::int64_t n = shape.size();
  std::int64_t stride = 1;
  for (int i = shape.dim - 1; i > axis; --i) stride *= shape.side;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  const int side = shape.side;
  for (std::int64_t x = 0; x < n; ++x) {
    const int c = static_cast<int>((x / stride) % side);
    const std::int64_t base = x - static_cast<std::int64_t>(c) * stride;
    double acc = 0.0;
    for (int t = -radius; t <= radius; ++t) {
      int cc = (c + t) % side;
      if (cc < 0) cc += side;
      acc += v(base + static_cast<std::int64_t>(cc) * stride);
    }
    out(x) = acc;
  }
  v.swap(out);
}

}  // namespace

SpectralData eigendecompose(const BandSample& sample, std::int64_t budget) {
  const std::int64_t n = sample.shape().size();
  if (n > budget)
    throw std::invalid_argument("eigendecompose: size exceeds budget");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sample.H);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecompose: solver failed");
  SpectralData spec;
  spec.eigenvalues = es.eigenvalues();
  spec.eigenvectors = es.eigenvectors();
  for (std::int64_t a = 0; a < n; ++a) {
    for (std::int64_t x = 0; x < n; ++x) {
      const double v = spec.eigenvectors(x, a);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) spec.eigenvectors.col(a) = -spec.eigenvectors.col(a);
        break;
      }
    }
  }
  return spec;
}

double reconstruction_defect(const BandSample& sample,
                             const SpectralData& spec) {
  Eigen::MatrixXd R = spec.eigenvectors *
                      spec.eigenvalues.asDiagonal() *
                      spec.eigenvectors.transpose();
  return (sample.H - R).cwiseAbs().maxCoeff();
}

double localization_fraction(const SpectralData& spec, const TorusShape& shape,
                             double eps, double kappa, int l) {
  if (l <= 0 || l >= shape.side / 2 + shape.side % 2)
    throw std::invalid_argument("localization_fraction: need 0 < l < N/2");
  const std::int64_t n = shape.size();
  std::int64_t hits = 0;
  for (std::int64_t a = 0; a < n; ++a) {
    const double lam = spec.eigenvalues(a);
    if (lam <= -2.0 + kappa || lam >= 2.0 - kappa) continue;
    Eigen::VectorXd u2 = spec.eigenvectors.col(a).array().square();
    for (int axis = 0; axis < shape.dim; ++axis)
      box_filter_vec(u2, shape, axis, l - 1);
    double s = 0.0;
    for (std::int64_t x = 0; x < n; ++x) {
      const double tail = std::max(0.0, 1.0 - u2(x));
      s += std::abs(spec.eigenvectors(x, a)) * std::sqrt(tail);
    }
    if (s <= eps) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

DelocReport deloc_report(const SpectralData& spec, const TorusShape& shape,
                         double eps, double kappa, int l) {
  DelocReport rep;
  rep.eps = eps;
  rep.kappa = kappa;
  rep.l = l;
  rep.fraction = localization_fraction(spec, shape, eps, kappa, l);
  const auto sup = sup_norm_stat(spec, kappa);
  rep.supnorm = sup.value_or(0.0);
  const std::int64_t n = shape.size();
  for (std::int64_t a = 0; a < n; ++a) {
    const double lam = spec.eigenvalues(a);
    if (lam > -2.0 + kappa && lam < 2.0 - kappa) ++rep.bulk_count;
  }
  return rep;
}

std::optional<double> sup_norm_stat(const SpectralData& spec, double kappa) {
  const std::int64_t n = spec.eigenvalues.size();
  double best = -1.0;
  for (std::int64_t a = 0; a < n; ++a) {
    const double lam = spec.eigenvalues(a);
    if (lam <= -2.0 + kappa || lam >= 2.0 - kappa) continue;
    best = std::max(best, spec.eigenvectors.col(a).cwiseAbs().maxCoeff());
  }
  if (best < 0.0) return std::nullopt;
  return best;
}

double mass_profile(const Resolvent& r, Complex m, std::int64_t y, int l) {
  if (!r.params.is_scalar())
    throw std::invalid_argument("mass_profile: scalar Z required");
  const TorusShape& shape = r.params.shape;
  const std::int64_t n = shape.size();
  double acc = 0.0;
  for (std::int64_t x = 0; x < n; ++x)
    if (dist_flat(x, y, shape) <= l) acc += std::norm(r.G(x, y));
  return r.params.eta / m.imag() * acc;
}

double local_law_check(const Resolvent& r, Complex m, int W, double delta) {
  const int d = r.params.shape.dim;
  const double eta = r.params.eta;
  const double floor = std::pow(static_cast<double>(W), -d + delta);
  if (eta < floor)
    throw std::domain_error("local_law_check: eta below the spectral domain");
  const double dev = max_deviation(r.G, m);
  return dev * std::sqrt(std::pow(static_cast<double>(W), d) * eta);
}

Regression linear_regression(const std::vector<double>& x,
                             const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_regression: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  Regression out;
  out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  out.intercept = (sy - out.slope * sx) / n;
  return out;
}

Phi2FixedPoint phi2_fixed_point(int W, int dim, double delta, double phi0,
                                double tol) {
  const double a = std::pow(static_cast<double>(W), -0.5 * dim);
  const double q = std::pow(static_cast<double>(W), -0.5 * delta);
  Phi2FixedPoint fp;
  fp.closed_form = a / (1.0 - q);
  double phi = phi0;
  for (int step = 1; step <= 100000; ++step) {
    const double next = a + q * phi;
    fp.steps = step;
    if (std::abs(next - phi) <= tol) {
      fp.value = next;
      return fp;
    }
    phi = next;
  }
  fp.value = phi;
  return fp;
}

}  // namespace bandlab
