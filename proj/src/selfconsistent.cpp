#include "bandlab/selfconsistent.hpp"

#include <cmath>

#include "bandlab/fft.hpp"

namespace bandlab {

Complex msc(Complex z) {
  if (z.imag() <= 0.0)
    throw std::invalid_argument("msc: Im z must be positive");
  const Complex root = std::sqrt(z * z - 4.0);
  const Complex m1 = (-z + root) / 2.0;
  const Complex m2 = (-z - root) / 2.0;
  return m1.imag() > 0.0 ? m1 : m2;
}

SpectralParams SpectralParams::scalar(const TorusShape& shape, Complex z) {
  if (z.imag() <= 0.0)
    throw std::invalid_argument("SpectralParams: Im z must be positive");
  SpectralParams p;
  p.shape = shape;
  p.z = z;
  p.zvec = Eigen::VectorXcd::Constant(shape.size(), z);
  p.eta = z.imag();
  return p;
}

SpectralParams SpectralParams::general(const TorusShape& shape, Complex z_ref,
                                       Eigen::VectorXcd zvec) {
  if (zvec.size() != shape.size())
    throw std::invalid_argument("SpectralParams: zvec size mismatch");
  for (std::int64_t i = 0; i < zvec.size(); ++i)
    if (zvec(i).imag() <= 0.0)
      throw std::invalid_argument("SpectralParams: Im z_x must be positive");
  SpectralParams p;
  p.shape = shape;
  p.z = z_ref;
  p.zvec = std::move(zvec);
  p.eta = z_ref.imag();
  return p;
}

bool SpectralParams::is_scalar() const {
  for (std::int64_t i = 0; i < zvec.size(); ++i)
    if (zvec(i) != z) return false;
  return true;
}

double SpectralParams::max_deviation_from_z() const {
  double m = 0.0;
  for (std::int64_t i = 0; i < zvec.size(); ++i)
    m = std::max(m, std::abs(zvec(i) - z));
  return m;
}

MSolution solve_M(const VarianceProfile& profile, const SpectralParams& params,
                  double tol, int max_iter, const Eigen::VectorXcd* init,
                  double c0) {
  const std::int64_t n = profile.shape().size();
  const double hyp = profile.zeta() + params.max_deviation_from_z();
  if (hyp > c0)
    throw std::invalid_argument(
        "solve_M: zeta + max|z_x - z| exceeds the configured c0");
  const Complex m0 = msc(params.z);
  Eigen::VectorXcd M = init ? *init : Eigen::VectorXcd::Constant(n, m0);
  const double alpha = 0.5;
  auto residual_of = [&](const Eigen::VectorXcd& v) {
    Eigen::VectorXcd sv = profile.apply(v);
    double r = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      r = std::max(r, std::abs(1.0 / v(i) + params.zvec(i) + sv(i)));
    return r;
  };
  MSolution out;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXcd sv = profile.apply(M);
    Eigen::VectorXcd next(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const Complex map = 1.0 / (-params.zvec(i) - sv(i));
      next(i) = (1.0 - alpha) * M(i) + alpha * map;
      if (next(i).imag() <= 0.0)
        throw std::runtime_error("solve_M: iterate left the upper half plane");
    }
    M = std::move(next);
    const double res = residual_of(M);
    if (res <= tol) {
      out.M = std::move(M);
      out.residual = res;
      out.iterations = it;
      return out;
    }
  }
  throw std::runtime_error("solve_M: no convergence within max_iter");
}

StabilityReport stability_inverse(const Eigen::VectorXcd& M,
                                  const VarianceProfile& profile,
                                  double far_radius) {
  const TorusShape& shape = profile.shape();
  const std::int64_t n = shape.size();
  if (M.size() != n)
    throw std::invalid_argument("stability_inverse: M size mismatch");
  if (far_radius < 0.0) {
    const double lg = std::log(static_cast<double>(shape.side));
    far_radius = lg * lg * profile.band_width();
  }
  Eigen::MatrixXd S = profile.dense();
  Eigen::MatrixXcd A = -(M.array().square().matrix().asDiagonal() *
                         S.cast<Complex>());
  A.diagonal().array() += 1.0;

  StabilityReport rep;
  rep.far_radius = far_radius;
  // l^inf -> l^inf norm of M^2 S = max_x |M_x|^2 * rowsum
  Eigen::VectorXd rows = profile.row_sums();
  for (std::int64_t x = 0; x < n; ++x)
    rep.contraction = std::max(rep.contraction, std::norm(M(x)) * rows(x));

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  rep.inverse = lu.inverse();
  const double check =
      (A * rep.inverse - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!std::isfinite(check) || check > 1e-6)
    throw std::runtime_error("stability_inverse: 1 - M^2 S is near-singular");

  for (std::int64_t x = 0; x < n; ++x) {
    double row_abs = 0.0;
    for (std::int64_t y = 0; y < n; ++y) {
      const double a = std::abs(rep.inverse(x, y));
      row_abs += a;
      const double dev = std::abs(rep.inverse(x, y) - (x == y ? 1.0 : 0.0));
      if (dist_flat(x, y, shape) <= far_radius) {
        rep.near_max = std::max(rep.near_max, dev);
      } else {
        rep.far_max = std::max(rep.far_max, a);
        ++rep.far_count;
      }
    }
    rep.norm_linf = std::max(rep.norm_linf, row_abs);
  }
  return rep;
}

ThetaKernel ThetaKernel::circulant(const TorusShape& shape,
                                   Eigen::VectorXd row0) {
  ThetaKernel k;
  k.shape_ = shape;
  k.circulant_ = true;
  k.row0_ = std::move(row0);
  return k;
}

ThetaKernel ThetaKernel::dense(const TorusShape& shape, Eigen::MatrixXd full) {
  ThetaKernel k;
  k.shape_ = shape;
  k.circulant_ = false;
  k.full_ = std::move(full);
  k.have_full_ = true;
  return k;
}

double ThetaKernel::entry(std::int64_t x, std::int64_t y) const {
  if (!circulant_) return full_(x, y);
  // Theta_xy = row0[[y - x]]: difference of flattened indices per axis.
  std::int64_t a = x, b = y, idx = 0, stride = 1;
  for (int i = shape_.dim - 1; i >= 0; --i) {
    const int ca = static_cast<int>(a % shape_.side);
    const int cb = static_cast<int>(b % shape_.side);
    a /= shape_.side;
    b /= shape_.side;
    int u = cb - ca;
    if (u < 0) u += shape_.side;
    idx += u * stride;
    stride *= shape_.side;
  }
  return row0_(idx);
}

const Eigen::MatrixXd& ThetaKernel::matrix() const {
  if (!have_full_) {
    const std::int64_t n = shape_.size();
    full_.resize(n, n);
    for (std::int64_t x = 0; x < n; ++x)
      for (std::int64_t y = 0; y < n; ++y) full_(x, y) = entry(x, y);
    have_full_ = true;
  }
  return full_;
}

ThetaKernel theta_kernel(const VarianceProfile& profile, Complex m,
                         ThetaMode mode) {
  const double m2 = std::norm(m);
  if (m2 >= 1.0)
    throw std::invalid_argument("theta_kernel: |m| must be < 1");
  const TorusShape& shape = profile.shape();
  const std::int64_t n = shape.size();
  if (mode == ThetaMode::kFft) {
    if (!profile.periodic_kind())
      throw std::invalid_argument("theta_kernel: fft mode needs a periodic profile");
    Eigen::VectorXd symbol = profile.fourier_symbol();
    Eigen::VectorXcd modes(n);
    for (std::int64_t p = 0; p < n; ++p)
      modes(p) = symbol(p) / (1.0 - m2 * symbol(p));
    return ThetaKernel::circulant(shape, circulant_row_from_modes(shape, modes));
  }
  Eigen::MatrixXd S = profile.dense();
  Eigen::MatrixXd A = -m2 * S;
  A.diagonal().array() += 1.0;
  Eigen::MatrixXd theta = A.partialPivLu().solve(S);
  return ThetaKernel::dense(shape, std::move(theta));
}

}  // namespace bandlab
