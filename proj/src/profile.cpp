#include "bandlab/profile.hpp"

#include <cmath>
#include <numbers>

namespace bandlab {
namespace {

std::int64_t box_index_of(std::span<const int> u, int radius) {
  const int width = 2 * radius + 1;
  std::int64_t idx = 0;
  for (int c : u) idx = idx * width + (c + radius);
  return idx;
}

}  // namespace

VarianceProfile VarianceProfile::uniform(const TorusShape& shape, int W) {
  if (W < 0) throw std::invalid_argument("uniform profile: W must be >= 0");
  if (2 * W + 1 > shape.side)
    throw std::invalid_argument("uniform profile: band wider than torus");
  std::int64_t width = 2 * W + 1;
  std::int64_t vol = 1;
  for (int i = 0; i < shape.dim; ++i) vol *= width;
  VarianceProfile p;
  p.shape_ = shape;
  p.band_width_ = W;
  p.radius_ = W;
  p.kind_ = Kind::kPeriodicStencil;
  p.stencil_.assign(static_cast<std::size_t>(vol), 1.0 / static_cast<double>(vol));
  p.zeta_ = 0.0;
  p.c_s_ = 1.0;
  p.C_s_ = 1.0;
  return p;
}

VarianceProfile VarianceProfile::periodic(const TorusShape& shape, int W,
                                          std::vector<double> stencil,
                                          int radius, double c_s, double C_s) {
  const int width = 2 * radius + 1;
  if (width > shape.side)
    throw std::invalid_argument("periodic profile: band wider than torus");
  std::int64_t vol = 1;
  for (int i = 0; i < shape.dim; ++i) vol *= width;
  if (static_cast<std::int64_t>(stencil.size()) != vol)
    throw std::invalid_argument("periodic profile: stencil size mismatch");
  VarianceProfile p;
  p.shape_ = shape;
  p.band_width_ = W;
  p.radius_ = radius;
  p.kind_ = Kind::kPeriodicStencil;
  p.stencil_ = std::move(stencil);
  p.zeta_ = 0.0;
  double slack = 0.0;
  {
    double sum = 0.0;
    for (double v : p.stencil_) {
      if (v < 0.0)
        throw std::invalid_argument("periodic profile: negative stencil value");
      sum += v;
    }
    slack = std::abs(sum - 1.0);
  }
  p.zeta_ = slack;
  p.c_s_ = c_s;
  p.C_s_ = C_s;
  // symmetry s(u) = s(-u)
  for_each_offset(shape.dim, radius, [&](std::span<const int> u, std::int64_t box) {
    std::vector<int> neg(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) neg[i] = -u[i];
    std::int64_t nb = box_index_of(neg, radius);
    if (p.stencil_[static_cast<std::size_t>(box)] !=
        p.stencil_[static_cast<std::size_t>(nb)])
      throw std::invalid_argument("periodic profile: stencil not symmetric");
  });
  return p;
}

VarianceProfile VarianceProfile::general(const TorusShape& shape, int W,
                                         Eigen::MatrixXd dense, double zeta,
                                         double c_s, double C_s) {
  const std::int64_t n = shape.size();
  if (dense.rows() != n || dense.cols() != n)
    throw std::invalid_argument("general profile: dense size mismatch");
  VarianceProfile p;
  p.shape_ = shape;
  p.band_width_ = W;
  p.radius_ = std::min<int>(shape.side / 2,
                            static_cast<int>(std::ceil(C_s * W)));
  p.kind_ = Kind::kGeneralDense;
  p.dense_ = std::move(dense);
  p.zeta_ = zeta;
  p.c_s_ = c_s;
  p.C_s_ = C_s;
  return p;
}

double VarianceProfile::entry(std::int64_t x, std::int64_t y) const {
  if (kind_ == Kind::kGeneralDense) return dense_(x, y);
  // displacement of y relative to x, canonical per axis
  std::int64_t a = x, b = y;
  const int width = 2 * radius_ + 1;
  std::int64_t idx = 0;
  std::int64_t stride = 1;
  for (int i = shape_.dim - 1; i >= 0; --i) {
    const int ca = static_cast<int>(a % shape_.side);
    const int cb = static_cast<int>(b % shape_.side);
    a /= shape_.side;
    b /= shape_.side;
    const int u = canonical_coord(cb - ca, shape_.side);
    if (u < -radius_ || u > radius_) return 0.0;
    idx += (u + radius_) * stride;
    stride *= width;
  }
  return stencil_[static_cast<std::size_t>(idx)];
}

Eigen::MatrixXd VarianceProfile::dense() const {
  if (kind_ == Kind::kGeneralDense) return dense_;
  const std::int64_t n = shape_.size();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  // Fill band columns from the stencil; row x, column x+u.
  for (std::int64_t x = 0; x < n; ++x) {
    TorusPoint px = unflatten(x, shape_);
    for_each_offset(shape_.dim, radius_, [&](std::span<const int> u, std::int64_t box) {
      const double v = stencil_[static_cast<std::size_t>(box)];
      if (v == 0.0) return;
      std::vector<int> q(px.coords);
      for (int i = 0; i < shape_.dim; ++i) q[static_cast<std::size_t>(i)] += u[i];
      TorusPoint py;
      py.coords = std::move(q);
      S(x, flatten(py, shape_)) = v;
    });
  }
  return S;
}

Eigen::VectorXd VarianceProfile::row_sums() const {
  const std::int64_t n = shape_.size();
  if (kind_ == Kind::kGeneralDense) return dense_.rowwise().sum();
  double total = 0.0;
  for (double v : stencil_) total += v;
  return Eigen::VectorXd::Constant(n, total);
}

Eigen::VectorXd VarianceProfile::fourier_symbol() const {
  if (kind_ != Kind::kPeriodicStencil)
    throw std::invalid_argument("fourier_symbol: profile is not periodic");
  const std::int64_t n = shape_.size();
  Eigen::VectorXd symbol(n);
  const double twopi = 2.0 * std::numbers::pi;
  std::vector<int> pc(static_cast<std::size_t>(shape_.dim));
  for (std::int64_t p = 0; p < n; ++p) {
    std::int64_t rest = p;
    for (int i = shape_.dim - 1; i >= 0; --i) {
      pc[static_cast<std::size_t>(i)] = static_cast<int>(rest % shape_.side);
      rest /= shape_.side;
    }
    double acc = 0.0;
    for_each_offset(shape_.dim, radius_, [&](std::span<const int> u, std::int64_t box) {
      const double v = stencil_[static_cast<std::size_t>(box)];
      if (v == 0.0) return;
      double phase = 0.0;
      for (int i = 0; i < shape_.dim; ++i)
        phase += static_cast<double>(pc[static_cast<std::size_t>(i)]) * u[i];
      acc += v * std::cos(twopi * phase / shape_.side);
    });
    symbol(p) = acc;
  }
  return symbol;
}

namespace {

template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> stencil_apply(
    const VarianceProfile& prof, const Eigen::Vector<Scalar, Eigen::Dynamic>& x) {
  const TorusShape& shape = prof.shape();
  const std::int64_t n = shape.size();
  Eigen::Vector<Scalar, Eigen::Dynamic> y =
      Eigen::Vector<Scalar, Eigen::Dynamic>::Zero(n);
  std::vector<std::int64_t> strides(static_cast<std::size_t>(shape.dim));
  std::int64_t s = 1;
  for (int i = shape.dim - 1; i >= 0; --i) {
    strides[static_cast<std::size_t>(i)] = s;
    s *= shape.side;
  }
  std::vector<int> xc(static_cast<std::size_t>(shape.dim));
  for (std::int64_t xi = 0; xi < n; ++xi) {
    std::int64_t rest = xi;
    for (int i = shape.dim - 1; i >= 0; --i) {
      xc[static_cast<std::size_t>(i)] = static_cast<int>(rest % shape.side);
      rest /= shape.side;
    }
    Scalar acc{};
    for_each_offset(shape.dim, prof.band_radius(),
                    [&](std::span<const int> u, std::int64_t box) {
      const double v = prof.stencil_value(box);
      if (v == 0.0) return;
      std::int64_t yi = 0;
      for (int i = 0; i < shape.dim; ++i) {
        int c = xc[static_cast<std::size_t>(i)] + u[i];
        c %= shape.side;
        if (c < 0) c += shape.side;
        yi += c * strides[static_cast<std::size_t>(i)];
      }
      acc += v * x(yi);
    });
    y(xi) = acc;
  }
  return y;
}

}  // namespace

Eigen::VectorXcd VarianceProfile::apply(const Eigen::VectorXcd& x) const {
  if (kind_ == Kind::kGeneralDense)
    return dense_.cast<std::complex<double>>() * x;
  return stencil_apply<std::complex<double>>(*this, x);
}

Eigen::VectorXd VarianceProfile::apply(const Eigen::VectorXd& x) const {
  if (kind_ == Kind::kGeneralDense) return dense_ * x;
  return stencil_apply<double>(*this, x);
}

ProfileReport check_profile(const VarianceProfile& profile, double c_s,
                            double C_s) {
  const TorusShape& shape = profile.shape();
  const std::int64_t n = shape.size();
  const int W = profile.band_width();
  ProfileReport rep;
  rep.band_ok = true;
  rep.lower_ok = true;
  const double lower = c_s * std::pow(static_cast<double>(W), -shape.dim);
  const double inner = c_s * W;
  const double outer = C_s * W;
  for (std::int64_t x = 0; x < n; ++x) {
    double row = 0.0;
    for (std::int64_t y = 0; y < n; ++y) {
      const double v = profile.entry(x, y);
      row += v;
      if (v != profile.entry(y, x)) rep.band_ok = false;
      const int d = dist_flat(x, y, shape);
      if (v < 0.0) rep.lower_ok = false;
      if (v != 0.0 && d > outer) rep.band_ok = false;
      if (d <= inner && v < lower) rep.lower_ok = false;
    }
    rep.rowsum_slack = std::max(rep.rowsum_slack, std::abs(row - 1.0));
    if (profile.periodic_kind()) break;  // every row identical
  }
  rep.within_zeta = rep.rowsum_slack <= profile.zeta() + 1e-12;
  return rep;
}

}  // namespace bandlab
