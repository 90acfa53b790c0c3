#include "bandlab/resolvent.hpp"

#include <algorithm>
#include <cmath>

namespace bandlab {
namespace {

constexpr double kPivotFloor = 1e-14;

Eigen::MatrixXcd shifted_matrix(const BandSample& sample,
                                const SpectralParams& params) {
  Eigen::MatrixXcd A = sample.H.cast<Complex>();
  A.diagonal() -= params.zvec;
  return A;
}

std::vector<std::int64_t> kept_indices(std::int64_t n,
                                       const std::vector<std::int64_t>& removed) {
  std::vector<char> gone(static_cast<std::size_t>(n), 0);
  for (auto i : removed) {
    if (i < 0 || i >= n)
      throw std::invalid_argument("minor: index out of range");
    gone[static_cast<std::size_t>(i)] = 1;
  }
  std::vector<std::int64_t> kept;
  kept.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    if (!gone[static_cast<std::size_t>(i)]) kept.push_back(i);
  if (kept.empty())
    throw std::invalid_argument("minor: set covers the whole lattice");
  return kept;
}

Eigen::MatrixXcd scatter(std::int64_t n,
                         const std::vector<std::int64_t>& kept,
                         const Eigen::MatrixXcd& small) {
  Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t a = 0; a < kept.size(); ++a)
    for (std::size_t b = 0; b < kept.size(); ++b)
      full(kept[a], kept[b]) = small(static_cast<Eigen::Index>(a),
                                     static_cast<Eigen::Index>(b));
  return full;
}

// Band neighborhood of x (sites w != x with s_xw > 0), flattened.
std::vector<std::int64_t> band_neighbors(const VarianceProfile& profile,
                                         std::int64_t x) {
  const TorusShape& shape = profile.shape();
  std::vector<std::int64_t> nb;
  if (profile.periodic_kind()) {
    TorusPoint px = unflatten(x, shape);
    for_each_offset(shape.dim, profile.band_radius(),
                    [&](std::span<const int> u, std::int64_t box) {
      if (profile.stencil_value(box) == 0.0) return;
      bool zero = true;
      for (int c : u)
        if (c != 0) zero = false;
      if (zero) return;
      TorusPoint q = px;
      for (int i = 0; i < shape.dim; ++i)
        q.coords[static_cast<std::size_t>(i)] += u[i];
      nb.push_back(flatten(q, shape));
    });
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  } else {
    for (std::int64_t w = 0; w < shape.size(); ++w)
      if (w != x && profile.entry(x, w) != 0.0) nb.push_back(w);
  }
  return nb;
}

}  // namespace

Resolvent resolvent(const BandSample& sample, const SpectralParams& params) {
  const std::int64_t n = sample.shape().size();
  if (params.zvec.size() != n)
    throw std::invalid_argument("resolvent: params size mismatch");
  Eigen::MatrixXcd A = shifted_matrix(sample, params);
  Resolvent r;
  r.params = params;
  r.G = A.partialPivLu().inverse();
  // Spot-check the solve on two probe columns.
  for (std::int64_t probe : {std::int64_t{0}, n / 2}) {
    Eigen::VectorXcd res = A * r.G.col(probe);
    res(probe) -= 1.0;
    if (!(res.cwiseAbs().maxCoeff() < 1e-8))
      throw std::runtime_error("resolvent: linear solve defect exceeds 1e-8");
  }
  return r;
}

Resolvent minor_resolvent(const BandSample& sample,
                          const SpectralParams& params,
                          std::vector<std::int64_t> removed) {
  const std::int64_t n = sample.shape().size();
  std::sort(removed.begin(), removed.end());
  removed.erase(std::unique(removed.begin(), removed.end()), removed.end());
  const auto kept = kept_indices(n, removed);
  Eigen::MatrixXcd A = shifted_matrix(sample, params);
  const auto k = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXcd red(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      red(a, b) = A(kept[static_cast<std::size_t>(a)],
                    kept[static_cast<std::size_t>(b)]);
  Resolvent r;
  r.params = params;
  r.minor_set = std::move(removed);
  r.G = scatter(n, kept, red.partialPivLu().inverse());
  return r;
}

Resolvent minor_from(const Resolvent& r, std::vector<std::int64_t> extra) {
  const std::int64_t n = r.G.rows();
  const auto kept_old = kept_indices(n, r.minor_set);
  const auto k = static_cast<Eigen::Index>(kept_old.size());
  Eigen::MatrixXcd small(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      small(a, b) = r.G(kept_old[static_cast<std::size_t>(a)],
                        kept_old[static_cast<std::size_t>(b)]);
  Eigen::MatrixXcd binv = small.partialPivLu().inverse();
  std::vector<std::int64_t> removed = r.minor_set;
  removed.insert(removed.end(), extra.begin(), extra.end());
  std::sort(removed.begin(), removed.end());
  removed.erase(std::unique(removed.begin(), removed.end()), removed.end());
  // Drop the extra rows/cols of B^-1 and invert back.
  std::vector<std::int64_t> sub;  // positions within kept_old to keep
  for (std::size_t a = 0; a < kept_old.size(); ++a)
    if (!std::binary_search(removed.begin(), removed.end(), kept_old[a]))
      sub.push_back(static_cast<std::int64_t>(a));
  if (sub.empty())
    throw std::invalid_argument("minor: set covers the whole lattice");
  const auto ks = static_cast<Eigen::Index>(sub.size());
  Eigen::MatrixXcd red(ks, ks);
  for (Eigen::Index a = 0; a < ks; ++a)
    for (Eigen::Index b = 0; b < ks; ++b)
      red(a, b) = binv(sub[static_cast<std::size_t>(a)],
                       sub[static_cast<std::size_t>(b)]);
  std::vector<std::int64_t> kept_new;
  for (auto a : sub) kept_new.push_back(kept_old[static_cast<std::size_t>(a)]);
  Resolvent out;
  out.params = r.params;
  out.minor_set = std::move(removed);
  out.G = scatter(n, kept_new, red.partialPivLu().inverse());
  return out;
}

double resolvent_defect(const BandSample& sample, const Resolvent& r) {
  const std::int64_t n = sample.shape().size();
  Eigen::MatrixXcd A = shifted_matrix(sample, r.params);
  const auto kept = kept_indices(n, r.minor_set);
  double worst = 0.0;
  for (auto a : kept) {
    for (auto b : kept) {
      Complex acc = a == b ? Complex(-1.0, 0.0) : Complex(0.0, 0.0);
      for (auto w : kept) acc += A(a, w) * r.G(w, b);
      worst = std::max(worst, std::abs(acc));
    }
  }
  return worst;
}

IdentityResiduals identity_residuals(const BandSample& sample,
                                     const SpectralParams& params,
                                     std::int64_t i, std::int64_t j,
                                     std::int64_t k) {
  return identity_residuals(sample, resolvent(sample, params), i, j, k);
}

IdentityResiduals identity_residuals(const BandSample& sample,
                                     const Resolvent& full, std::int64_t i,
                                     std::int64_t j, std::int64_t k) {
  if (i == j || j == k || i == k)
    throw std::invalid_argument("identity_residuals: indices must be distinct");
  const SpectralParams& params = full.params;
  const Eigen::MatrixXcd& G = full.G;
  IdentityResiduals out;
  if (std::abs(G(k, k)) < kPivotFloor || std::abs(G(i, i)) < kPivotFloor) {
    out.skipped = true;
    return out;
  }
  const Resolvent mk = minor_resolvent(sample, params, {k});
  const Resolvent mi = minor_resolvent(sample, params, {i});
  if (std::abs(mk.G(i, i)) < kPivotFloor) {
    out.skipped = true;
    return out;
  }
  out.gij_minor = std::abs(G(i, j) - mk.G(i, j) - G(i, k) * G(k, j) / G(k, k));
  out.diag_inverse =
      std::abs(1.0 / G(i, i) - 1.0 / mk.G(i, i) +
               G(i, k) * G(k, i) / (G(i, i) * G(k, k) * mk.G(i, i)));
  Eigen::MatrixXcd A = sample.H.cast<Complex>();
  A.diagonal() -= params.zvec;
  const std::int64_t n = sample.shape().size();
  Complex quad = 0.0;
  for (std::int64_t a = 0; a < n; ++a) {
    if (a == i || A(i, a) == Complex(0.0, 0.0)) continue;
    for (std::int64_t b = 0; b < n; ++b) {
      if (b == i || A(b, i) == Complex(0.0, 0.0)) continue;
      quad += A(i, a) * mi.G(a, b) * A(b, i);
    }
  }
  out.schur_diag = std::abs(1.0 / G(i, i) - A(i, i) + quad);
  Complex row = 0.0;
  for (std::int64_t a = 0; a < n; ++a) {
    if (a == i || A(i, a) == Complex(0.0, 0.0)) continue;
    row += A(i, a) * mi.G(a, j);
  }
  out.row_expansion = std::abs(G(i, j) + G(i, i) * row);
  return out;
}

WardResiduals ward_residual(const Resolvent& r, std::int64_t y) {
  const std::int64_t n = r.G.rows();
  WardResiduals out;
  const double im_gyy = r.G(y, y).imag();
  double gen = 0.0;
  for (std::int64_t x = 0; x < n; ++x)
    gen += r.params.zvec(x).imag() * std::norm(r.G(y, x));
  out.generalized = std::abs(gen - im_gyy);
  if (r.params.is_scalar()) {
    double colsq = 0.0;
    for (std::int64_t x = 0; x < n; ++x) colsq += std::norm(r.G(x, y));
    out.scalar_ward = std::abs(colsq - im_gyy / r.params.eta);
  }
  return out;
}

double triple_norm(const Resolvent& r) {
  const std::int64_t n = r.G.rows();
  double best = 0.0;
  for (std::int64_t y = 0; y < n; ++y) {
    double acc = 0.0;
    for (std::int64_t x = 0; x < n; ++x)
      acc += std::norm(r.G(x, y)) + std::norm(r.G(y, x));
    best = std::max(best, acc);
  }
  return std::sqrt(best);
}

namespace {

// Circular box sum of radius w along one axis of the row index.
void box_filter_rows(Eigen::MatrixXd& P, const TorusShape& shape, int axis,
                     int w) {
  const std::int64_t n = shape.size();
  std::int64_t stride = 1;
  for (int i = shape.dim - 1; i > axis; --i) stride *= shape.side;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(P.rows(), P.cols());
  const int side = shape.side;
  for (std::int64_t x = 0; x < n; ++x) {
    const int c = static_cast<int>((x / stride) % side);
    const std::int64_t base = x - static_cast<std::int64_t>(c) * stride;
    for (int t = -w; t <= w; ++t) {
      int cc = (c + t) % side;
      if (cc < 0) cc += side;
      out.row(x) += P.row(base + static_cast<std::int64_t>(cc) * stride);
    }
  }
  P.swap(out);
}

}  // namespace

PsiField psi_field(const Resolvent& r, const VarianceProfile& profile,
                   double tau) {
  const TorusShape& shape = profile.shape();
  const std::int64_t n = shape.size();
  const int W = profile.band_width();
  const int w = static_cast<int>(std::floor(
      std::pow(static_cast<double>(shape.side), tau) * W));
  if (w > shape.side / 2)
    throw std::invalid_argument("psi_field: window exceeds torus");
  if (2 * w + 1 > shape.side)
    throw std::invalid_argument("psi_field: window exceeds torus");
  Eigen::MatrixXd P(n, n);
  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t b = 0; b < n; ++b)
      P(a, b) = std::norm(r.G(a, b)) + std::norm(r.G(b, a));
  for (int axis = 0; axis < shape.dim; ++axis)
    box_filter_rows(P, shape, axis, w);
  P.transposeInPlace();
  for (int axis = 0; axis < shape.dim; ++axis)
    box_filter_rows(P, shape, axis, w);
  P.transposeInPlace();
  const double scale = std::pow(static_cast<double>(W), -2.0 * shape.dim);
  PsiField field;
  field.tau = tau;
  field.window = w;
  field.psi.resize(n, n);
  for (std::int64_t x = 0; x < n; ++x)
    for (std::int64_t y = x; y < n; ++y) {
      const double v = std::sqrt(profile.entry(x, y) + scale * P(x, y));
      field.psi(x, y) = v;
      field.psi(y, x) = v;  // exact symmetry by construction
    }
  return field;
}

ZcalResult zcal_variables(const BandSample& sample, const Resolvent& full,
                          const Eigen::VectorXcd& M) {
  const TorusShape& shape = sample.shape();
  const std::int64_t n = shape.size();
  const Eigen::MatrixXcd& G = full.G;
  ZcalResult out;
  out.z.resize(n);
  out.defect.resize(n);
  for (std::int64_t x = 0; x < n; ++x) {
    const auto nb = band_neighbors(sample.profile, x);
    const auto k = static_cast<Eigen::Index>(nb.size());
    const Complex gxx = G(x, x);
    if (std::abs(gxx) < kPivotFloor)
      throw std::runtime_error("zcal_variables: vanishing diagonal entry");
    Eigen::VectorXcd gcol(k), grow(k), h(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      gcol(a) = G(nb[static_cast<std::size_t>(a)], x);
      grow(a) = G(x, nb[static_cast<std::size_t>(a)]);
      h(a) = sample.H(x, nb[static_cast<std::size_t>(a)]);
    }
    Complex acc = -sample.H(x, x);
    // sum_{w,v} H_xw H_xv G^(x)_wv with G^(x)_wv = G_wv - G_wx G_xv / G_xx
    Complex hw_g_hv = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) {
      Complex inner = 0.0;
      const std::int64_t wa = nb[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < k; ++b)
        inner += G(wa, nb[static_cast<std::size_t>(b)]) * h(b);
      hw_g_hv += h(a) * inner;
    }
    Complex hgcol = 0.0, hgrow = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) {
      hgcol += h(a) * gcol(a);
      hgrow += h(a) * grow(a);
    }
    acc += hw_g_hv - hgcol * hgrow / gxx;
    // - sum_w s_xw G^(x)_ww
    for (Eigen::Index a = 0; a < k; ++a) {
      const std::int64_t wa = nb[static_cast<std::size_t>(a)];
      const double sxw = sample.profile.entry(x, wa);
      acc -= sxw * (G(wa, wa) - gcol(a) * grow(a) / gxx);
    }
    out.z(x) = acc;
    out.defect(x) = std::abs(G(x, x) - M(x) - M(x) * M(x) * acc);
  }
  out.cming_defect = out.defect.maxCoeff();
  return out;
}

ControlParams ControlParams::theoretical(int W, int dim, double eta,
                                         double tau) {
  ControlParams c;
  c.phi = 1.0 / std::sqrt(std::pow(static_cast<double>(W), dim) * eta);
  c.gamma = 1.0 / std::sqrt(eta);
  c.tau = tau;
  c.mode = Mode::kTheoretical;
  return c;
}

bool ControlParams::satisfies_gm15(int W, int dim, std::int64_t side,
                                   double delta) const {
  const double lo = std::pow(static_cast<double>(W), -0.5 * dim);
  const double hi = std::pow(static_cast<double>(side), -delta);
  return phi >= lo && phi <= hi && gamma >= 1.0;
}

ControlParams empirical_controls(const Resolvent& r,
                                 const Eigen::VectorXcd& M) {
  ControlParams c;
  c.phi = max_deviation(r.G, M);
  c.gamma = triple_norm(r);
  c.mode = ControlParams::Mode::kEmpirical;
  return c;
}

double max_deviation(const Eigen::MatrixXcd& G, const Eigen::VectorXcd& M) {
  const std::int64_t n = G.rows();
  double best = 0.0;
  for (std::int64_t y = 0; y < n; ++y)
    for (std::int64_t x = 0; x < n; ++x) {
      const Complex ref = x == y ? M(x) : Complex(0.0, 0.0);
      best = std::max(best, std::abs(G(x, y) - ref));
    }
  return best;
}

double max_deviation(const Eigen::MatrixXcd& G, Complex m) {
  return max_deviation(G,
                       Eigen::VectorXcd::Constant(G.rows(), m).eval());
}

}  // namespace bandlab
