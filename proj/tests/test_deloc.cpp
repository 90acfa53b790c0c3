#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "bandlab/deloc.hpp"

using namespace bandlab;

namespace {

BandSample zero_sample(const VarianceProfile& profile) {
  BandSample s;
  s.profile = profile;
  s.H = Eigen::MatrixXd::Zero(profile.shape().size(), profile.shape().size());
  return s;
}

}  // namespace

TEST_CASE("eigendecompose: basics and oracles") {
  {
    const auto profile = VarianceProfile::uniform(TorusShape(6, 1), 1);
    const auto spec = eigendecompose(zero_sample(profile));
    CHECK(spec.eigenvalues.cwiseAbs().maxCoeff() == 0.0);
    const Eigen::MatrixXd gram =
        spec.eigenvectors.transpose() * spec.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <
          1e-12);
  }
  {
    // 2x2 closed form
    const auto profile = VarianceProfile::uniform(TorusShape(2, 1), 0);
    auto s = zero_sample(profile);
    s.H << 0.7, 0.3, 0.3, -0.4;
    const auto spec = eigendecompose(s);
    const double mean = (0.7 - 0.4) / 2.0;
    const double disc = std::sqrt(std::pow((0.7 + 0.4) / 2.0, 2) + 0.09);
    CHECK(spec.eigenvalues(0) == doctest::Approx(mean - disc).epsilon(1e-12));
    CHECK(spec.eigenvalues(1) == doctest::Approx(mean + disc).epsilon(1e-12));
  }
  {
    const auto s = sample(VarianceProfile::uniform(TorusShape(32, 1), 4),
                          EntryDistribution::kGaussian, 2);
    const auto spec = eigendecompose(s);
    CHECK(spec.eigenvalues.sum() ==
          doctest::Approx(s.H.trace()).epsilon(1e-10));
    CHECK(reconstruction_defect(s, spec) < 1e-7);
    // sign convention: first entry above threshold is positive
    for (std::int64_t a = 0; a < 32; ++a) {
      for (std::int64_t x = 0; x < 32; ++x) {
        if (std::abs(spec.eigenvectors(x, a)) > 1e-12) {
          CHECK(spec.eigenvectors(x, a) > 0.0);
          break;
        }
      }
    }
    // resolvent-vs-spectral cross-check
    const Complex z(0.5, 0.5);
    const auto r = resolvent(s, SpectralParams::scalar(s.shape(), z));
    Eigen::MatrixXcd Gs = Eigen::MatrixXcd::Zero(32, 32);
    for (std::int64_t a = 0; a < 32; ++a) {
      const Eigen::VectorXd u = spec.eigenvectors.col(a);
      Gs += (u * u.transpose()).cast<Complex>() /
            (Complex(spec.eigenvalues(a), 0) - z);
    }
    CHECK((Gs - r.G).cwiseAbs().maxCoeff() < 1e-7);
  }
  const auto big = VarianceProfile::uniform(TorusShape(70, 2), 2);
  CHECK_THROWS_AS(eigendecompose(zero_sample(big)), std::invalid_argument);
}

TEST_CASE("localization fraction on synthetic spectra") {
  const TorusShape shape(16, 1);
  const std::int64_t n = shape.size();
  const int l = 4;

  // standard basis: every vector is localized, all lambdas in the bulk
  SpectralData basis;
  basis.eigenvalues = Eigen::VectorXd::Zero(n);
  basis.eigenvectors = Eigen::MatrixXd::Identity(n, n);
  CHECK(localization_fraction(basis, shape, 0.1, 0.5, l) == 1.0);

  // flat vector: sum_x |u(x)| ||P_{x,l} u|| = N^(1/2) sqrt(1 - (2l-1)/N),
  // of order N^(1/2) >> eps, so flat vectors never count as localized
  SpectralData flat;
  flat.eigenvalues = Eigen::VectorXd::Constant(n, 3.0);  // outside bulk
  flat.eigenvalues(0) = 0.0;
  flat.eigenvectors = Eigen::MatrixXd::Identity(n, n);
  flat.eigenvectors.col(0) =
      Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  const double s_flat = std::sqrt(static_cast<double>(n)) *
                        std::sqrt(1.0 - (2.0 * l - 1.0) / n);
  CHECK(localization_fraction(flat, shape, s_flat - 0.01, 0.5, l) == 0.0);
  CHECK(localization_fraction(flat, shape, s_flat + 0.01, 0.5, l) ==
        doctest::Approx(1.0 / n));

  // monotone in eps on a random spectrum
  const auto s = sample(VarianceProfile::uniform(shape, 2),
                        EntryDistribution::kGaussian, 6);
  const auto spec = eigendecompose(s);
  double prev = -1.0;
  for (double eps : {0.05, 0.2, 0.5, 1.0, 2.0}) {
    const double f = localization_fraction(spec, shape, eps, 0.5, l);
    CHECK(f >= prev);
    prev = f;
  }
  CHECK_THROWS_AS(localization_fraction(spec, shape, 0.1, 0.5, 9),
                  std::invalid_argument);
}

TEST_CASE("sup norm statistic") {
  const TorusShape shape(16, 1);
  const std::int64_t n = shape.size();
  SpectralData flat;
  flat.eigenvalues = Eigen::VectorXd::Zero(n);
  flat.eigenvectors = Eigen::MatrixXd::Identity(n, n);
  flat.eigenvectors.col(0) =
      Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  // identity columns dominate: max over bulk is 1
  CHECK(*sup_norm_stat(flat, 0.5) == 1.0);
  // restrict the bulk to the flat column only
  flat.eigenvalues.tail(n - 1).array() = 3.0;
  CHECK(*sup_norm_stat(flat, 0.5) ==
        doctest::Approx(1.0 / std::sqrt(static_cast<double>(n))));
  flat.eigenvalues.array() = 3.0;
  CHECK_FALSE(sup_norm_stat(flat, 0.5).has_value());
}

TEST_CASE("mass profile") {
  const TorusShape shape(32, 1);
  const auto profile = VarianceProfile::uniform(shape, 4);
  const Complex z(0.5, 0.25);
  const Complex m = msc(z);

  // H = 0: all mass sits at x = y
  const auto r0 = resolvent(zero_sample(profile),
                            SpectralParams::scalar(shape, z));
  for (int l : {0, 3, 9})
    CHECK(mass_profile(r0, m, 5, l) ==
          doctest::Approx(z.imag() / m.imag() / std::norm(z)).epsilon(1e-12));

  const auto s = sample(profile, EntryDistribution::kGaussian, 44);
  const auto r = resolvent(s, SpectralParams::scalar(shape, z));
  double prev = 0.0;
  for (int l = 0; l <= 16; ++l) {
    const double cur = mass_profile(r, m, 7, l);
    CHECK(cur >= prev - 1e-14);
    prev = cur;
  }
  // full window reduces to Im G_yy / Im m by the Ward identity
  CHECK(mass_profile(r, m, 7, 16) ==
        doctest::Approx(r.G(7, 7).imag() / m.imag()).epsilon(1e-10));
}

TEST_CASE("bulk sup norms at wide band width stay near N^(-1/2)") {
  const TorusShape shape(512, 1);
  const auto profile = VarianceProfile::uniform(shape, 128);
  std::vector<double> sups;
  for (int t = 0; t < 10; ++t) {
    const auto s = sample(profile, EntryDistribution::kGaussian,
                          700 + static_cast<std::uint64_t>(t));
    const auto spec = eigendecompose(s);
    sups.push_back(*sup_norm_stat(spec, 0.5));
  }
  std::sort(sups.begin(), sups.end());
  const double median = 0.5 * (sups[4] + sups[5]);
  CHECK(median <= std::pow(512.0, -0.25));  // N^(-1/2) * N^(1/4) slack
}

TEST_CASE("mass profile spreads in 2d at the diffusive scale") {
  // At this size the diffusion length W / sqrt(alpha eta) ~ 11 already
  // reaches l = N/4, so the window there holds ~0.64 of the Ward mass; the
  // l = N/8 window stays under one half (both medians frozen from runs of
  // this computation and an independent numpy oracle).
  const int N = 32, W = 8;
  const TorusShape shape(N, 2);
  const auto profile = VarianceProfile::uniform(shape, W);
  const double eta = 4.0 * W * W / (static_cast<double>(N) * N);
  const Complex z(0.5, eta);
  const Complex m = msc(z);
  std::vector<double> small, quarter;
  for (int t = 0; t < 20; ++t) {
    const auto s = sample(profile, EntryDistribution::kGaussian,
                          800 + static_cast<std::uint64_t>(t));
    const auto r = resolvent(s, SpectralParams::scalar(shape, z));
    small.push_back(mass_profile(r, m, 0, N / 8));
    quarter.push_back(mass_profile(r, m, 0, N / 4));
  }
  std::sort(small.begin(), small.end());
  std::sort(quarter.begin(), quarter.end());
  CHECK(0.5 * (small[9] + small[10]) <= 0.5);
  CHECK(quarter.back() < 0.9);  // no quarter-ball holds the full mass
}

TEST_CASE("local law ratio and domain") {
  const TorusShape shape(16, 1);
  const Complex z(0.5, 0.5);
  // zero profile: M = -1/z reproduces G exactly and the ratio vanishes
  const auto zp =
      VarianceProfile::general(shape, 1, Eigen::MatrixXd::Zero(16, 16), 0.0);
  const auto r0 = resolvent(zero_sample(zp), SpectralParams::scalar(shape, z));
  CHECK(local_law_check(r0, -1.0 / z, 4) == 0.0);

  const auto s = sample(VarianceProfile::uniform(shape, 4),
                        EntryDistribution::kGaussian, 3);
  const auto low = resolvent(
      s, SpectralParams::scalar(shape, Complex(0.5, 0.01)));
  CHECK_THROWS_AS(local_law_check(low, msc(Complex(0.5, 0.01)), 4),
                  std::domain_error);
}

TEST_CASE("phi2 fixed point arithmetic") {
  const auto fp = phi2_fixed_point(6, 2, 0.1);
  CHECK(std::abs(fp.value - fp.closed_form) <= 1e-12);
  CHECK(fp.closed_form ==
        doctest::Approx((1.0 / 6.0) / (1.0 - std::pow(6.0, -0.05))));
  // geometric convergence from phi0 = 1 takes O(delta^-1 log) steps
  CHECK(fp.steps > 10);
  CHECK(fp.steps < 2000);
}

TEST_CASE("linear regression") {
  std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  std::vector<double> y{1.0, 1.5, 2.0, 2.5};
  const auto reg = linear_regression(x, y);
  CHECK(reg.slope == doctest::Approx(0.5));
  CHECK(reg.intercept == doctest::Approx(1.0));
  CHECK_THROWS_AS(linear_regression({1.0}, {2.0}), std::invalid_argument);
}
