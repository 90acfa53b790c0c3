#include "doctest.h"

#include <cmath>

#include "bandlab/fluct.hpp"

using namespace bandlab;

namespace {

BandSample zero_sample(const VarianceProfile& profile) {
  BandSample s;
  s.profile = profile;
  s.H = Eigen::MatrixXd::Zero(profile.shape().size(), profile.shape().size());
  return s;
}

}  // namespace

TEST_CASE("fluct_stat: closed form for H = 0 and sign flip") {
  const TorusShape shape(24, 1);
  const auto profile = VarianceProfile::uniform(shape, 3);
  const auto s0 = zero_sample(profile);
  const Complex z(0.5, 0.5);
  const auto r0 = resolvent(s0, SpectralParams::scalar(shape, z));
  const Complex m = msc(z);
  const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(24, m);
  const Eigen::VectorXd t_col = t_column(r0, profile, 0);
  const auto controls = ControlParams::theoretical(3, 1, 0.5);

  const auto stat = fluct_stat(r0, M, t_col, b_ones(shape), 0, controls);
  // F = (1 - |m|^2) / |z|^2 since row sums of S are 1
  CHECK(stat.value ==
        doctest::Approx((1.0 - std::norm(m)) / std::norm(z)).epsilon(1e-12));

  const auto zero =
      fluct_stat(r0, M, t_col, Eigen::VectorXd::Zero(24), 0, controls);
  CHECK(zero.value == 0.0);

  const auto s = sample(profile, EntryDistribution::kGaussian, 4);
  const auto r = resolvent(s, SpectralParams::scalar(shape, z));
  const Eigen::VectorXd tc = t_column(r, profile, 5);
  const Eigen::VectorXd b = b_cosine(shape);
  const auto plus = fluct_stat(r, M, tc, b, 5, controls);
  const auto minus = fluct_stat(r, M, tc, (-b).eval(), 5, controls);
  CHECK(plus.value == -minus.value);  // exact sign flip

  // bound bookkeeping
  const double phi2 = controls.phi * controls.phi;
  CHECK(stat.bound_new ==
        doctest::Approx(controls.gamma * controls.gamma * phi2 + 1.0));
  CHECK(stat.bound_old ==
        doctest::Approx(std::sqrt(24.0) * phi2 + 24.0 * phi2 * phi2));
}

TEST_CASE("b profiles") {
  const TorusShape shape(16, 1);
  CHECK(b_ones(shape).sum() == 16.0);
  const Eigen::VectorXd b = b_cosine(shape);
  CHECK(b(0) == 1.0);
  CHECK(b.cwiseAbs().maxCoeff() == 1.0);
  CHECK(std::abs(b.sum()) < 1e-12);
  // first-coordinate dependence in 2d
  const TorusShape sq(8, 2);
  const Eigen::VectorXd b2 = b_cosine(sq);
  for (std::int64_t x = 0; x < 8; ++x)
    for (std::int64_t y = 1; y < 8; ++y)
      CHECK(b2(8 * x) == b2(8 * x + y));
}

TEST_CASE("rank-2 resample update matches a full re-solve") {
  const auto profile = VarianceProfile::uniform(TorusShape(12, 1), 2);
  const auto s = sample(profile, EntryDistribution::kGaussian, 19);
  const Complex z(0.5, 0.5);
  const auto params = SpectralParams::scalar(profile.shape(), z);
  const auto full = resolvent(s, params);
  const std::int64_t x = 3, ystar = 9;

  for (std::uint64_t rix = 0; rix < 5; ++rix) {
    Eigen::VectorXd new_row;
    resample_row(s, x, rix, &new_row);
    BandSample mutated = s;
    mutated.H.row(x) = new_row.transpose();
    mutated.H.col(x) = new_row;
    const auto direct = resolvent(mutated, params);
    // one-sample MC with this resample index equals |G'_{x,ystar}|^2
    const double est = conditional_sqmod_mc(s, full, x, ystar, 1, rix);
    CHECK(est == doctest::Approx(std::norm(direct.G(x, ystar))).epsilon(1e-10));
  }
}

TEST_CASE("conditional expectation against a quadrature oracle (N = 2)") {
  // profile with zero diagonal: only H_01 is random, so E_0 |G_01|^2 is a
  // one-dimensional Gaussian integral
  const TorusShape shape(2, 1);
  Eigen::MatrixXd S(2, 2);
  S << 0.0, 1.0, 1.0, 0.0;
  const auto profile = VarianceProfile::general(shape, 1, S, 0.0);
  const auto s = sample(profile, EntryDistribution::kGaussian, 123);
  const Complex z(0.3, 0.6);
  const auto full = resolvent(s, SpectralParams::scalar(shape, z));

  // quadrature: integrand h^2 / |z^2 - h^2|^2 against the standard normal
  const int K = 40000;
  const double lo = -10.0, hi = 10.0;
  const double dh = (hi - lo) / K;
  double quad = 0.0;
  for (int i = 0; i <= K; ++i) {
    const double h = lo + i * dh;
    const double weight = (i == 0 || i == K) ? 0.5 : 1.0;
    const double density =
        std::exp(-0.5 * h * h) / std::sqrt(2.0 * M_PI);
    quad += weight * density * h * h / std::norm(z * z - h * h) * dh;
  }

  const double est1 = conditional_sqmod_mc(s, full, 0, 1, 4000, 0);
  const double est2 = conditional_sqmod_mc(s, full, 0, 1, 4000, 4000);
  // disjoint halves agree with the oracle within a generous MC tolerance
  CHECK(std::abs(est1 - quad) < 0.05 * quad);
  CHECK(std::abs(est2 - quad) < 0.05 * quad);
}

TEST_CASE("split P + Q reassembles F and stays within the bound") {
  const int N = 64, W = 8;
  const double eta = 4.0 * W * W / (static_cast<double>(N) * N);
  const TorusShape shape(N, 1);
  const auto profile = VarianceProfile::uniform(shape, W);
  const Complex z(0.5, eta);
  const Complex m = msc(z);
  const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(N, m);
  const Eigen::VectorXd b = b_ones(shape);
  const auto controls = ControlParams::theoretical(W, 1, eta);
  const double slack = std::pow(static_cast<double>(N), 0.2);
  const double bound = slack * (controls.gamma * controls.gamma *
                                    controls.phi * controls.phi +
                                1.0);
  int ok_p = 0, ok_q = 0;
  const int trials = 10;
  for (int t = 0; t < trials; ++t) {
    const auto s = sample(profile, EntryDistribution::kGaussian,
                          500 + static_cast<std::uint64_t>(t));
    const auto full = resolvent(s, SpectralParams::scalar(shape, z));
    const Eigen::VectorXd t_col = t_column(full, profile, 0);
    const auto pq = split_pq(s, full, M, t_col, b, 0, 32);
    // exact reassembly of the off-diagonal sum
    double f = 0.0;
    for (std::int64_t x = 1; x < N; ++x)
      f += b(x) * (std::norm(full.G(x, 0)) - std::norm(m) * t_col(x));
    CHECK(pq.f_offdiag == doctest::Approx(f).epsilon(1e-12));
    CHECK(pq.p_part + pq.q_part == doctest::Approx(pq.f_offdiag).epsilon(1e-12));
    if (std::abs(pq.p_part) <= bound) ++ok_p;
    if (std::abs(pq.q_part) <= bound) ++ok_q;
  }
  CHECK(ok_p >= 9);
  CHECK(ok_q >= 9);
}
