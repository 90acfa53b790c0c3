#include "doctest.h"

#include <cmath>

#include "bandlab/tequation.hpp"

using namespace bandlab;

namespace {

BandSample zero_sample(const VarianceProfile& profile) {
  BandSample s;
  s.profile = profile;
  s.H = Eigen::MatrixXd::Zero(profile.shape().size(), profile.shape().size());
  return s;
}

}  // namespace

TEST_CASE("t matrix: closed form for H = 0 and column sums") {
  const TorusShape shape(16, 1);
  const auto profile = VarianceProfile::uniform(shape, 2);
  const auto s0 = zero_sample(profile);
  const Complex z(0.5, 0.5);
  const auto r0 = resolvent(s0, SpectralParams::scalar(shape, z));
  const Eigen::MatrixXd T0 = t_matrix(r0, profile);
  for (std::int64_t x = 0; x < 16; ++x)
    for (std::int64_t y = 0; y < 16; ++y)
      CHECK(T0(x, y) ==
            doctest::Approx(profile.entry(x, y) / std::norm(z)).epsilon(1e-12));

  const auto s = sample(VarianceProfile::uniform(TorusShape(64, 1), 8),
                        EntryDistribution::kGaussian, 3);
  const auto r = resolvent(s, SpectralParams::scalar(s.shape(), z));
  const Eigen::MatrixXd T = t_matrix(r, s.profile);
  CHECK(T.minCoeff() >= 0.0);
  // Ward composed with doubly stochastic S: sum_x T_xy = Im G_yy / eta
  for (std::int64_t y = 0; y < 64; y += 11) {
    const double target = r.G(y, y).imag() / 0.5;
    CHECK(T.col(y).sum() == doctest::Approx(target).epsilon(1e-9));
  }
  // column accessor agrees with the full matrix
  const Eigen::VectorXd col = t_column(r, s.profile, 7);
  CHECK((col - T.col(7)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("t equation is an exact identity") {
  const Complex z(0.5, 0.5);
  const auto s = sample(VarianceProfile::uniform(TorusShape(64, 1), 8),
                        EntryDistribution::kGaussian, 11);
  const auto r = resolvent(s, SpectralParams::scalar(s.shape(), z));
  const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(64, msc(z));
  const Eigen::MatrixXd T = t_matrix(r, s.profile);
  CHECK(t_equation_residual(T, r, M, s.profile) < 1e-8);

  // generalized Z as well: the identity is algebra, not probability
  Eigen::VectorXcd zvec(64);
  for (std::int64_t x = 0; x < 64; ++x)
    zvec(x) = Complex(0.5, x % 2 ? 0.5 : 0.55);
  const auto rg =
      resolvent(s, SpectralParams::general(s.shape(), z, zvec));
  const auto sol = solve_M(s.profile, rg.params);
  const Eigen::MatrixXd Tg = t_matrix(rg, s.profile);
  CHECK(t_equation_residual(Tg, rg, sol.M, s.profile) < 1e-8);
}

TEST_CASE("diagonal-isolated T0 recomposes T") {
  const Complex z(0.5, 0.25);
  const auto s = sample(VarianceProfile::uniform(TorusShape(48, 1), 6),
                        EntryDistribution::kGaussian, 29);
  const auto r = resolvent(s, SpectralParams::scalar(s.shape(), z));
  const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(48, msc(z));
  const Eigen::MatrixXd T = t_matrix(r, s.profile);
  const Eigen::MatrixXd S = s.profile.dense();
  Eigen::MatrixXd m2 = M.array().abs2().matrix().asDiagonal();
  Eigen::MatrixXd A = -S * m2;
  A.diagonal().array() += 1.0;
  const Eigen::MatrixXd K = A.partialPivLu().solve(S);

  const auto theta = theta_kernel(s.profile, msc(z), ThetaMode::kFft);
  const double theta_rowsum = 1.0 / (1.0 - std::norm(msc(z)));
  for (std::int64_t y = 0; y < 48; y += 13) {
    const Eigen::VectorXd t0 = t_zero_column(r, M, s.profile, y);
    // column sum of the kernel equals the Theta row sum (symmetric kernel)
    const double source = std::norm(r.G(y, y)) - std::norm(M(y)) * T(y, y);
    CHECK(t0.sum() == doctest::Approx(theta_rowsum * source).epsilon(1e-9));
    CHECK(theta.row0().sum() == doctest::Approx(theta_rowsum).epsilon(1e-10));
    for (std::int64_t x = 0; x < 48; x += 7) {
      double recompose = t0(x);
      for (std::int64_t a = 0; a < 48; ++a) {
        if (a == y) continue;
        recompose += K(x, a) * (std::norm(r.G(a, y)) -
                                std::norm(M(a)) * T(a, y));
      }
      CHECK(recompose == doctest::Approx(T(x, y)).epsilon(1e-8));
      CHECK(t_zero_term(r, M, s.profile, x, y) ==
            doctest::Approx(t0(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("t0 closed form for H = 0") {
  const TorusShape shape(16, 1);
  const auto profile = VarianceProfile::uniform(shape, 2);
  const auto s0 = zero_sample(profile);
  const Complex z(0.5, 0.5);
  const auto r0 = resolvent(s0, SpectralParams::scalar(shape, z));
  const Complex m = msc(z);
  const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(16, m);
  const Eigen::VectorXd t0 = t_zero_column(r0, M, profile, 0);
  // source = |G_yy|^2 - |m|^2 T_yy with G = -I/z and T = S/|z|^2
  const double source = (1.0 - std::norm(m) * profile.entry(0, 0)) / std::norm(z);
  // kernel column solves (1 - S|m|^2) k = S e_0
  const Eigen::MatrixXd S = profile.dense();
  Eigen::MatrixXd A = -std::norm(m) * S;
  A.diagonal().array() += 1.0;
  const Eigen::VectorXd k = A.partialPivLu().solve(S.col(0));
  for (std::int64_t x = 0; x < 16; ++x)
    CHECK(t0(x) == doctest::Approx(k(x) * source).epsilon(1e-12));
}

TEST_CASE("t0 tracks |m|^2 Theta on a desk grid") {
  const int N = 512, W = 32;
  const double eta = 0.125;
  const Complex z(0.5, eta);
  const auto profile = VarianceProfile::uniform(TorusShape(N, 1), W);
  const auto s = sample(profile, EntryDistribution::kGaussian, 8);
  const auto r = resolvent(s, SpectralParams::scalar(s.shape(), z));
  const Complex m = msc(z);
  const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(N, m);
  const auto theta = theta_kernel(profile, m, ThetaMode::kFft);
  const auto controls = empirical_controls(r, M);

  Eigen::MatrixXd T0(N, N);
  const Eigen::MatrixXd S = profile.dense();
  Eigen::MatrixXd A = -std::norm(m) * S;
  A.diagonal().array() += 1.0;
  const Eigen::MatrixXd K = A.partialPivLu().solve(S);
  const Eigen::MatrixXd T = t_matrix(r, profile);
  for (std::int64_t y = 0; y < N; ++y) {
    const double source = std::norm(r.G(y, y)) - std::norm(m) * T(y, y);
    T0.col(y) = K.col(y) * source;
  }
  const double slack = std::pow(static_cast<double>(N), 0.2);
  const double agree =
      t_zero_theta_agreement(T0, theta, m, controls.phi, slack);
  CHECK(agree >= 0.9);
}

TEST_CASE("profile bound check") {
  // deterministic Theta satisfies the diffusion bound with a small constant
  const TorusShape shape(64, 1);
  const int W = 8;
  const double eta = 0.05;
  const auto profile = VarianceProfile::uniform(shape, W);
  const Complex m = msc(Complex(0.5, eta));
  const auto theta = theta_kernel(profile, m, ThetaMode::kFft);
  const auto fit = profile_bound_check(theta.matrix(), shape, W, eta);
  CHECK(fit.fitted_C <= 10.0);
  CHECK(fit.rows.size() == 33);  // distances 0..32
  for (const auto& row : fit.rows) CHECK(row.ratio <= fit.fitted_C + 1e-12);

  // averaged T over trials stays within a factor 10 of the bound (d = 1 and
  // d = 2, where the distance trend reverses)
  for (int dcase = 1; dcase <= 2; ++dcase) {
    const int N = dcase == 1 ? 64 : 24;
    const int Wc = dcase == 1 ? 8 : 4;
    const double etac = 0.1;
    const TorusShape sh(N, dcase);
    const auto prof = VarianceProfile::uniform(sh, Wc);
    const Complex zc(0.5, etac);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(sh.size(), sh.size());
    const int trials = 10;
    for (int t = 0; t < trials; ++t) {
      const auto st = sample(prof, EntryDistribution::kGaussian,
                             100 + static_cast<std::uint64_t>(t));
      const auto rt = resolvent(st, SpectralParams::scalar(sh, zc));
      acc += t_matrix(rt, prof);
    }
    acc /= static_cast<double>(trials);
    const auto fitT = profile_bound_check(acc, sh, Wc, etac);
    CHECK(fitT.fitted_C <= 10.0);
  }

  // a single distance bin cannot be fitted
  const auto tiny = VarianceProfile::uniform(TorusShape(1, 1), 0);
  CHECK_THROWS_AS(
      profile_bound_check(Eigen::MatrixXd::Ones(1, 1), tiny.shape(), 1, 0.5),
      std::invalid_argument);
}
