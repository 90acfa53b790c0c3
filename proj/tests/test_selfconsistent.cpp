#include "doctest.h"

#include <cmath>

#include "bandlab/fft.hpp"
#include "bandlab/rng.hpp"
#include "bandlab/selfconsistent.hpp"

using namespace bandlab;

TEST_CASE("semicircle transform") {
  // roots of m^2 + z m + 1 = 0 with Im m > 0, via the quadratic formula
  CHECK(std::abs(msc(Complex(0, 2)) - Complex(0, std::sqrt(2.0) - 1.0)) < 1e-14);
  CHECK(std::abs(msc(Complex(0, 1)) - Complex(0, (std::sqrt(5.0) - 1.0) / 2.0)) <
        1e-14);
  rng::CounterStream u(11);
  for (int t = 0; t < 100; ++t) {
    const Complex z(3.8 * u.uniform01(2 * t) - 1.9,
                    0.01 + 1.99 * u.uniform01(2 * t + 1));
    const Complex m = msc(z);
    CHECK(std::abs(m * m + z * m + 1.0) < 1e-12);
    CHECK(m.imag() > 0.0);
    CHECK(std::abs(m) <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(msc(Complex(0.5, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(msc(Complex(0.5, -1.0)), std::invalid_argument);
}

TEST_CASE("|m| decreases in eta in the bulk") {
  for (double E : {-1.5, 0.0, 0.7}) {
    double prev = 2.0;
    for (double eta = 0.05; eta < 2.0; eta *= 2.0) {
      const double cur = std::abs(msc(Complex(E, eta)));
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("solve_M: scalar Z reproduces m(z) for any doubly stochastic profile") {
  const TorusShape shape(16, 1);
  const Complex z(0.5, 0.5);
  for (int W : {1, 3, 5}) {
    const auto profile = VarianceProfile::uniform(shape, W);
    const auto params = SpectralParams::scalar(shape, z);
    const auto sol = solve_M(profile, params);
    const Complex m = msc(z);
    for (std::int64_t i = 0; i < shape.size(); ++i)
      CHECK(std::abs(sol.M(i) - m) < 1e-12);
    CHECK(sol.residual <= 1e-12);
  }
}

TEST_CASE("solve_M: perturbed z vector") {
  const TorusShape shape(32, 1);
  const auto profile = VarianceProfile::uniform(shape, 4);
  const Complex z(0.5, 0.5);
  Eigen::VectorXcd zvec = Eigen::VectorXcd::Constant(shape.size(), z);
  rng::CounterStream u(3);
  for (std::int64_t i = 0; i < shape.size(); ++i)
    zvec(i) += Complex(0.01 * (2 * u.uniform01(2 * i) - 1),
                       0.01 * u.uniform01(2 * i + 1));
  const auto params = SpectralParams::general(shape, z, zvec);
  const auto sol = solve_M(profile, params, 1e-12);
  CHECK(sol.residual <= 1e-12);
  const Complex m = msc(z);
  double dev = 0.0;
  for (std::int64_t i = 0; i < shape.size(); ++i)
    dev = std::max(dev, std::abs(sol.M(i) - m));
  CHECK(dev <= 5.0 * 0.02);  // max |z_x - z| <= 0.02 here

  // uniqueness: a different admissible initializer lands on the same M
  Eigen::VectorXcd init = Eigen::VectorXcd::Constant(shape.size(), m + Complex(0.03, 0.03));
  const auto sol2 = solve_M(profile, params, 1e-12, 10000, &init);
  CHECK((sol.M - sol2.M).cwiseAbs().maxCoeff() < 1e-11);

  // non-convergence within max_iter signals hypothesis violation
  CHECK_THROWS_AS(solve_M(profile, params, 1e-13, 1), std::runtime_error);
  // hypothesis check: zeta + max|z_x - z| above c0 is rejected
  Eigen::VectorXcd far = zvec;
  far(0) += Complex(0.5, 0.0);
  CHECK_THROWS_AS(solve_M(profile, SpectralParams::general(shape, z, far)),
                  std::invalid_argument);
}

TEST_CASE("stability inverse: norm bound and entry decay") {
  const TorusShape shape(256, 1);
  const auto profile = VarianceProfile::uniform(shape, 16);
  const Complex m = msc(Complex(0.5, 0.5));
  const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(shape.size(), m);

  // default far radius (log N)^2 W exceeds N/2 at this size: no far zone
  const auto rep = stability_inverse(M, profile);
  CHECK(rep.norm_linf <= 10.0);
  CHECK(rep.contraction < 1.0);
  CHECK(rep.far_count == 0);
  CHECK(rep.near_max <= 1.0 / 16.0);  // C_1 W^-d with C_1 = 1 at this z

  // desk-scale decay: beyond 6 band widths the entries are superpolynomially
  // small (values frozen from the dense-solve oracle)
  const auto rep96 = stability_inverse(M, profile, 96.0);
  CHECK(rep96.far_count > 0);
  CHECK(rep96.far_max < 1e-8);
  const auto rep120 = stability_inverse(M, profile, 120.0);
  CHECK(rep120.far_max < 1e-9);

  // singular system: S = I and M = 1 makes 1 - M^2 S vanish
  const TorusShape tiny(4, 1);
  const auto ident = VarianceProfile::general(
      tiny, 0, Eigen::MatrixXd::Identity(4, 4), 0.0);
  CHECK_THROWS_AS(
      stability_inverse(Eigen::VectorXcd::Ones(4), ident),
      std::runtime_error);
}

TEST_CASE("stability inverse: circulant FFT diagonalization matches dense") {
  // scalar M makes 1 - m^2 S circulant: invert per Fourier mode
  const TorusShape shape(128, 1);
  const auto profile = VarianceProfile::uniform(shape, 8);
  const Complex m = msc(Complex(0.5, 0.5));
  const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(shape.size(), m);
  const auto rep = stability_inverse(M, profile);

  const Eigen::VectorXd symbol = profile.fourier_symbol();
  Eigen::VectorXcd modes(shape.size());
  for (std::int64_t p = 0; p < shape.size(); ++p)
    modes(p) = 1.0 / (1.0 - m * m * symbol(p));
  TorusFFT fft(shape);
  const Eigen::VectorXcd row0 = fft.inverse(modes);
  double rel = 0.0;
  const double scale = rep.inverse.cwiseAbs().maxCoeff();
  for (std::int64_t y = 0; y < shape.size(); ++y)
    rel = std::max(rel, std::abs(rep.inverse(0, y) - row0(y)) / scale);
  CHECK(rel < 1e-10);
}

TEST_CASE("theta kernel: row sums, positivity, fft vs dense") {
  const TorusShape shape(128, 1);
  const auto profile = VarianceProfile::uniform(shape, 8);
  const Complex m = msc(Complex(0.5, 0.05));
  const double target = 1.0 / (1.0 - std::norm(m));

  const auto fft = theta_kernel(profile, m, ThetaMode::kFft);
  const auto dense = theta_kernel(profile, m, ThetaMode::kDense);
  const Eigen::MatrixXd& F = fft.matrix();
  const Eigen::MatrixXd& D = dense.matrix();

  for (std::int64_t x = 0; x < shape.size(); x += 17) {
    CHECK(F.row(x).sum() == doctest::Approx(target).epsilon(1e-10));
    CHECK(D.row(x).sum() == doctest::Approx(target).epsilon(1e-10));
  }
  CHECK(F.minCoeff() > -1e-12);
  const double scale = D.cwiseAbs().maxCoeff();
  CHECK((F - D).cwiseAbs().maxCoeff() / scale < 1e-10);

  // translation invariance: Theta_xy = Theta_{0,[y-x]}
  for (std::int64_t x : {3L, 77L})
    for (std::int64_t y : {0L, 50L, 127L}) {
      const std::int64_t u = ((y - x) % 128 + 128) % 128;
      CHECK(fft.entry(x, y) == doctest::Approx(fft.entry(0, u)).epsilon(1e-12));
    }

  CHECK_THROWS_AS(theta_kernel(profile, Complex(1.0, 0.0), ThetaMode::kFft),
                  std::invalid_argument);
}

TEST_CASE("theta kernel symmetric in 2d") {
  const TorusShape shape(12, 2);
  const auto profile = VarianceProfile::uniform(shape, 2);
  const Complex m = msc(Complex(0.0, 0.2));
  const auto theta = theta_kernel(profile, m, ThetaMode::kFft);
  const Eigen::MatrixXd& T = theta.matrix();
  CHECK((T - T.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}
