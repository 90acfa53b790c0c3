#pragma once

#include <Eigen/Dense>
#include <complex>

#include "bandlab/profile.hpp"

namespace bandlab {

using Complex = std::complex<double>;

// Stieltjes transform of the semicircle density: the root of
// m^2 + z m + 1 = 0 in the upper half plane. Requires Im z > 0.
Complex msc(Complex z);

// Diagonal spectral parameter Z = diag(z_x) together with the scalar
// reference point z.
struct SpectralParams {
  TorusShape shape;
  Complex z;             // reference point
  Eigen::VectorXcd zvec; // per-site parameters, Im z_x > 0
  double eta = 0.0;      // Im z
  double kappa = 0.5;    // bulk margin |Re z| <= 2 - kappa

  static SpectralParams scalar(const TorusShape& shape, Complex z);
  static SpectralParams general(const TorusShape& shape, Complex z_ref,
                                Eigen::VectorXcd zvec);

  bool is_scalar() const;
  double max_deviation_from_z() const;  // max_x |z_x - z|
};

struct MSolution {
  Eigen::VectorXcd M;
  double residual = 0.0;  // sup_x |M_x^-1 + z_x + (S M)_x|
  int iterations = 0;
};

// Damped fixed point for M_x^-1 = -z_x - (S M)_x, initialized at m(z).
// Throws on non-convergence or if the iterate leaves the upper half plane.
MSolution solve_M(const VarianceProfile& profile, const SpectralParams& params,
                  double tol = 1e-12, int max_iter = 10000,
                  const Eigen::VectorXcd* init = nullptr, double c0 = 0.1);

struct StabilityReport {
  Eigen::MatrixXcd inverse;     // (1 - M^2 S)^-1
  double norm_linf = 0.0;       // l^inf -> l^inf operator norm
  double contraction = 0.0;     // ||M^2 S||_{inf->inf}; < 1 guarantees Neumann
  double near_max = 0.0;        // max |entry - delta| at dist <= far_radius
  double far_max = 0.0;         // max |entry| beyond far_radius (0 if none)
  std::int64_t far_count = 0;
  double far_radius = 0.0;
};

// Dense inverse of (1 - M^2 S) with the entry-decay split at far_radius
// (default (log N)^2 W). Throws if the system is numerically singular.
StabilityReport stability_inverse(const Eigen::VectorXcd& M,
                                  const VarianceProfile& profile,
                                  double far_radius = -1.0);

enum class ThetaMode { kFft, kDense };

// Theta = (1 - |m|^2 S)^-1 S; nonnegative, translation invariant for
// periodic profiles. Row sums equal 1/(1 - |m|^2) when S is doubly
// stochastic.
class ThetaKernel {
 public:
  static ThetaKernel circulant(const TorusShape& shape, Eigen::VectorXd row0);
  static ThetaKernel dense(const TorusShape& shape, Eigen::MatrixXd full);

  double entry(std::int64_t x, std::int64_t y) const;
  const Eigen::MatrixXd& matrix() const;  // materialized on demand
  const TorusShape& shape() const { return shape_; }
  bool is_circulant() const { return circulant_; }
  const Eigen::VectorXd& row0() const { return row0_; }

 private:
  TorusShape shape_;
  bool circulant_ = false;
  Eigen::VectorXd row0_;
  mutable Eigen::MatrixXd full_;
  mutable bool have_full_ = false;
};

ThetaKernel theta_kernel(const VarianceProfile& profile, Complex m,
                         ThetaMode mode);

}  // namespace bandlab
