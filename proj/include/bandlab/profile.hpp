#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "bandlab/torus.hpp"

namespace bandlab {

struct ProfileReport {
  bool band_ok = false;    // s_xy = 0 beyond C_s W and s symmetric
  bool lower_ok = false;   // s_xy >= 0 everywhere, >= c_s W^-d inside c_s W
  double rowsum_slack = 0; // max_x |sum_y s_xy - 1|
  bool within_zeta = false;
};

// The variance kernel S: doubly stochastic up to slack zeta, banded at
// scale W. Periodic profiles are stored as a stencil over displacements,
// general ones as a dense matrix.
class VarianceProfile {
 public:
  enum class Kind { kPeriodicStencil, kGeneralDense };

  // s_xy = (2W+1)^-d on |x-y| <= W; row sums exactly 1.
  static VarianceProfile uniform(const TorusShape& shape, int band_width);

  // Arbitrary symmetric stencil over the box [-radius, radius]^d (row-major,
  // values are s(u)); must be nonnegative and symmetric under u -> -u.
  static VarianceProfile periodic(const TorusShape& shape, int band_width,
                                  std::vector<double> stencil, int radius,
                                  double c_s = 1.0, double C_s = 1.0);

  static VarianceProfile general(const TorusShape& shape, int band_width,
                                 Eigen::MatrixXd dense, double zeta,
                                 double c_s = 1.0, double C_s = 1.0);

  const TorusShape& shape() const { return shape_; }
  int band_width() const { return band_width_; }
  // Support radius: s_xy = 0 whenever dist(x, y) > band_radius().
  int band_radius() const { return radius_; }
  Kind kind() const { return kind_; }
  bool periodic_kind() const { return kind_ == Kind::kPeriodicStencil; }
  double zeta() const { return zeta_; }
  double c_s() const { return c_s_; }
  double C_s() const { return C_s_; }

  double entry(std::int64_t x, std::int64_t y) const;
  double stencil_value(std::int64_t box_index) const {
    return stencil_[static_cast<std::size_t>(box_index)];
  }

  Eigen::MatrixXd dense() const;
  Eigen::VectorXd row_sums() const;

  // Fourier symbol \hat S(p) over all N^d modes (periodic profiles only);
  // real because the stencil is symmetric.
  Eigen::VectorXd fourier_symbol() const;

  // y = S x (stencil convolution for periodic profiles, GEMV otherwise).
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  // Structurally nonzero displacements (periodic): pairs of (box index,
  // flattened index offset owner) are iterated via for_each_offset by users.

  VarianceProfile() = default;  // trivial 1-site profile; construct via factories

 private:
  TorusShape shape_;
  int band_width_ = 1;
  int radius_ = 1;
  Kind kind_ = Kind::kPeriodicStencil;
  std::vector<double> stencil_;  // (2*radius+1)^d, row-major over u+radius
  Eigen::MatrixXd dense_;        // general profiles only
  double zeta_ = 0.0;
  double c_s_ = 1.0;
  double C_s_ = 1.0;
};

ProfileReport check_profile(const VarianceProfile& profile, double c_s,
                            double C_s);

}  // namespace bandlab
