#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bandlab/resolvent.hpp"

namespace bandlab {

// T_xy = sum_w s_xw |G_wy|^2
Eigen::MatrixXd t_matrix(const Resolvent& r, const VarianceProfile& profile);
Eigen::VectorXd t_column(const Resolvent& r, const VarianceProfile& profile,
                         std::int64_t y);

// max_xy |T_xy - sum_a [(1 - S|M|^2)^-1 S]_xa (|G_ay|^2 - |M_a|^2 T_ay)|;
// an exact algebraic identity, must vanish to solver tolerance.
double t_equation_residual(const Eigen::MatrixXd& T, const Resolvent& r,
                           const Eigen::VectorXcd& M,
                           const VarianceProfile& profile);

// T0_xy = [(1 - S|M|^2)^-1 S]_xy (|G_yy|^2 - |M_y|^2 T_yy) for all x at
// fixed y.
Eigen::VectorXd t_zero_column(const Resolvent& r, const Eigen::VectorXcd& M,
                              const VarianceProfile& profile, std::int64_t y);
double t_zero_term(const Resolvent& r, const Eigen::VectorXcd& M,
                   const VarianceProfile& profile, std::int64_t x,
                   std::int64_t y);

// Fraction of (x, y) pairs with |T0_xy - |m|^2 Theta_xy| <= slack * Phi *
// Theta_xy.
double t_zero_theta_agreement(const Eigen::MatrixXd& T0,
                              const ThetaKernel& theta, Complex m, double phi,
                              double slack);

struct ProfileFitRow {
  int distance = 0;
  double envelope = 0.0;  // max entry at this distance
  double bound = 0.0;     // 1/(N^d eta) + <r>^(2-d) / W^2
  double ratio = 0.0;
};

struct ProfileFit {
  double fitted_C = 0.0;  // max over entries of value / bound
  double c1 = 0.0;        // least-squares coefficients of the two terms
  double c2 = 0.0;
  std::vector<ProfileFitRow> rows;
};

// Distance-binned envelope of a nonnegative kernel against the diffusion
// bound C1/(N^d eta) + C2 <r>^(2-d)/W^2, with <r> = 1 + r.
ProfileFit profile_bound_check(const Eigen::MatrixXd& kernel,
                               const TorusShape& shape, int W, double eta);

}  // namespace bandlab
