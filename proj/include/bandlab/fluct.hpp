#pragma once

#include <Eigen/Dense>

#include "bandlab/resolvent.hpp"
#include "bandlab/tequation.hpp"

namespace bandlab {

struct FluctStat {
  double value = 0.0;  // F = sum_x b_x (|G_{x,ystar}|^2 - |M_x|^2 T_{x,ystar})
  std::int64_t y_star = 0;
  ControlParams controls;
  double bound_new = 0.0;  // Gamma^2 Phi^2 + 1
  double bound_old = 0.0;  // N^(d/2) Phi^2 + N^d Phi^4
};

FluctStat fluct_stat(const Resolvent& r, const Eigen::VectorXcd& M,
                     const Eigen::VectorXd& t_col, const Eigen::VectorXd& b,
                     std::int64_t y_star, const ControlParams& controls);

// Coefficient profiles used in the experiments; ||b||_inf = 1.
Eigen::VectorXd b_ones(const TorusShape& shape);
Eigen::VectorXd b_cosine(const TorusShape& shape);  // cos(2 pi x_1 / N)

// Monte Carlo estimate of E_x |G_{x,ystar}|^2: redraw row/column x
// n_resample times holding the rest of H fixed, updating G by the exact
// rank-2 identity.
double conditional_sqmod_mc(const BandSample& sample, const Resolvent& full,
                            std::int64_t x, std::int64_t y_star,
                            int n_resample, std::uint64_t first_index = 0);

struct SplitPQ {
  double f_offdiag = 0.0;  // sum over x != ystar of b_x (|G|^2 - |M|^2 T)
  double p_part = 0.0;     // same with E_x |G|^2 estimated by resampling
  double q_part = 0.0;     // f_offdiag - p_part
};

SplitPQ split_pq(const BandSample& sample, const Resolvent& full,
                 const Eigen::VectorXcd& M, const Eigen::VectorXd& t_col,
                 const Eigen::VectorXd& b, std::int64_t y_star,
                 int n_resample);

}  // namespace bandlab
