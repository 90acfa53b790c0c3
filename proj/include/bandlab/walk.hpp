#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "bandlab/profile.hpp"
#include "bandlab/selfconsistent.hpp"

namespace bandlab {

// Single step of the torus random walk with P(X = u) given by a symmetric
// stencil on the box [-radius, radius]^d.
struct WalkStep {
  int dim = 1;
  int radius = 1;
  std::vector<double> masses;  // (2*radius+1)^d, row-major over u+radius

  static WalkStep uniform(int W, int dim);
  static WalkStep from_profile(const VarianceProfile& profile);

  Eigen::MatrixXd covariance() const;  // Sigma_ij = E[(X)_i (X)_j]
  double total_mass() const;
};

// Distribution of the k-step walk on the torus, as masses over flattened
// displacements; exact circular convolution via the Fourier symbol.
Eigen::VectorXd s_power(const WalkStep& step, int k, const TorusShape& shape);

struct CltReport {
  double max_abs_err = 0.0;    // sup_{|x|_2 <= 3 sqrt(n tr Sigma / d)} |P - gauss|
  double center_rel_err = 0.0; // |P(0) - gauss(0)| / gauss(0)
  double gaussian_peak = 0.0;
  bool wraparound_ok = true;   // L sqrt(n) <= N/2
  double log_ratio = 0.0;      // log n / log L
};

CltReport clt_compare(const WalkStep& step, int n, const TorusShape& shape);

struct TailSumReport {
  Eigen::VectorXd row;          // sum_{k=1..K} |m|^{2(k-1)} (S^k)_{0,u}
  int K = 0;
  double truncation_bound = 0.0;  // |m|^{2K} / (1 - |m|^2)
  // Fitted constants (max ratio against the regime bound); absent when the
  // regime contains no k.
  std::optional<double> c_early;   // k <= N^tau
  std::optional<double> c_middle;  // N^tau < k <= N^(2-tau)/W^2
  std::optional<double> c_late;    // beyond
  double tau = 0.1;
};

// Truncated Neumann sum for Theta through the walk picture, with the
// three-regime bound decomposition.
TailSumReport theta_tail_sum(const WalkStep& step, Complex m, double eta,
                             const TorusShape& shape, double tau = 0.1,
                             std::optional<int> K_override = std::nullopt);

}  // namespace bandlab
