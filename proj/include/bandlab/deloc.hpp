#pragma once

#include <Eigen/Dense>
#include <optional>

#include "bandlab/resolvent.hpp"

namespace bandlab {

struct SpectralData {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors; // orthonormal columns, first-nonzero-positive
};

SpectralData eigendecompose(const BandSample& sample,
                            std::int64_t budget = 4096);

// ||H - sum_a lambda_a u_a u_a^T||_max
double reconstruction_defect(const BandSample& sample,
                             const SpectralData& spec);

struct DelocReport {
  double eps = 0.0;
  double kappa = 0.0;
  int l = 0;
  double fraction = 0.0;   // |A_{eps,kappa,l}| / N^d
  double supnorm = 0.0;    // max bulk ||u||_inf (0 if bulk empty)
  std::int64_t bulk_count = 0;
};

// Fraction of indices a with lambda_a in (-2+kappa, 2-kappa) and
// sum_x |u_a(x)| ||P_{x,l} u_a|| <= eps, over N^d.
double localization_fraction(const SpectralData& spec, const TorusShape& shape,
                             double eps, double kappa, int l);

DelocReport deloc_report(const SpectralData& spec, const TorusShape& shape,
                         double eps, double kappa, int l);

// max ||u_a||_inf over bulk eigenvectors; empty bulk reported as absent.
std::optional<double> sup_norm_stat(const SpectralData& spec, double kappa);

// (eta / Im m) sum_{x: |x-y| <= l} |G_xy|^2; requires scalar Z.
double mass_profile(const Resolvent& r, Complex m, std::int64_t y, int l);

// ||G - m I||_max * sqrt(W^d eta); throws if eta is below the spectral
// domain W^(-d+delta).
double local_law_check(const Resolvent& r, Complex m, int W,
                       double delta = 0.1);

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
};

Regression linear_regression(const std::vector<double>& x,
                             const std::vector<double>& y);

struct Phi2FixedPoint {
  double value = 0.0;       // converged iterate of phi -> W^-d/2 + W^-delta/2 phi
  double closed_form = 0.0; // W^-d/2 / (1 - W^-delta/2)
  int steps = 0;
};

Phi2FixedPoint phi2_fixed_point(int W, int dim, double delta,
                                double phi0 = 1.0, double tol = 1e-15);

}  // namespace bandlab
