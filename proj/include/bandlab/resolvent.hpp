#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "bandlab/ensemble.hpp"
#include "bandlab/selfconsistent.hpp"

namespace bandlab {

// Generalized resolvent G = (H - Z)^-1, possibly with a set of removed
// sites (rows/cols of the minor are kept zero, index names preserved).
struct Resolvent {
  Eigen::MatrixXcd G;
  SpectralParams params;
  std::vector<std::int64_t> minor_set;  // sorted
};

Resolvent resolvent(const BandSample& sample, const SpectralParams& params);

// Minor of the second kind computed by re-solving the reduced system.
Resolvent minor_resolvent(const BandSample& sample,
                          const SpectralParams& params,
                          std::vector<std::int64_t> removed);

// Minor computed from an existing resolvent matrix alone: restrict to kept
// indices, invert, drop `extra`, invert back. Independent of the re-solve
// path; used to exercise the composition law.
Resolvent minor_from(const Resolvent& r, std::vector<std::int64_t> extra);

// ||(H - Z) G - I||_max over rows/cols outside the minor set.
double resolvent_defect(const BandSample& sample, const Resolvent& r);

struct IdentityResiduals {
  double gij_minor = 0.0;     // G_ij = G^(k)_ij + G_ik G_kj / G_kk
  double diag_inverse = 0.0;  // 1/G_ii = 1/G^(k)_ii - G_ik G_ki/(G_ii G_kk G^(k)_ii)
  double schur_diag = 0.0;    // 1/G_ii = A_ii - sum A_ik G^(i)_kl A_li
  double row_expansion = 0.0; // G_ij = -G_ii sum_k A_ik G^(i)_kj
  bool skipped = false;       // a pivot modulus fell below 1e-14
  double max() const {
    return std::max(std::max(gij_minor, diag_inverse),
                    std::max(schur_diag, row_expansion));
  }
};

IdentityResiduals identity_residuals(const BandSample& sample,
                                     const SpectralParams& params,
                                     std::int64_t i, std::int64_t j,
                                     std::int64_t k);

// Same but reusing a precomputed full resolvent.
IdentityResiduals identity_residuals(const BandSample& sample,
                                     const Resolvent& full, std::int64_t i,
                                     std::int64_t j, std::int64_t k);

struct WardResiduals {
  // |sum_x |G_xy|^2 - Im G_yy / eta|; only defined for scalar Z.
  std::optional<double> scalar_ward;
  // |sum_x Im(z_x) |G_yx|^2 - Im G_yy|; exact for any diagonal Z.
  double generalized = 0.0;
};

WardResiduals ward_residual(const Resolvent& r, std::int64_t y);

// max_y (sum_x |G_xy|^2 + |G_yx|^2)^(1/2)
double triple_norm(const Resolvent& r);

struct PsiField {
  Eigen::MatrixXd psi;
  double tau = 0.0;
  int window = 0;  // floor(N^tau * W)
};

// Psi_xy^2 = s_xy + W^-2d sum_{|x'-x|<=w, |y'-y|<=w} (|G_x'y'|^2 + |G_y'x'|^2)
PsiField psi_field(const Resolvent& r, const VarianceProfile& profile,
                   double tau);

struct ZcalResult {
  Eigen::VectorXcd z;         // Z_x = -H_xx + sum H_xw H_xv G^(x)_wv - sum s_xw G^(x)_ww
  double cming_defect = 0.0;  // max_x |G_xx - M_x - M_x^2 Z_x|
  Eigen::VectorXd defect;     // per site
};

// Minor entries are obtained from the full resolvent through the exact
// Schur update G^(x)_wv = G_wv - G_wx G_xv / G_xx; the re-solve route is
// cross-checked against this in the tests.
ZcalResult zcal_variables(const BandSample& sample, const Resolvent& full,
                          const Eigen::VectorXcd& M);

struct ControlParams {
  double phi = 0.0;
  double gamma = 1.0;
  double tau = 0.2;
  enum class Mode { kTheoretical, kEmpirical } mode = Mode::kTheoretical;

  // Phi = (W^d eta)^(-1/2), Gamma^2 = 1/eta.
  static ControlParams theoretical(int W, int dim, double eta,
                                   double tau = 0.2);
  bool satisfies_gm15(int W, int dim, std::int64_t side, double delta) const;
};

ControlParams empirical_controls(const Resolvent& r,
                                 const Eigen::VectorXcd& M);

// max_{x,y} |G_xy - delta_xy M_x|
double max_deviation(const Eigen::MatrixXcd& G, const Eigen::VectorXcd& M);
double max_deviation(const Eigen::MatrixXcd& G, Complex m);

}  // namespace bandlab
