#pragma once

#include <Eigen/Dense>
#include <string>

#include "bandlab/profile.hpp"
#include "bandlab/rng.hpp"

namespace bandlab {

// One realization of the band matrix H: real symmetric, entry (x, y) drawn
// as sqrt(s_xy) * xi from the entry distribution.
struct BandSample {
  VarianceProfile profile;
  Eigen::MatrixXd H;
  std::uint64_t seed = 0;
  EntryDistribution dist = EntryDistribution::kGaussian;

  const TorusShape& shape() const { return profile.shape(); }
};

// Deterministic in (profile, dist, seed); the per-entry stream is keyed by
// (seed, flatten(x), flatten(y)) with x <= y, so fills are order-independent.
BandSample sample(const VarianceProfile& profile, EntryDistribution dist,
                  std::uint64_t seed);

// Redraw row/column x in place (fresh entries keyed by the resample index);
// returns the difference vector d with H_new(x, .) = H_old(x, .) + d.
Eigen::VectorXd resample_row(const BandSample& s, std::int64_t x,
                             std::uint64_t resample_index,
                             Eigen::VectorXd* new_row = nullptr);

// Flat binary of little-endian f64 in flatten-order row-major plus a JSON
// sidecar {N, d, W, seed, dist}.
void dump_matrix(const BandSample& s, const std::string& bin_path,
                 const std::string& json_path);

Eigen::MatrixXd load_matrix(const std::string& bin_path,
                            const std::string& json_path);

}  // namespace bandlab
