#include "bandlab/ensemble.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace bandlab {

BandSample sample(const VarianceProfile& profile, EntryDistribution dist,
                  std::uint64_t seed) {
  const TorusShape& shape = profile.shape();
  const std::int64_t n = shape.size();
  BandSample s;
  s.profile = profile;
  s.seed = seed;
  s.dist = dist;
  s.H = Eigen::MatrixXd::Zero(n, n);
  for (std::int64_t x = 0; x < n; ++x) {
    for (std::int64_t y = x; y < n; ++y) {
      const double var = profile.entry(x, y);
      if (var == 0.0) continue;
      rng::CounterStream stream(rng::entry_key(seed, x, y));
      const double v = std::sqrt(var) * stream.standardized(dist, 0);
      s.H(x, y) = v;
      s.H(y, x) = v;
    }
  }
  return s;
}

Eigen::VectorXd resample_row(const BandSample& s, std::int64_t x,
                             std::uint64_t resample_index,
                             Eigen::VectorXd* new_row) {
  const std::int64_t n = s.shape().size();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  for (std::int64_t y = 0; y < n; ++y) {
    const double var = s.profile.entry(x, y);
    if (var == 0.0) continue;
    const std::int64_t a = std::min(x, y), b = std::max(x, y);
    const std::uint64_t key =
        rng::combine(rng::entry_key(s.seed, a, b), 0xA11CEULL + resample_index);
    rng::CounterStream stream(key);
    const double fresh = std::sqrt(var) * stream.standardized(s.dist, 0);
    d(y) = fresh - s.H(x, y);
  }
  if (new_row) *new_row = s.H.row(x).transpose() + d;
  return d;
}

void dump_matrix(const BandSample& s, const std::string& bin_path,
                 const std::string& json_path) {
  static_assert(std::endian::native == std::endian::little,
                "matrix dump assumes a little-endian host");
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + bin_path);
  const std::int64_t n = s.shape().size();
  for (std::int64_t x = 0; x < n; ++x) {
    bin.write(reinterpret_cast<const char*>(s.H.row(x).eval().data()),
              static_cast<std::streamsize>(n * sizeof(double)));
  }
  bin.close();
  nlohmann::json side{{"N", s.shape().side},
                      {"d", s.shape().dim},
                      {"W", s.profile.band_width()},
                      {"seed", s.seed},
                      {"dist", to_string(s.dist)}};
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot open " + json_path);
  js << side.dump(2) << "\n";
}

Eigen::MatrixXd load_matrix(const std::string& bin_path,
                            const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw std::runtime_error("cannot open " + json_path);
  nlohmann::json side = nlohmann::json::parse(js);
  TorusShape shape(side.at("N").get<int>(), side.at("d").get<int>());
  const std::int64_t n = shape.size();
  Eigen::MatrixXd H(n, n);
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + bin_path);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (std::int64_t x = 0; x < n; ++x) {
    bin.read(reinterpret_cast<char*>(row.data()),
             static_cast<std::streamsize>(n * sizeof(double)));
    if (!bin) throw std::runtime_error("matrix dump truncated: " + bin_path);
    for (std::int64_t y = 0; y < n; ++y)
      H(x, y) = row[static_cast<std::size_t>(y)];
  }
  return H;
}

}  // namespace bandlab
