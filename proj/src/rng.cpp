#include "bandlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace bandlab {

EntryDistribution distribution_from_string(const std::string& name) {
  if (name == "gaussian") return EntryDistribution::kGaussian;
  if (name == "rademacher") return EntryDistribution::kRademacher;
  if (name == "uniform") return EntryDistribution::kUniform;
  throw std::invalid_argument("unknown entry distribution: " + name);
}

std::string to_string(EntryDistribution dist) {
  switch (dist) {
    case EntryDistribution::kGaussian: return "gaussian";
    case EntryDistribution::kRademacher: return "rademacher";
    case EntryDistribution::kUniform: return "uniform";
  }
  return "?";
}

namespace rng {

double CounterStream::standardized(EntryDistribution dist, std::uint64_t index) const {
  const std::uint64_t t = 2 * index;
  switch (dist) {
    case EntryDistribution::kGaussian: {
      const double u1 = uniform_pos(t);
      const double u2 = uniform01(t + 1);
      return std::sqrt(-2.0 * std::log(u1)) *
             std::cos(2.0 * std::numbers::pi * u2);
    }
    case EntryDistribution::kRademacher:
      return (word(t) & 1ULL) ? 1.0 : -1.0;
    case EntryDistribution::kUniform:
      // +/- sqrt(3) * U[-1,1] has unit variance.
      return std::sqrt(3.0) * (2.0 * uniform01(t) - 1.0);
  }
  return 0.0;
}

}  // namespace rng
}  // namespace bandlab
