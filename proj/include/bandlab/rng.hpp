#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bandlab {

enum class EntryDistribution { kGaussian, kRademacher, kUniform };

EntryDistribution distribution_from_string(const std::string& name);
std::string to_string(EntryDistribution dist);

namespace rng {

// splitmix64 finalizer; a fixed bijective mixer on 64-bit words.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (0x9E3779B97F4A7C15ULL + b + (a << 6) + (a >> 2)));
}

// Key for the stream of entry (i, j); callers pass i <= j in flatten order.
inline std::uint64_t entry_key(std::uint64_t master, std::int64_t i, std::int64_t j) {
  return combine(combine(master, static_cast<std::uint64_t>(i)),
                 static_cast<std::uint64_t>(j));
}

inline std::uint64_t trial_seed(std::uint64_t master, std::int64_t trial) {
  return combine(master, 0x5EEDULL + static_cast<std::uint64_t>(trial));
}

// Counter-based stream: value t depends only on (key, t), so any traversal
// order and thread assignment reproduces the same draws.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) : key_(key) {}

  // t-th uniform in [0, 1).
  double uniform01(std::uint64_t t) const {
    return static_cast<double>(word(t) >> 11) * 0x1.0p-53;
  }
  // t-th uniform in (0, 1]; safe as a log/Box-Muller input.
  double uniform_pos(std::uint64_t t) const {
    return static_cast<double>((word(t) >> 11) + 1) * 0x1.0p-53;
  }

  std::uint64_t word(std::uint64_t t) const {
    return mix64(key_ + t * 0x9E3779B97F4A7C15ULL);
  }

  // Standardized draw (mean 0, variance 1); consumes two counters.
  double standardized(EntryDistribution dist, std::uint64_t index) const;

 private:
  std::uint64_t key_;
};

}  // namespace rng
}  // namespace bandlab
