#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace bandlab {

// Geometry of the discrete torus (Z mod N)^d with the l^inf metric.
// Canonical coordinates live in the window (-N/2, N/2].
struct TorusShape {
  int side = 1;  // N
  int dim = 1;   // d

  TorusShape() = default;
  TorusShape(int n, int d);

  // N^d, checked against overflow at construction.
  std::int64_t size() const { return size_; }

  bool operator==(const TorusShape& o) const {
    return side == o.side && dim == o.dim;
  }

 private:
  std::int64_t size_ = 1;
};

struct TorusPoint {
  std::vector<int> coords;

  int operator[](int i) const { return coords[static_cast<std::size_t>(i)]; }
  int dim() const { return static_cast<int>(coords.size()); }
  bool operator==(const TorusPoint& o) const { return coords == o.coords; }
};

// Reduce a single coordinate into the window (-N/2, N/2].
int canonical_coord(std::int64_t v, int side);

// Componentwise reduction; throws on dimension mismatch.
TorusPoint canonical_rep(std::span<const int> x, const TorusShape& shape);
TorusPoint canonical_rep(const TorusPoint& x, const TorusShape& shape);

// max_i |[x_i - y_i]_N|
int dist(const TorusPoint& x, const TorusPoint& y, const TorusShape& shape);

// Row-major order over coordinates shifted to [0, N).
std::int64_t flatten(const TorusPoint& x, const TorusShape& shape);
TorusPoint unflatten(std::int64_t index, const TorusShape& shape);

// l^inf distance between two flattened indices.
int dist_flat(std::int64_t a, std::int64_t b, const TorusShape& shape);

// Visit every displacement u with |u|_inf <= radius. fn receives the
// displacement coordinates and its position in the (2r+1)^d box (row-major
// over u + radius).
template <typename Fn>
void for_each_offset(int dim, int radius, Fn&& fn) {
  const int width = 2 * radius + 1;
  std::int64_t count = 1;
  for (int i = 0; i < dim; ++i) count *= width;
  std::vector<int> u(static_cast<std::size_t>(dim), -radius);
  for (std::int64_t box = 0; box < count; ++box) {
    fn(std::span<const int>(u), box);
    for (int i = dim - 1; i >= 0; --i) {
      auto& c = u[static_cast<std::size_t>(i)];
      if (++c <= radius) break;
      c = -radius;
    }
  }
}

// Number of lattice points in a box of radius r (clipped to the torus).
std::int64_t box_volume(const TorusShape& shape, int radius);

}  // namespace bandlab
