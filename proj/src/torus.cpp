#include "bandlab/torus.hpp"

#include <limits>

namespace bandlab {

TorusShape::TorusShape(int n, int d) : side(n), dim(d) {
  if (n < 1) throw std::invalid_argument("TorusShape: side must be >= 1");
  if (d < 1) throw std::invalid_argument("TorusShape: dim must be >= 1");
  size_ = 1;
  for (int i = 0; i < d; ++i) {
    if (size_ > std::numeric_limits<std::int64_t>::max() / n)
      throw std::invalid_argument("TorusShape: N^d exceeds addressable range");
    size_ *= n;
  }
}

int canonical_coord(std::int64_t v, int side) {
  std::int64_t r = ((v % side) + side) % side;  // [0, N)
  if (2 * r > side) r -= side;                  // (-N/2, N/2]
  return static_cast<int>(r);
}

TorusPoint canonical_rep(std::span<const int> x, const TorusShape& shape) {
  if (static_cast<int>(x.size()) != shape.dim)
    throw std::invalid_argument("canonical_rep: dimension mismatch");
  TorusPoint p;
  p.coords.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    p.coords[i] = canonical_coord(x[i], shape.side);
  return p;
}

TorusPoint canonical_rep(const TorusPoint& x, const TorusShape& shape) {
  return canonical_rep(std::span<const int>(x.coords), shape);
}

int dist(const TorusPoint& x, const TorusPoint& y, const TorusShape& shape) {
  if (x.dim() != shape.dim || y.dim() != shape.dim)
    throw std::invalid_argument("dist: dimension mismatch");
  int best = 0;
  for (int i = 0; i < shape.dim; ++i) {
    int c = canonical_coord(static_cast<std::int64_t>(x[i]) - y[i], shape.side);
    if (c < 0) c = -c;
    if (c > best) best = c;
  }
  return best;
}

std::int64_t flatten(const TorusPoint& x, const TorusShape& shape) {
  if (x.dim() != shape.dim)
    throw std::invalid_argument("flatten: dimension mismatch");
  std::int64_t idx = 0;
  for (int i = 0; i < shape.dim; ++i) {
    std::int64_t c = ((static_cast<std::int64_t>(x[i]) % shape.side) + shape.side) % shape.side;
    idx = idx * shape.side + c;
  }
  return idx;
}

TorusPoint unflatten(std::int64_t index, const TorusShape& shape) {
  if (index < 0 || index >= shape.size())
    throw std::invalid_argument("unflatten: index out of range");
  TorusPoint p;
  p.coords.resize(static_cast<std::size_t>(shape.dim));
  for (int i = shape.dim - 1; i >= 0; --i) {
    int c = static_cast<int>(index % shape.side);
    index /= shape.side;
    p.coords[static_cast<std::size_t>(i)] = canonical_coord(c, shape.side);
  }
  return p;
}

int dist_flat(std::int64_t a, std::int64_t b, const TorusShape& shape) {
  int best = 0;
  for (int i = shape.dim - 1; i >= 0; --i) {
    int ca = static_cast<int>(a % shape.side);
    int cb = static_cast<int>(b % shape.side);
    a /= shape.side;
    b /= shape.side;
    int c = canonical_coord(ca - cb, shape.side);
    if (c < 0) c = -c;
    if (c > best) best = c;
  }
  return best;
}

std::int64_t box_volume(const TorusShape& shape, int radius) {
  int width = 2 * radius + 1;
  if (width > shape.side) width = shape.side;
  std::int64_t vol = 1;
  for (int i = 0; i < shape.dim; ++i) vol *= width;
  return vol;
}

}  // namespace bandlab
