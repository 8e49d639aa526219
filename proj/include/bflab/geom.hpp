#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace bflab {

struct Point {
  double x = 0.0;
  double y = 0.0;

  Point operator+(Point o) const { return {x + o.x, y + o.y}; }
  Point operator-(Point o) const { return {x - o.x, y - o.y}; }
  Point operator-() const { return {-x, -y}; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
  double norm_inf() const { return std::max(std::abs(x), std::abs(y)); }
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }

  Rect inflated(double margin) const {
    return {x0 - margin, y0 - margin, x1 + margin, y1 + margin};
  }
  bool contains(const Rect& inner, double tol = 1e-9) const {
    return inner.x0 >= x0 - tol && inner.y0 >= y0 - tol &&
           inner.x1 <= x1 + tol && inner.y1 <= y1 + tol;
  }
  bool contains(Point p, double tol = 1e-9) const {
    return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
  }
  // Squared distance from p to this rectangle (0 inside).
  double dist2(Point p) const {
    double dx = std::max({x0 - p.x, 0.0, p.x - x1});
    double dy = std::max({y0 - p.y, 0.0, p.y - y1});
    return dx * dx + dy * dy;
  }
};

// Regular lattice of step 1/N; point (i, j) sits at ((ix0 + i)/N, (iy0 + j)/N).
struct LatticeGeom {
  std::int64_t ix0 = 0;
  std::int64_t iy0 = 0;
  int nx = 0;
  int ny = 0;
  int N = 1;

  std::int64_t size() const { return std::int64_t(nx) * ny; }
  std::int64_t index(int i, int j) const { return std::int64_t(j) * nx + i; }
  Point point(int i, int j) const {
    return {double(ix0 + i) / N, double(iy0 + j) / N};
  }
  Rect region() const {
    return {double(ix0) / N, double(iy0) / N,
            double(ix0 + nx - 1) / N, double(iy0 + ny - 1) / N};
  }
  bool same_shape(const LatticeGeom& o) const {
    return ix0 == o.ix0 && iy0 == o.iy0 && nx == o.nx && ny == o.ny && N == o.N;
  }

  // Smallest lattice covering `r` (bounds snapped outward).
  static LatticeGeom covering(const Rect& r, int N) {
    LatticeGeom g;
    g.N = N;
    g.ix0 = std::int64_t(std::floor(r.x0 * N + 1e-9));
    g.iy0 = std::int64_t(std::floor(r.y0 * N + 1e-9));
    g.nx = int(std::int64_t(std::ceil(r.x1 * N - 1e-9)) - g.ix0) + 1;
    g.ny = int(std::int64_t(std::ceil(r.y1 * N - 1e-9)) - g.iy0) + 1;
    return g;
  }
};

}  // namespace bflab
