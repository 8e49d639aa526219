#include "bflab/perco.hpp"

#include <cmath>

#include "bflab/errors.hpp"

namespace bflab {

namespace {

struct UnionFind {
  std::vector<std::int32_t> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = std::int32_t(i);
  }
  std::int32_t find(std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[b] = a;
  }
};

int snap_index(double coord, int N, std::int64_t origin) {
  return int(std::llround(coord * N) - origin);
}

}  // namespace

BinaryGrid threshold(const FieldSample& field, double level) {
  BinaryGrid g;
  g.geom = field.geom;
  g.level = level;
  g.conn = Connectivity::Four;
  g.occ.resize(field.values.size());
  for (std::size_t i = 0; i < field.values.size(); ++i)
    g.occ[i] = field.values[i] > -level ? 1 : 0;
  return g;
}

BinaryGrid complement(const BinaryGrid& g) {
  BinaryGrid c = g;
  c.conn = g.conn == Connectivity::Four ? Connectivity::Eight : Connectivity::Four;
  for (auto& v : c.occ) v = v ? 0 : 1;
  return c;
}

bool crossing(const BinaryGrid& grid, const QuadSpec& quad, Point anchor) {
  const Rect r = quad.rect(anchor);
  const auto& geom = grid.geom;
  if (!geom.region().contains(r))
    throw ConfigError("crossing: grid does not cover the scaled quad");
  const int i0 = snap_index(r.x0, geom.N, geom.ix0);
  const int i1 = snap_index(r.x1, geom.N, geom.ix0);
  const int j0 = snap_index(r.y0, geom.N, geom.iy0);
  const int j1 = snap_index(r.y1, geom.N, geom.iy0);
  const int w = i1 - i0 + 1;
  const int h = j1 - j0 + 1;

  UnionFind uf(std::size_t(w) * h + 2);
  const std::int32_t kSideA = std::int32_t(std::size_t(w) * h);
  const std::int32_t kSideB = kSideA + 1;
  auto id = [&](int i, int j) { return std::int32_t(std::size_t(j) * w + i); };

  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      if (!grid.at(i0 + i, j0 + j)) continue;
      const std::int32_t me = id(i, j);
      if (i + 1 < w && grid.at(i0 + i + 1, j0 + j)) uf.unite(me, id(i + 1, j));
      if (j + 1 < h && grid.at(i0 + i, j0 + j + 1)) uf.unite(me, id(i, j + 1));
      if (grid.conn == Connectivity::Eight) {
        if (i + 1 < w && j + 1 < h && grid.at(i0 + i + 1, j0 + j + 1))
          uf.unite(me, id(i + 1, j + 1));
        if (i > 0 && j + 1 < h && grid.at(i0 + i - 1, j0 + j + 1))
          uf.unite(me, id(i - 1, j + 1));
      }
      if (quad.sides == SidePair::LeftRight) {
        if (i == 0) uf.unite(kSideA, me);
        if (i == w - 1) uf.unite(kSideB, me);
      } else {
        if (j == 0) uf.unite(kSideA, me);
        if (j == h - 1) uf.unite(kSideB, me);
      }
    }
  }
  return uf.find(kSideA) == uf.find(kSideB);
}

bool arm_event(const BinaryGrid& grid, double r, double R) {
  if (r > R) return true;
  const auto& geom = grid.geom;
  if (!geom.region().contains(Rect{-R, -R, R, R}))
    throw ConfigError("arm_event: grid does not cover [-R,R]^2");

  const double eps = 1e-9;
  const double step = 1.0 / geom.N;
  const int i0 = snap_index(-R, geom.N, geom.ix0);
  const int i1 = snap_index(R, geom.N, geom.ix0);
  const int j0 = snap_index(-R, geom.N, geom.iy0);
  const int j1 = snap_index(R, geom.N, geom.iy0);
  const int w = i1 - i0 + 1;
  const int h = j1 - j0 + 1;

  UnionFind uf(std::size_t(w) * h + 2);
  const std::int32_t kInner = std::int32_t(std::size_t(w) * h);
  const std::int32_t kOuter = kInner + 1;
  auto id = [&](int i, int j) { return std::int32_t(std::size_t(j) * w + i); };
  auto in_annulus = [&](int i, int j) {
    const Point p = geom.point(i0 + i, j0 + j);
    return p.norm_inf() >= r - eps && std::abs(p.x) <= R + eps && std::abs(p.y) <= R + eps;
  };

  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      if (!grid.at(i0 + i, j0 + j) || !in_annulus(i, j)) continue;
      const std::int32_t me = id(i, j);
      if (i + 1 < w && grid.at(i0 + i + 1, j0 + j) && in_annulus(i + 1, j))
        uf.unite(me, id(i + 1, j));
      if (j + 1 < h && grid.at(i0 + i, j0 + j + 1) && in_annulus(i, j + 1))
        uf.unite(me, id(i, j + 1));
      const Point p = geom.point(i0 + i, j0 + j);
      if (p.norm_inf() < r + step - eps) uf.unite(kInner, me);
      if (p.norm_inf() > R - step + eps) uf.unite(kOuter, me);
    }
  }
  return uf.find(kInner) == uf.find(kOuter);
}

bool nodal_crossing(const FieldSample& field, const QuadSpec& quad, Point anchor) {
  QuadSpec orth = quad;
  orth.sides = orthogonal(quad.sides);

  BinaryGrid pos;
  pos.geom = field.geom;
  pos.conn = Connectivity::Four;
  pos.occ.resize(field.values.size());
  BinaryGrid neg = pos;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    pos.occ[i] = field.values[i] > 0.0 ? 1 : 0;
    neg.occ[i] = field.values[i] < 0.0 ? 1 : 0;
  }
  return !crossing(pos, orth, anchor) && !crossing(neg, orth, anchor);
}

}  // namespace bflab
