#pragma once

#include <cstdint>
#include <vector>

#include "bflab/field.hpp"
#include "bflab/geom.hpp"

namespace bflab {

enum class SidePair { LeftRight, TopBottom };

inline SidePair orthogonal(SidePair s) {
  return s == SidePair::LeftRight ? SidePair::TopBottom : SidePair::LeftRight;
}

/// Rectangle quad with two marked sides, used at scale n.
struct QuadSpec {
  double width = 1.0;
  double height = 1.0;
  double n = 1.0;
  SidePair sides = SidePair::LeftRight;

  // Scaled rectangle anchored at `anchor`.
  Rect rect(Point anchor = {0, 0}) const {
    return {anchor.x, anchor.y, anchor.x + n * width, anchor.y + n * height};
  }
};

enum class Connectivity { Four, Eight };

struct BinaryGrid {
  LatticeGeom geom;
  std::vector<std::uint8_t> occ;
  double level = 0.0;
  Connectivity conn = Connectivity::Four;

  bool at(int i, int j) const { return occ[geom.index(i, j)] != 0; }
};

/// Cell occupied iff field value > -level.
BinaryGrid threshold(const FieldSample& field, double level);

/// Vacant set of `g`, tagged with the dual (8-) connectivity.
BinaryGrid complement(const BinaryGrid& g);

/// Occupied path joining the marked sides of quad.rect(anchor), using the
/// grid's connectivity. The grid must cover the scaled quad.
bool crossing(const BinaryGrid& grid, const QuadSpec& quad, Point anchor = {0, 0});

/// Occupied path across the square annulus [-R,R]^2 minus the open square
/// (-r,r)^2; sure event when r > R. The grid must cover [-R,R]^2.
bool arm_event(const BinaryGrid& grid, double r, double R);

/// Duality surrogate for a crossing inside {f = 0}: true iff neither {f > 0}
/// nor {f < 0} crosses the orthogonal side pair.
bool nodal_crossing(const FieldSample& field, const QuadSpec& quad,
                    Point anchor = {0, 0});

}  // namespace bflab
