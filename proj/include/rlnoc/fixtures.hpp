#pragma once

#include <memory>
#include <vector>

#include "rlnoc/traffic.hpp"

namespace rlnoc::fixtures {

/// Six-switch clockwise ring on a 3x2 grid: xi1..xi6 are
/// (0,0) (1,0) (2,0) (2,1) (1,1) (0,1).
inline std::shared_ptr<const Topology> scenario_topology() {
  return std::make_shared<const Topology>(
      3, 2, std::vector<Ring>{{0, rectangle_ring(0, 0, 2, 1, true), std::nullopt}});
}

/// Five flows of the worked interference scenario. Timing parameters are
/// arbitrary but fixed; only the routes matter for the interference sets.
inline Flowset scenario_flowset() {
  const Coord xi1{0, 0}, xi2{1, 0}, xi3{2, 0}, xi4{2, 1}, xi5{1, 1}, xi6{0, 1};
  std::vector<Flow> flows{
      {1, 400, 400, 6, 10, xi3, xi1, 0},
      {2, 300, 300, 4, 0, xi2, xi5, 0},
      {3, 500, 500, 8, 20, xi6, xi1, 0},
      {4, 250, 250, 5, 5, xi1, xi3, 0},
      {5, 600, 600, 3, 0, xi3, xi4, 0},
  };
  return Flowset(scenario_topology(), std::move(flows));
}

/// Ten-ring routerless 4x4 layout, a best-effort reading of the published
/// figure: the outer ring, the inner 2x2 ring, four column-band rings and
/// four row-band rings.
inline std::shared_ptr<const Topology> rlrec_4x4() {
  struct Rect {
    int c0, r0, c1, r1;
    bool cw;
  };
  const Rect rects[] = {
      {0, 0, 3, 3, true},  {1, 1, 2, 2, false}, {0, 0, 1, 3, false}, {0, 0, 2, 3, false},
      {1, 0, 3, 3, true},  {2, 0, 3, 3, true},  {0, 0, 3, 1, true},  {0, 0, 3, 2, true},
      {0, 1, 3, 3, false}, {0, 2, 3, 3, false},
  };
  std::vector<Ring> rings;
  for (const auto& r : rects)
    rings.push_back({rings.size(), rectangle_ring(r.c0, r.r0, r.c1, r.r1, r.cw), std::nullopt});
  return std::make_shared<const Topology>(4, 4, std::move(rings));
}

}  // namespace rlnoc::fixtures
