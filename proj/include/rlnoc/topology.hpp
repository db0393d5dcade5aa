#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rlnoc {

using Cycles = std::uint64_t;
using RingId = std::size_t;

/// Grid position of a core. Every core owns exactly one switch, so the same
/// coordinate names both.
struct Coord {
  int column = 0;
  int row = 0;

  friend bool operator==(const Coord&, const Coord&) = default;
  friend auto operator<=>(const Coord&, const Coord&) = default;
};

inline std::string to_string(Coord c) {
  return "(" + std::to_string(c.column) + "," + std::to_string(c.row) + ")";
}

inline int manhattan(Coord a, Coord b) {
  return std::abs(a.column - b.column) + std::abs(a.row - b.row);
}

class TopologyError : public std::runtime_error {
 public:
  enum class Kind {
    invalid_dimension,
    schema,
    out_of_grid,
    not_adjacent,
    duplicate_switch,
    disconnected,
    not_on_ring,
  };

  TopologyError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// A unidirectional ring. Direction is the order of `switches`; the last
/// switch links back to the first.
struct Ring {
  RingId id = 0;
  std::vector<Coord> switches;
  std::optional<Cycles> buffer_capacity;

  std::size_t size() const noexcept { return switches.size(); }
};

class Topology {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  /// Validates every invariant and builds the routing table. Ring ids are
  /// reassigned to their index in `rings`.
  Topology(int width, int height, std::vector<Ring> rings)
      : width_(width), height_(height), rings_(std::move(rings)) {
    if (width_ < 2 || height_ < 2) {
      throw TopologyError(TopologyError::Kind::invalid_dimension,
                          "grid dimensions must be at least 2x2, got " +
                              std::to_string(width_) + "x" +
                              std::to_string(height_));
    }
    for (std::size_t i = 0; i < rings_.size(); ++i) rings_[i].id = i;
    build_positions();
    build_routing();
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t core_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  const std::vector<Ring>& rings() const noexcept { return rings_; }
  const Ring& ring(RingId id) const { return rings_.at(id); }

  std::size_t index(Coord c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.column);
  }
  Coord coord(std::size_t index) const {
    return Coord{static_cast<int>(index % static_cast<std::size_t>(width_)),
                 static_cast<int>(index / static_cast<std::size_t>(width_))};
  }
  bool contains(Coord c) const noexcept {
    return c.column >= 0 && c.column < width_ && c.row >= 0 && c.row < height_;
  }

  /// Position of a switch within a ring, or npos.
  std::size_t position(RingId ring, Coord c) const {
    return positions_.at(ring)[index(c)];
  }
  bool on_ring(RingId ring, Coord c) const { return position(ring, c) != npos; }

  /// Number of switches from `src` to `dst` inclusive along the ring.
  std::size_t hops(RingId ring, Coord src, Coord dst) const {
    auto a = checked_position(ring, src);
    auto b = checked_position(ring, dst);
    auto r = rings_[ring].size();
    return (b + r - a) % r + 1;
  }

  std::vector<Coord> path(RingId ring, Coord src, Coord dst) const {
    if (src == dst) {
      throw std::invalid_argument("path endpoints must differ");
    }
    auto a = checked_position(ring, src);
    auto n = hops(ring, src, dst);
    const auto& sw = rings_[ring].switches;
    std::vector<Coord> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(sw[(a + k) % sw.size()]);
    return out;
  }

  std::vector<Coord> dpath(RingId ring, Coord src, Coord dst) const {
    auto p = path(ring, src, dst);
    p.erase(p.begin());
    return p;
  }

  /// Hop-minimal ring containing both cores; ties go to the lowest id.
  RingId select_ring(Coord src, Coord dst) const {
    if (src == dst) throw std::invalid_argument("select_ring needs src != dst");
    return routing_[index(src) * core_count() + index(dst)];
  }

 private:
  std::size_t checked_position(RingId ring, Coord c) const {
    if (ring >= rings_.size()) {
      throw TopologyError(TopologyError::Kind::not_on_ring,
                          "unknown ring " + std::to_string(ring));
    }
    auto p = contains(c) ? position(ring, c) : npos;
    if (p == npos) {
      throw TopologyError(TopologyError::Kind::not_on_ring,
                          "core " + to_string(c) + " is not on ring " +
                              std::to_string(ring));
    }
    return p;
  }

  void build_positions() {
    positions_.assign(rings_.size(), std::vector<std::size_t>(core_count(), npos));
    for (const auto& ring : rings_) {
      const auto tag = "ring " + std::to_string(ring.id) + ": ";
      if (ring.switches.size() < 2) {
        throw TopologyError(TopologyError::Kind::schema,
                            tag + "needs at least two switches");
      }
      for (std::size_t k = 0; k < ring.switches.size(); ++k) {
        auto c = ring.switches[k];
        if (!contains(c)) {
          throw TopologyError(TopologyError::Kind::out_of_grid,
                              tag + "switch " + to_string(c) + " outside grid");
        }
        auto& slot = positions_[ring.id][index(c)];
        if (slot != npos) {
          throw TopologyError(TopologyError::Kind::duplicate_switch,
                              tag + "switch " + to_string(c) + " appears twice");
        }
        slot = k;
      }
      for (std::size_t k = 0; k < ring.switches.size(); ++k) {
        auto a = ring.switches[k];
        auto b = ring.switches[(k + 1) % ring.switches.size()];
        if (manhattan(a, b) != 1) {
          throw TopologyError(TopologyError::Kind::not_adjacent,
                              tag + to_string(a) + " -> " + to_string(b) +
                                  " are not grid neighbours");
        }
      }
    }
  }

  void build_routing() {
    const auto n = core_count();
    routing_.assign(n * n, npos);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t d = 0; d < n; ++d) {
        if (s == d) continue;
        std::size_t best_hops = npos;
        for (const auto& ring : rings_) {
          auto a = positions_[ring.id][s];
          auto b = positions_[ring.id][d];
          if (a == npos || b == npos) continue;
          auto h = (b + ring.size() - a) % ring.size() + 1;
          if (h < best_hops) {
            best_hops = h;
            routing_[s * n + d] = ring.id;
          }
        }
        if (routing_[s * n + d] == npos) {
          throw TopologyError(TopologyError::Kind::disconnected,
                              "no ring connects " + to_string(coord(s)) +
                                  " to " + to_string(coord(d)));
        }
      }
    }
  }

  int width_;
  int height_;
  std::vector<Ring> rings_;
  std::vector<std::vector<std::size_t>> positions_;
  std::vector<RingId> routing_;
};

/// Clockwise boundary of the rectangle [c0,c1] x [r0,r1] (row 0 at the top).
inline std::vector<Coord> rectangle_ring(int c0, int r0, int c1, int r1,
                                         bool clockwise = true) {
  std::vector<Coord> out;
  for (int c = c0; c <= c1; ++c) out.push_back({c, r0});
  for (int r = r0 + 1; r <= r1; ++r) out.push_back({c1, r});
  for (int c = c1 - 1; c >= c0; --c) out.push_back({c, r1});
  for (int r = r1 - 1; r > r0; --r) out.push_back({c0, r});
  if (!clockwise) std::reverse(out.begin() + 1, out.end());
  return out;
}

/// Deterministic multi-ring generator used in place of RLrec.
///
/// Emits, in order: every row-pair rectangle spanning the full width
/// (clockwise), every column-pair rectangle spanning the full height
/// (counter-clockwise), then the nested concentric rectangles (alternating
/// direction). Rings covering the same switch set as an earlier ring are
/// dropped. Row-pair rectangles alone already connect every ordered core
/// pair; the others shorten paths.
inline Topology generate_multi_ring(int width, int height) {
  if (width < 2 || height < 2) {
    throw TopologyError(TopologyError::Kind::invalid_dimension,
                        "grid dimensions must be at least 2x2, got " +
                            std::to_string(width) + "x" + std::to_string(height));
  }
  std::vector<Ring> rings;
  std::set<std::vector<Coord>> seen;
  auto add = [&](std::vector<Coord> sw) {
    auto key = sw;
    std::sort(key.begin(), key.end());
    if (!seen.insert(std::move(key)).second) return;
    rings.push_back(Ring{rings.size(), std::move(sw), std::nullopt});
  };
  for (int r0 = 0; r0 < height; ++r0)
    for (int r1 = r0 + 1; r1 < height; ++r1)
      add(rectangle_ring(0, r0, width - 1, r1, true));
  for (int c0 = 0; c0 < width; ++c0)
    for (int c1 = c0 + 1; c1 < width; ++c1)
      add(rectangle_ring(c0, 0, c1, height - 1, false));
  for (int layer = 0;; ++layer) {
    int c0 = layer, r0 = layer, c1 = width - 1 - layer, r1 = height - 1 - layer;
    if (c1 <= c0 || r1 <= r0) break;
    add(rectangle_ring(c0, r0, c1, r1, layer % 2 == 0));
  }
  return Topology(width, height, std::move(rings));
}

}  // namespace rlnoc
