#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rlnoc/topology.hpp"

namespace rlnoc {

using FlowId = std::int64_t;

/// Sporadic real-time traffic flow. All times in cycles, lengths in flits.
struct Flow {
  FlowId id = 0;
  Cycles period = 0;
  Cycles deadline = 0;
  Cycles length = 1;
  Cycles jitter = 0;
  Coord src;
  Coord dst;
  RingId ring = 0;

  friend bool operator==(const Flow&, const Flow&) = default;
};

class FlowsetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Flowset {
 public:
  Flowset(std::shared_ptr<const Topology> topology, std::vector<Flow> flows)
      : topology_(std::move(topology)), flows_(std::move(flows)) {
    if (!topology_) throw FlowsetError("flowset needs a topology");
    validate();
  }

  const Topology& topology() const noexcept { return *topology_; }
  std::shared_ptr<const Topology> topology_ptr() const noexcept { return topology_; }
  const std::vector<Flow>& flows() const noexcept { return flows_; }
  std::size_t size() const noexcept { return flows_.size(); }
  const Flow& operator[](std::size_t i) const { return flows_[i]; }

  std::size_t index_of(FlowId id) const {
    for (std::size_t i = 0; i < flows_.size(); ++i)
      if (flows_[i].id == id) return i;
    throw FlowsetError("unknown flow id " + std::to_string(id));
  }

  /// B°: the ring's fixed capacity when given, else the longest packet
  /// assigned to it (0 for an unused ring).
  Cycles ring_capacity(RingId ring) const {
    const auto& r = topology_->ring(ring);
    if (r.buffer_capacity) return *r.buffer_capacity;
    Cycles best = 0;
    for (const auto& f : flows_)
      if (f.ring == ring) best = std::max(best, f.length);
    return best;
  }

  /// First `n` flows, same topology.
  Flowset prefix(std::size_t n) const {
    n = std::min(n, flows_.size());
    return Flowset(topology_, {flows_.begin(), flows_.begin() + static_cast<std::ptrdiff_t>(n)});
  }

  Flowset without(FlowId id) const {
    std::vector<Flow> rest;
    for (const auto& f : flows_)
      if (f.id != id) rest.push_back(f);
    return Flowset(topology_, std::move(rest));
  }

 private:
  void validate() const {
    std::set<FlowId> ids;
    for (const auto& f : flows_) {
      const auto tag = "flow " + std::to_string(f.id) + ": ";
      if (!ids.insert(f.id).second) throw FlowsetError(tag + "duplicate id");
      if (f.length < 1) throw FlowsetError(tag + "length must be >= 1");
      if (f.period < 1) throw FlowsetError(tag + "period must be >= 1");
      if (f.deadline > f.period) throw FlowsetError(tag + "deadline exceeds period");
      if (!topology_->contains(f.src) || !topology_->contains(f.dst))
        throw FlowsetError(tag + "endpoint outside grid");
      if (f.src == f.dst) throw FlowsetError(tag + "source equals destination");
      if (f.ring >= topology_->rings().size())
        throw FlowsetError(tag + "unknown ring " + std::to_string(f.ring));
      if (!topology_->on_ring(f.ring, f.src) || !topology_->on_ring(f.ring, f.dst))
        throw FlowsetError(tag + "ring " + std::to_string(f.ring) +
                           " does not contain both endpoints");
    }
    for (const auto& ring : topology_->rings()) {
      if (!ring.buffer_capacity) continue;
      for (const auto& f : flows_)
        if (f.ring == ring.id && f.length > *ring.buffer_capacity)
          throw FlowsetError("ring " + std::to_string(ring.id) +
                             ": buffer capacity smaller than packet of flow " +
                             std::to_string(f.id));
    }
  }

  std::shared_ptr<const Topology> topology_;
  std::vector<Flow> flows_;
};

struct BenchmarkParams {
  std::size_t flows_per_set = 20;
  Cycles packet_min = 16;
  Cycles packet_max = 48;
  Cycles period_min = 1000;     // 1 us at 1 GHz
  Cycles period_max = 100000;   // 100 us at 1 GHz
  double jitter_fraction_min = 0.0;
  double jitter_fraction_max = 0.5;
  std::uint64_t seed = 1;

  void validate() const {
    if (packet_min < 1 || packet_max < packet_min)
      throw std::invalid_argument("packet range must satisfy 1 <= min <= max");
    if (period_min < 1 || period_max < period_min)
      throw std::invalid_argument("period range must satisfy 1 <= min <= max");
    if (jitter_fraction_min < 0.0 || jitter_fraction_max < jitter_fraction_min ||
        jitter_fraction_max > 1.0)
      throw std::invalid_argument("jitter fraction range must lie in [0, 1]");
  }
};

/// Draws flows one at a time from a single seeded stream, so the first k
/// flows of an n-flow set equal the k-flow set for the same seed.
inline Flowset generate_flowset(std::shared_ptr<const Topology> topology,
                                const BenchmarkParams& params) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  const auto cores = topology->core_count();
  auto uniform = [&rng](std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
  };
  std::vector<Flow> flows;
  flows.reserve(params.flows_per_set);
  for (std::size_t k = 0; k < params.flows_per_set; ++k) {
    Flow f;
    f.id = static_cast<FlowId>(k + 1);
    f.period = uniform(params.period_min, params.period_max);
    f.deadline = f.period;
    auto jlo = static_cast<Cycles>(std::ceil(params.jitter_fraction_min * static_cast<double>(f.period)));
    auto jhi = static_cast<Cycles>(std::floor(params.jitter_fraction_max * static_cast<double>(f.period)));
    f.jitter = uniform(jlo, std::max(jlo, jhi));
    f.length = uniform(params.packet_min, params.packet_max);
    auto s = uniform(0, cores - 1);
    auto d = uniform(0, cores - 2);
    if (d >= s) ++d;
    f.src = topology->coord(s);
    f.dst = topology->coord(d);
    f.ring = topology->select_ring(f.src, f.dst);
    flows.push_back(f);
  }
  return Flowset(std::move(topology), std::move(flows));
}

struct SwitchFlows {
  std::vector<FlowId> in;
  std::vector<FlowId> out;
  std::vector<FlowId> thru;
};

/// Partitions the flows touching `sw` on `ring` by how they use the switch.
inline SwitchFlows classify_switch_flows(const Flowset& fs, RingId ring, Coord sw) {
  const auto& topo = fs.topology();
  if (ring >= topo.rings().size() || !topo.contains(sw) || !topo.on_ring(ring, sw))
    throw TopologyError(TopologyError::Kind::not_on_ring,
                        "switch " + to_string(sw) + " is not on ring " +
                            std::to_string(ring));
  const auto r = topo.ring(ring).size();
  const auto x = topo.position(ring, sw);
  SwitchFlows out;
  for (const auto& f : fs.flows()) {
    if (f.ring != ring) continue;
    auto a = topo.position(ring, f.src);
    auto b = topo.position(ring, f.dst);
    auto span = (b + r - a) % r;
    auto off = (x + r - a) % r;
    if (off == 0)
      out.in.push_back(f.id);
    else if (off == span)
      out.out.push_back(f.id);
    else if (off < span)
      out.thru.push_back(f.id);
  }
  return out;
}

/// Interference sets of one flow, as flow indices into the flowset.
struct InterferenceSets {
  std::vector<std::size_t> up;
  std::vector<std::size_t> down;
  std::vector<std::size_t> in_ring;
  std::vector<std::size_t> in_core;
  std::vector<std::size_t> upind;
  std::vector<std::size_t> ring_all;
};

/// Per-flowset precomputation shared by the analysis: ring positions of every
/// flow, per-switch buffer bounds and all interference sets.
class InterferenceModel {
 public:
  struct Placement {
    std::size_t src_pos = 0;
    std::size_t dst_pos = 0;
    std::size_t ring_size = 0;
    std::size_t hops = 0;  // |path|
  };

  explicit InterferenceModel(const Flowset& fs) : fs_(&fs) {
    const auto& topo = fs.topology();
    const auto n = fs.size();
    placement_.resize(n);
    ring_flows_.assign(topo.rings().size(), {});
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = fs[i];
      Placement p;
      p.ring_size = topo.ring(f.ring).size();
      p.src_pos = topo.position(f.ring, f.src);
      p.dst_pos = topo.position(f.ring, f.dst);
      p.hops = (p.dst_pos + p.ring_size - p.src_pos) % p.ring_size + 1;
      placement_[i] = p;
      ring_flows_[f.ring].push_back(i);
    }
    buffer_bound_.resize(topo.rings().size());
    capacity_.resize(topo.rings().size());
    for (const auto& ring : topo.rings()) {
      buffer_bound_[ring.id].assign(ring.size(), 0);
      capacity_[ring.id] = fs.ring_capacity(ring.id);
      for (auto i : ring_flows_[ring.id]) {
        auto& b = buffer_bound_[ring.id][placement_[i].src_pos];
        b = std::max(b, fs[i].length - 1);
      }
    }
    sets_.resize(n);
    for (std::size_t i = 0; i < n; ++i) build_direct(i);
    for (std::size_t i = 0; i < n; ++i) build_indirect(i);
  }

  const Flowset& flowset() const noexcept { return *fs_; }
  std::size_t size() const noexcept { return fs_->size(); }
  const Placement& placement(std::size_t i) const { return placement_[i]; }
  const InterferenceSets& sets(std::size_t i) const { return sets_[i]; }
  const std::vector<std::size_t>& ring_flows(RingId ring) const { return ring_flows_[ring]; }
  Cycles capacity(RingId ring) const { return capacity_[ring]; }
  /// Buffer bound of the switch at `pos` on `ring`.
  Cycles buffer_bound(RingId ring, std::size_t pos) const { return buffer_bound_[ring][pos]; }

  /// True when `j`'s path strictly contains the switch at ring position `pos`.
  bool passes_through(std::size_t j, std::size_t pos) const {
    const auto& p = placement_[j];
    auto off = (pos + p.ring_size - p.src_pos) % p.ring_size;
    return off > 0 && off + 1 < p.hops;
  }

  /// True when the two flows use at least one common link: injection link,
  /// ring link or ejection link of the same ring.
  bool share_links(std::size_t a, std::size_t b) const {
    const auto& fa = (*fs_)[a];
    const auto& fb = (*fs_)[b];
    if (fa.ring != fb.ring) return false;
    const auto& pa = placement_[a];
    const auto& pb = placement_[b];
    if (pa.src_pos == pb.src_pos || pa.dst_pos == pb.dst_pos) return true;
    // Ring links are identified by their upstream switch position.
    auto r = pa.ring_size;
    for (std::size_t k = 0; k + 1 < pa.hops; ++k) {
      auto link = (pa.src_pos + k) % r;
      auto off = (link + r - pb.src_pos) % r;
      if (off + 1 < pb.hops) return true;
    }
    return false;
  }

 private:
  void build_direct(std::size_t i) {
    const auto& fi = (*fs_)[i];
    const auto& pi = placement_[i];
    auto& s = sets_[i];
    const auto r = pi.ring_size;
    for (auto j : ring_flows_[fi.ring]) {
      if (j == i) continue;
      s.ring_all.push_back(j);
      const auto& pj = placement_[j];
      if (pj.src_pos == pi.src_pos) {
        s.in_ring.push_back(j);
      } else if (passes_through(j, pi.src_pos)) {
        s.up.push_back(j);
      } else {
        auto off = (pj.src_pos + r - pi.src_pos) % r;
        if (off > 0 && off + 1 < pi.hops) s.down.push_back(j);
      }
    }
    for (std::size_t j = 0; j < fs_->size(); ++j)
      if (j != i && (*fs_)[j].src == fi.src) s.in_core.push_back(j);
  }

  void build_indirect(std::size_t i) {
    std::set<std::size_t> found;
    for (auto m : sets_[i].up) {
      auto consider = [&](std::size_t k) {
        if (k != i && !share_links(i, k)) found.insert(k);
      };
      for (auto k : sets_[m].up) consider(k);
      for (auto k : sets_[m].in_ring) consider(k);
    }
    sets_[i].upind.assign(found.begin(), found.end());
  }

  const Flowset* fs_;
  std::vector<Placement> placement_;
  std::vector<std::vector<std::size_t>> ring_flows_;
  std::vector<std::vector<Cycles>> buffer_bound_;
  std::vector<Cycles> capacity_;
  std::vector<InterferenceSets> sets_;
};

/// Interference sets of `id` expressed as flow ids.
struct InterferenceIds {
  std::vector<FlowId> up, down, in_ring, in_core, upind, ring_all;
};

inline InterferenceIds interference_sets(const InterferenceModel& model, FlowId id) {
  const auto& fs = model.flowset();
  const auto& s = model.sets(fs.index_of(id));
  auto ids = [&fs](const std::vector<std::size_t>& v) {
    std::vector<FlowId> out;
    for (auto j : v) out.push_back(fs[j].id);
    std::sort(out.begin(), out.end());
    return out;
  };
  return {ids(s.up), ids(s.down), ids(s.in_ring), ids(s.in_core), ids(s.upind), ids(s.ring_all)};
}

inline InterferenceIds interference_sets(const Flowset& fs, FlowId id) {
  InterferenceModel model(fs);
  return interference_sets(model, id);
}

}  // namespace rlnoc
