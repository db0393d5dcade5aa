#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rlnoc/analysis.hpp"

namespace rlnoc {

enum class ReleasePolicy { periodic_offset, sporadic, scripted };

struct SimConfig {
  std::uint64_t seed = 1;
  Cycles horizon = 1'000'000;
  ReleasePolicy policy = ReleasePolicy::periodic_offset;
  /// Extra cycles allowed after the horizon for in-flight packets to drain.
  Cycles drain_limit = 1'000'000;
  bool trace = false;
  /// Release instants (flow id, cycle) used by the scripted policy.
  std::vector<std::pair<FlowId, Cycles>> script;
};

/// Link sharing of the simulated switches.
struct HardwareProfile {
  Injection injection = Injection::independent;
  Ejection ejection = Ejection::independent;

  static HardwareProfile from(const AnalysisConfig& cfg) { return {cfg.injection, cfg.ejection}; }
};

class ProtocolViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct FlowOutcome {
  FlowId id = 0;
  std::uint64_t released = 0;
  std::uint64_t delivered = 0;
  Cycles max_latency = 0;
  double mean_latency = 0.0;
  std::uint64_t max_deflections = 0;
};

struct TraceEvent {
  enum class Kind { release, inject, deflect, eject };
  Cycles cycle = 0;
  Kind kind = Kind::release;
  FlowId flow = 0;
  std::uint64_t packet = 0;
};

/// Counters for protocol invariants checked while simulating; all zero on a
/// correct run.
struct InvariantCounters {
  std::uint64_t link_overuse = 0;       // >1 flit on a ring or ejection link in a cycle
  std::uint64_t non_contiguous = 0;     // packet flits ejected out of order or with gaps
  std::uint64_t interleaved = 0;        // injection of two packets interleaved on a link
  std::uint64_t undelivered = 0;        // released packets never fully ejected
  std::uint64_t flits_lost = 0;         // injected flits minus ejected flits at the end
  std::uint64_t independent_deflections = 0;

  bool clean() const noexcept {
    return link_overuse == 0 && non_contiguous == 0 && interleaved == 0 && undelivered == 0 &&
           flits_lost == 0 && independent_deflections == 0;
  }
  friend bool operator==(const InvariantCounters&, const InvariantCounters&) = default;
};

struct SimOutcome {
  std::uint64_t seed = 0;
  Cycles cycles = 0;
  std::vector<FlowOutcome> flows;
  InvariantCounters invariants;
  std::uint64_t packets = 0;
  std::uint64_t deflections = 0;
  std::vector<TraceEvent> trace;

  const FlowOutcome* find(FlowId id) const {
    for (const auto& f : flows)
      if (f.id == id) return &f;
    return nullptr;
  }
};

namespace detail {

class Simulator {
 public:
  Simulator(const Flowset& fs, const SimConfig& cfg, const HardwareProfile& hw)
      : fs_(fs), topo_(fs.topology()), cfg_(cfg), hw_(hw), rng_(cfg.seed) {
    const auto nrings = topo_.rings().size();
    rings_.resize(nrings);
    for (const auto& ring : topo_.rings()) {
      auto& rs = rings_[ring.id];
      const auto r = ring.size();
      rs.size = r;
      rs.capacity = fs.ring_capacity(ring.id);
      rs.fb.assign(r, Flit{});
      rs.out.assign(r, Flit{});
      rs.slots.resize(r);
      rs.core.resize(r);
      for (std::size_t p = 0; p < r; ++p) {
        rs.core[p] = static_cast<std::uint32_t>(topo_.index(ring.switches[p]));
        rs.slots[p].buffer.assign(rs.capacity + 1, Flit{});
      }
    }
    const auto cores = topo_.core_count();
    queues_.resize(hw_.injection == Injection::shared ? cores : cores * nrings);
    links_.assign(hw_.ejection == Ejection::shared ? cores : cores * nrings, Link{});
    flow_src_pos_.resize(fs.size());
    flow_dst_pos_.resize(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) {
      flow_src_pos_[i] = static_cast<std::uint32_t>(topo_.position(fs[i].ring, fs[i].src));
      flow_dst_pos_[i] = static_cast<std::uint32_t>(topo_.position(fs[i].ring, fs[i].dst));
    }
    stats_.resize(fs.size());
    next_release_.resize(fs.size());
    if (cfg_.policy == ReleasePolicy::scripted) {
      for (auto [id, t] : cfg_.script) releases_.push({t, static_cast<std::uint32_t>(fs.index_of(id))});
    }
    for (std::size_t i = 0; cfg_.policy != ReleasePolicy::scripted && i < fs.size(); ++i) {
      const auto& f = fs[i];
      Cycles first = uniform(0, f.period - 1);
      if (cfg_.policy == ReleasePolicy::periodic_offset) {
        offset_.push_back(first);
        first += uniform(0, f.jitter);
      }
      schedule(i, first);
    }
    released_count_.assign(fs.size(), 0);
  }

  SimOutcome run() {
    const Cycles stop = cfg_.horizon + cfg_.drain_limit;
    now_ = 0;
    while (now_ < stop) {
      if (in_network_ == 0 && queued_ == 0) {
        if (releases_.empty()) break;
        now_ = std::max(now_, releases_.top().time);
        if (now_ >= cfg_.horizon) break;
      }
      release_due();
      step();
      ++now_;
    }
    return finish();
  }

 private:
  struct Flit {
    std::int32_t packet = -1;
    std::uint32_t index = 0;
    bool empty() const noexcept { return packet < 0; }
  };

  struct Slot {
    std::vector<Flit> buffer;  // circular, capacity B° + 1
    std::uint32_t head = 0;
    std::uint32_t count = 0;
    std::int32_t injecting = -1;
    std::uint32_t next_flit = 0;
  };

  struct RingState {
    std::size_t size = 0;
    Cycles capacity = 0;
    std::vector<Flit> fb;   // flit received this cycle
    std::vector<Flit> out;  // flit sent on the output port this cycle
    std::vector<Slot> slots;
    std::vector<std::uint32_t> core;
    std::uint64_t flits = 0;    // flits currently on the ring
    std::uint64_t pending = 0;  // released packets not yet fully injected
  };

  struct Packet {
    std::uint32_t flow = 0;
    Cycles release = 0;
    std::uint64_t seq = 0;
    std::uint32_t ejected = 0;
    std::uint32_t injected = 0;
    std::uint32_t deflections = 0;
    Cycles last_eject = 0;
    bool ejecting = false;
  };

  struct Link {
    std::int32_t owner = -1;
    Cycles last_use = ~Cycles{0};
  };

  struct Release {
    Cycles time;
    std::uint32_t flow;
    bool operator>(const Release& o) const {
      return time != o.time ? time > o.time : flow > o.flow;
    }
  };

  struct FlowStats {
    std::uint64_t delivered = 0;
    Cycles max_latency = 0;
    Cycles sum_latency = 0;
    std::uint64_t max_deflections = 0;
  };

  Cycles uniform(Cycles lo, Cycles hi) {
    return std::uniform_int_distribution<Cycles>(lo, hi)(rng_);
  }

  void schedule(std::size_t flow, Cycles t) {
    next_release_[flow] = t;
    releases_.push({t, static_cast<std::uint32_t>(flow)});
  }

  std::size_t queue_of(std::size_t flow) const {
    const auto core = topo_.index(fs_[flow].src);
    return hw_.injection == Injection::shared ? core : core * rings_.size() + fs_[flow].ring;
  }

  std::size_t link_of(std::uint32_t core, RingId ring) const {
    return hw_.ejection == Ejection::shared ? core : core * rings_.size() + ring;
  }

  void release_due() {
    while (!releases_.empty() && releases_.top().time == now_) {
      auto flow = releases_.top().flow;
      releases_.pop();
      if (now_ >= cfg_.horizon) continue;
      Packet pk;
      pk.flow = flow;
      pk.release = now_;
      pk.seq = packets_.size();
      packets_.push_back(pk);
      queues_[queue_of(flow)].push_back(static_cast<std::uint32_t>(pk.seq));
      ++queued_;
      ++rings_[fs_[flow].ring].pending;
      ++released_count_[flow];
      log(TraceEvent::Kind::release, pk.seq);
      if (cfg_.policy == ReleasePolicy::scripted) continue;
      const auto& f = fs_[flow];
      Cycles next;
      if (cfg_.policy == ReleasePolicy::periodic_offset) {
        next = offset_[flow] + released_count_[flow] * f.period + uniform(0, f.jitter);
      } else {
        next = now_ + f.period + uniform(0, f.period);
      }
      schedule(flow, next);
    }
  }

  void log(TraceEvent::Kind kind, std::uint64_t packet) {
    if (!cfg_.trace) return;
    trace_.push_back({now_, kind, fs_[packets_[packet].flow].id, packet});
  }

  bool older(std::uint32_t a, std::uint32_t b) const {
    const auto& pa = packets_[a];
    const auto& pb = packets_[b];
    if (pa.release != pb.release) return pa.release < pb.release;
    auto fa = fs_[pa.flow].id, fb = fs_[pb.flow].id;
    if (fa != fb) return fa < fb;
    return pa.seq < pb.seq;
  }

  void step() {
    // Links deliver last cycle's output flits into the downstream flit buffers.
    for (std::size_t o = 0; o < rings_.size(); ++o) {
      auto& rs = rings_[o];
      if (rs.flits == 0 && rs.pending == 0) continue;
      for (std::size_t p = 0; p < rs.size; ++p) rs.fb[p] = rs.out[(p + rs.size - 1) % rs.size];
      std::fill(rs.out.begin(), rs.out.end(), Flit{});
    }
    arbitrate_ejection();
    for (std::size_t o = 0; o < rings_.size(); ++o) {
      auto& rs = rings_[o];
      if (rs.flits == 0 && rs.pending == 0) continue;
      for (std::size_t p = 0; p < rs.size; ++p) switch_cycle(o, p);
    }
  }

  /// Headers reaching their destination contend for the ejection link; the
  /// oldest wins a free link and everyone else is deflected for one circuit.
  void arbitrate_ejection() {
    contenders_.clear();
    for (std::size_t o = 0; o < rings_.size(); ++o) {
      auto& rs = rings_[o];
      if (rs.flits == 0) continue;
      for (std::size_t p = 0; p < rs.size; ++p) {
        const auto& f = rs.fb[p];
        if (f.empty() || f.index != 0) continue;
        const auto& pk = packets_[static_cast<std::size_t>(f.packet)];
        if (pk.ejected == 0 && flow_dst_pos_[pk.flow] == p && fs_[pk.flow].ring == o)
          contenders_.push_back({link_of(rs.core[p], o), static_cast<std::uint32_t>(f.packet)});
      }
    }
    std::sort(contenders_.begin(), contenders_.end(), [this](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : older(a.second, b.second);
    });
    for (std::size_t k = 0; k < contenders_.size(); ++k) {
      auto [link, pkt] = contenders_[k];
      auto& pk = packets_[pkt];
      bool first_for_link = k == 0 || contenders_[k - 1].first != link;
      if (first_for_link && links_[link].owner < 0) {
        links_[link].owner = static_cast<std::int32_t>(pkt);
        pk.ejecting = true;
      } else {
        pk.ejecting = false;
        ++pk.deflections;
        ++deflections_;
        if (hw_.ejection == Ejection::independent) ++inv_.independent_deflections;
        log(TraceEvent::Kind::deflect, pkt);
      }
    }
  }

  void push(RingState& rs, Slot& s, Flit f) {
    if (s.count >= rs.capacity)
      throw ProtocolViolation("packet buffer overflow (capacity " + std::to_string(rs.capacity) +
                              ") at cycle " + std::to_string(now_));
    s.buffer[(s.head + s.count) % s.buffer.size()] = f;
    ++s.count;
  }

  Flit pop(Slot& s) {
    auto f = s.buffer[s.head];
    s.head = static_cast<std::uint32_t>((s.head + 1) % s.buffer.size());
    --s.count;
    return f;
  }

  void switch_cycle(std::size_t o, std::size_t p) {
    auto& rs = rings_[o];
    auto& s = rs.slots[p];
    Flit in = rs.fb[p];
    if (!in.empty()) {
      auto& pk = packets_[static_cast<std::size_t>(in.packet)];
      if (flow_dst_pos_[pk.flow] == p && pk.ejecting) {
        eject(rs, o, p, in);
        in = Flit{};
      }
    }

    Flit sent;
    if (s.injecting >= 0) {
      sent = {s.injecting, s.next_flit};
      advance_injection(rs, s);
      if (!in.empty()) push(rs, s, in);
    } else if (s.count > 0) {
      sent = pop(s);
      if (!in.empty()) push(rs, s, in);
    } else if (!in.empty()) {
      sent = in;
    } else if (auto head = eligible_head(o, rs.core[p]); head >= 0) {
      s.injecting = head;
      s.next_flit = 0;
      sent = {head, 0};
      ++rs.flits;
      ++in_network_;
      log(TraceEvent::Kind::inject, static_cast<std::uint64_t>(head));
      advance_injection(rs, s);
      // advance_injection counted the header once already
      --rs.flits;
      --in_network_;
    }
    rs.out[p] = sent;
  }

  std::int32_t eligible_head(std::size_t ring, std::uint32_t core) {
    auto& q = queues_[hw_.injection == Injection::shared ? core : core * rings_.size() + ring];
    if (q.empty()) return -1;
    const auto& pk = packets_[q.front()];
    if (fs_[pk.flow].ring != ring || pk.release >= now_) return -1;
    return static_cast<std::int32_t>(q.front());
  }

  /// Puts the next flit of the injecting packet on the ring.
  void advance_injection(RingState& rs, Slot& s) {
    auto& pk = packets_[static_cast<std::size_t>(s.injecting)];
    if (pk.injected != s.next_flit) ++inv_.interleaved;
    ++pk.injected;
    ++s.next_flit;
    ++rs.flits;
    ++in_network_;
    ++flits_injected_;
    if (s.next_flit == fs_[pk.flow].length) {
      queues_[queue_of(pk.flow)].pop_front();
      --queued_;
      --rs.pending;
      s.injecting = -1;
    }
  }

  void eject(RingState& rs, std::size_t ring, std::size_t p, Flit f) {
    auto& pk = packets_[static_cast<std::size_t>(f.packet)];
    auto& link = links_[link_of(rs.core[p], ring)];
    if (link.last_use == now_) ++inv_.link_overuse;
    link.last_use = now_;
    if (f.index != pk.ejected || (pk.ejected > 0 && pk.last_eject + 1 != now_))
      ++inv_.non_contiguous;
    ++pk.ejected;
    pk.last_eject = now_;
    --rs.flits;
    --in_network_;
    ++flits_ejected_;
    const auto& flow = fs_[pk.flow];
    if (pk.ejected == flow.length) {
      link.owner = -1;
      pk.ejecting = false;
      auto& st = stats_[pk.flow];
      const auto latency = now_ - pk.release;
      ++st.delivered;
      st.max_latency = std::max(st.max_latency, latency);
      st.sum_latency += latency;
      st.max_deflections = std::max<std::uint64_t>(st.max_deflections, pk.deflections);
      log(TraceEvent::Kind::eject, static_cast<std::uint64_t>(f.packet));
    }
  }

  SimOutcome finish() {
    SimOutcome out;
    out.seed = cfg_.seed;
    out.cycles = now_;
    out.packets = packets_.size();
    out.deflections = deflections_;
    for (std::size_t i = 0; i < fs_.size(); ++i) {
      const auto& st = stats_[i];
      FlowOutcome fo;
      fo.id = fs_[i].id;
      fo.released = released_count_[i];
      fo.delivered = st.delivered;
      fo.max_latency = st.max_latency;
      fo.mean_latency = st.delivered ? static_cast<double>(st.sum_latency) /
                                           static_cast<double>(st.delivered)
                                     : 0.0;
      fo.max_deflections = st.max_deflections;
      out.flows.push_back(fo);
      inv_.undelivered += fo.released - fo.delivered;
    }
    inv_.flits_lost = flits_injected_ - flits_ejected_;
    out.invariants = inv_;
    out.trace = std::move(trace_);
    return out;
  }

  const Flowset& fs_;
  const Topology& topo_;
  SimConfig cfg_;
  HardwareProfile hw_;
  std::mt19937_64 rng_;
  Cycles now_ = 0;

  std::vector<RingState> rings_;
  std::vector<std::deque<std::uint32_t>> queues_;
  std::vector<Link> links_;
  std::vector<std::uint32_t> flow_src_pos_;
  std::vector<std::uint32_t> flow_dst_pos_;
  std::vector<Packet> packets_;
  std::vector<Cycles> offset_;
  std::vector<Cycles> next_release_;
  std::vector<std::uint64_t> released_count_;
  std::priority_queue<Release, std::vector<Release>, std::greater<>> releases_;
  std::vector<std::pair<std::size_t, std::uint32_t>> contenders_;
  std::vector<FlowStats> stats_;
  std::vector<TraceEvent> trace_;
  InvariantCounters inv_;
  std::uint64_t in_network_ = 0;
  std::uint64_t queued_ = 0;
  std::uint64_t deflections_ = 0;
  std::uint64_t flits_injected_ = 0;
  std::uint64_t flits_ejected_ = 0;
};

}  // namespace detail

/// Cycle-accurate run of the routerless switch protocol. Deterministic for a
/// given (flowset, config, hardware profile).
inline SimOutcome simulate(const Flowset& fs, const SimConfig& cfg, const HardwareProfile& hw) {
  return detail::Simulator(fs, cfg, hw).run();
}

struct OracleViolation {
  enum class Kind { latency, deflections, undelivered };
  FlowId flow = 0;
  Kind kind = Kind::latency;
  std::uint64_t observed = 0;
  std::uint64_t bound = 0;
};

inline std::string_view to_string(OracleViolation::Kind k) {
  switch (k) {
    case OracleViolation::Kind::latency: return "latency";
    case OracleViolation::Kind::deflections: return "deflections";
    case OracleViolation::Kind::undelivered: return "undelivered";
  }
  return "?";
}

/// Flows whose observed behaviour breaks the analytical bounds. An empty
/// report means the analysis was safe for this run.
inline std::vector<OracleViolation> oracle_check(const Flowset& fs, const FlowsetResult& analysis,
                                                 const SimOutcome& sim) {
  std::vector<OracleViolation> report;
  if (!analysis.schedulable())
    throw std::invalid_argument("oracle_check needs a schedulable analysis result");
  for (const auto& f : fs.flows()) {
    const auto* bound = analysis.find(f.id);
    const auto* seen = sim.find(f.id);
    if (!bound || !seen) continue;
    if (seen->max_latency > bound->R)
      report.push_back({f.id, OracleViolation::Kind::latency, seen->max_latency, bound->R});
    if (seen->max_deflections > bound->maxloop)
      report.push_back({f.id, OracleViolation::Kind::deflections, seen->max_deflections, bound->maxloop});
    if (seen->delivered < seen->released)
      report.push_back({f.id, OracleViolation::Kind::undelivered, seen->released - seen->delivered, 0});
  }
  return report;
}

}  // namespace rlnoc
