#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rlnoc/traffic.hpp"

namespace rlnoc {

enum class Injection { independent, shared };
enum class Ejection { independent, shared };
enum class JitterMethod { simplified, iterative };
enum class MaxloopMode { oldest_first, fixed };
enum class IposFormula { coarse, tight };

/// Selects which latency bound is computed. Profiles follow the naming
/// `<k>D_<NI|IU>_<II|SI>`: k deflections (0 = independent ejection, `OF` =
/// Oldest-First count), non-iterative or iterative jitter, independent or
/// shared injection.
struct AnalysisConfig {
  Injection injection = Injection::independent;
  Ejection ejection = Ejection::independent;
  JitterMethod jitter = JitterMethod::iterative;
  MaxloopMode maxloop_mode = MaxloopMode::fixed;
  unsigned fixed_maxloop = 0;
  IposFormula ipos = IposFormula::tight;
  bool ipos_exclude_destination = false;
  std::size_t iteration_cap = 1000;

  static AnalysisConfig from_profile(std::string_view name) {
    auto bad = [&] {
      return std::invalid_argument("unknown analysis profile '" + std::string(name) +
                                   "' (expected e.g. 0D_IU_SI, 2D_NI_II, OFD_IU_SI)");
    };
    if (name.size() < 8) throw bad();
    auto d = name.find('D');
    if (d == std::string_view::npos || d == 0) throw bad();
    auto head = name.substr(0, d);
    auto rest = name.substr(d);
    if (rest.size() != 7 || rest[1] != '_' || rest[4] != '_') throw bad();
    AnalysisConfig cfg;
    if (head == "OF") {
      cfg.ejection = Ejection::shared;
      cfg.maxloop_mode = MaxloopMode::oldest_first;
    } else {
      unsigned k = 0;
      for (char c : head) {
        if (c < '0' || c > '9') throw bad();
        k = k * 10 + static_cast<unsigned>(c - '0');
      }
      cfg.fixed_maxloop = k;
      cfg.ejection = k == 0 ? Ejection::independent : Ejection::shared;
    }
    auto jit = rest.substr(2, 2);
    auto inj = rest.substr(5, 2);
    if (jit == "NI") cfg.jitter = JitterMethod::simplified;
    else if (jit == "IU") cfg.jitter = JitterMethod::iterative;
    else throw bad();
    if (inj == "II") cfg.injection = Injection::independent;
    else if (inj == "SI") cfg.injection = Injection::shared;
    else throw bad();
    return cfg;
  }

  std::string profile() const {
    std::string s = ejection == Ejection::independent ? "0"
                    : maxloop_mode == MaxloopMode::oldest_first ? "OF"
                                                                : std::to_string(fixed_maxloop);
    s += jitter == JitterMethod::simplified ? "D_NI_" : "D_IU_";
    s += injection == Injection::independent ? "II" : "SI";
    return s;
  }
};

// ---------------------------------------------------------------------------
// Busy-period fixed point

/// One interfering flow inside a busy-period recurrence:
/// copies * ceil((w + jitter) / period) * length.
struct BusyTerm {
  Cycles period = 1;
  Cycles jitter = 0;
  Cycles length = 0;
  Cycles copies = 1;
};

inline Cycles ceil_div(Cycles a, Cycles b) { return a / b + (a % b != 0); }

/// Least fixed point of w = base + sum(terms(w)), iterated from w = base.
/// Returns nullopt as soon as an iterate exceeds `limit`. When `iterates` is
/// given, every visited value is appended to it.
inline std::optional<Cycles> busy_period(Cycles base, std::span<const BusyTerm> terms,
                                         Cycles limit,
                                         std::vector<Cycles>* iterates = nullptr) {
  Cycles w = base;
  if (iterates) iterates->push_back(w);
  if (w > limit) return std::nullopt;
  for (;;) {
    Cycles next = base;
    for (const auto& t : terms) next += t.copies * ceil_div(w + t.jitter, t.period) * t.length;
    if (iterates) iterates->push_back(next);
    if (next > limit || next < w) return std::nullopt;
    if (next == w) return w;
    w = next;
  }
}

// ---------------------------------------------------------------------------
// Per-flow terms

inline Cycles basic_latency(const InterferenceModel& m, std::size_t i) {
  return m.placement(i).hops + m.flowset()[i].length - 1;
}

inline Cycles loop_latency(const InterferenceModel& m, std::size_t i) {
  return m.placement(i).ring_size + m.flowset()[i].length;
}

/// Largest payload (L - 1) injected at `sw` into `ring`; 0 with no injector.
inline Cycles buffer_bound(const Flowset& fs, RingId ring, Coord sw) {
  const auto& topo = fs.topology();
  if (ring >= topo.rings().size() || !topo.contains(sw) || !topo.on_ring(ring, sw))
    throw TopologyError(TopologyError::Kind::not_on_ring,
                        "switch " + to_string(sw) + " is not on ring " + std::to_string(ring));
  Cycles best = 0;
  for (const auto& f : fs.flows())
    if (f.ring == ring && f.src == sw) best = std::max(best, f.length - 1);
  return best;
}

inline Cycles resolve_maxloop(const InterferenceModel& m, std::size_t i, const AnalysisConfig& cfg) {
  if (cfg.ejection == Ejection::independent) return 0;
  if (cfg.maxloop_mode == MaxloopMode::fixed) return cfg.fixed_maxloop;
  const auto& fs = m.flowset();
  Cycles others = 0;
  for (std::size_t j = 0; j < fs.size(); ++j)
    if (j != i && fs[j].dst == fs[i].dst) ++others;
  return others;
}

inline std::vector<Cycles> resolve_maxloops(const InterferenceModel& m, const AnalysisConfig& cfg) {
  std::vector<Cycles> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = resolve_maxloop(m, i, cfg);
  return out;
}

/// Interference after injection, including `maxloop` full-ring circuits.
inline Cycles i_pos(const InterferenceModel& m, std::size_t i, const AnalysisConfig& cfg,
                    Cycles maxloop) {
  const auto& f = m.flowset()[i];
  const auto& p = m.placement(i);
  const auto downstream = p.hops - 1 - (cfg.ipos_exclude_destination ? 1 : 0);
  if (cfg.ipos == IposFormula::coarse) {
    const auto cap = m.capacity(f.ring);
    return downstream * cap + maxloop * p.ring_size * cap;
  }
  Cycles along = 0;
  for (std::size_t k = 1; k <= downstream; ++k)
    along += m.buffer_bound(f.ring, (p.src_pos + k) % p.ring_size);
  Cycles loop = 0;
  if (maxloop > 0)
    for (std::size_t k = 0; k < p.ring_size; ++k) loop += m.buffer_bound(f.ring, k);
  return along + maxloop * loop;
}

namespace detail {

inline void append_up_terms(const InterferenceModel& m, std::size_t i,
                            std::span<const Cycles> jk, std::vector<BusyTerm>& terms) {
  const auto& fs = m.flowset();
  for (auto j : m.sets(i).up)
    terms.push_back({fs[j].period, fs[j].jitter + jk[j], fs[j].length, 1});
}

/// Deflected packets of every flow on the ring (the analysed flow included)
/// reappear as maxloop_j replicas of their flow.
inline void append_replica_terms(const InterferenceModel& m, std::size_t i,
                                 std::span<const Cycles> jk, std::span<const Cycles> maxloops,
                                 std::vector<BusyTerm>& terms) {
  const auto& fs = m.flowset();
  for (auto j : m.ring_flows(fs[i].ring))
    if (maxloops[j] > 0)
      terms.push_back({fs[j].period, fs[j].jitter + jk[j], fs[j].length, maxloops[j]});
}

inline Cycles in_ring_load(const InterferenceModel& m, std::size_t i) {
  Cycles sum = 0;
  for (auto j : m.sets(i).in_ring) sum += m.flowset()[j].length;
  return sum;
}

}  // namespace detail

/// Classic busy period of the injection switch's output link with an
/// exclusive injection link and no deflections.
inline std::optional<Cycles> i_pre_basic(const InterferenceModel& m, std::size_t i,
                                         std::span<const Cycles> jk, Cycles limit,
                                         std::vector<Cycles>* iterates = nullptr) {
  std::vector<BusyTerm> terms;
  detail::append_up_terms(m, i, jk, terms);
  return busy_period(1 + detail::in_ring_load(m, i), terms, limit, iterates);
}

/// Exclusive injection link plus replicas of deflected packets on the ring.
inline std::optional<Cycles> i_pre_defl_independent(const InterferenceModel& m, std::size_t i,
                                                    std::span<const Cycles> jk,
                                                    std::span<const Cycles> maxloops,
                                                    Cycles limit,
                                                    std::vector<Cycles>* iterates = nullptr) {
  std::vector<BusyTerm> terms;
  detail::append_up_terms(m, i, jk, terms);
  detail::append_replica_terms(m, i, jk, maxloops, terms);
  return busy_period(1 + detail::in_ring_load(m, i), terms, limit, iterates);
}

/// Wait at the head of a shared injection queue for an idle ring cycle.
/// Replica terms vanish when every maxloop is zero.
inline std::optional<Cycles> i_pre_idle(const InterferenceModel& m, std::size_t i,
                                        std::span<const Cycles> jk,
                                        std::span<const Cycles> maxloops, Cycles limit,
                                        std::vector<Cycles>* iterates = nullptr) {
  std::vector<BusyTerm> terms;
  detail::append_up_terms(m, i, jk, terms);
  detail::append_replica_terms(m, i, jk, maxloops, terms);
  return busy_period(1, terms, limit, iterates);
}

/// Time spent behind one packet of every other flow leaving the same core.
inline Cycles i_pre_queue(const InterferenceModel& m, std::size_t i,
                          std::span<const Cycles> idle) {
  Cycles sum = 0;
  for (auto j : m.sets(i).in_core) sum += m.flowset()[j].length + idle[j];
  return sum;
}

inline Cycles i_pre_shared(Cycles idle, Cycles queue) { return idle + queue; }

// ---------------------------------------------------------------------------
// Flowset analysis

struct FlowResult {
  FlowId id = 0;
  Cycles C = 0;
  Cycles C_loop = 0;
  Cycles maxloop = 0;
  Cycles I_pre_idle = 0;
  Cycles I_pre_queue = 0;
  Cycles I_pre = 0;
  Cycles I_pos = 0;
  Cycles Jk = 0;
  Cycles R = 0;
  Cycles D = 0;
  bool schedulable = false;
};

enum class Verdict { schedulable, unschedulable, iteration_cap_exceeded };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::schedulable: return "schedulable";
    case Verdict::unschedulable: return "unschedulable";
    case Verdict::iteration_cap_exceeded: return "iteration-cap-exceeded";
  }
  return "?";
}

struct FlowsetResult {
  Verdict verdict = Verdict::schedulable;
  /// Per-flow results in flowset order; empty unless schedulable.
  std::vector<FlowResult> flows;
  std::optional<FlowId> failing_flow;
  std::size_t iterations = 0;

  bool schedulable() const noexcept { return verdict == Verdict::schedulable; }
  const FlowResult* find(FlowId id) const {
    for (const auto& f : flows)
      if (f.id == id) return &f;
    return nullptr;
  }
};

/// Optional instrumentation of an analysis run.
struct AnalysisTrace {
  bool record_inner = false;
  /// Every inner busy-period iterate sequence, in evaluation order.
  std::vector<std::vector<Cycles>> inner;
  /// R of every flow after each outer pass (0 = not yet computed).
  std::vector<std::vector<Cycles>> outer;
};

namespace detail {

class Analyzer {
 public:
  Analyzer(const InterferenceModel& m, const AnalysisConfig& cfg, AnalysisTrace* trace)
      : m_(m), cfg_(cfg), trace_(trace), n_(m.size()) {
    maxloop_ = resolve_maxloops(m, cfg);
    base_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      auto& r = base_[i];
      r.id = m.flowset()[i].id;
      r.D = m.flowset()[i].deadline;
      r.C = basic_latency(m, i);
      r.C_loop = loop_latency(m, i);
      r.maxloop = maxloop_[i];
      r.I_pos = i_pos(m, i, cfg, r.maxloop);
    }
  }

  FlowsetResult run() {
    FlowsetResult out;
    for (std::size_t i = 0; i < n_; ++i) {
      if (fixed_part(i) > base_[i].D) return fail(out, i);
    }
    std::vector<Cycles> jk(n_, 0);
    std::vector<Cycles> R(n_, 0);
    std::vector<FlowResult> rows = base_;

    if (cfg_.jitter == JitterMethod::simplified) {
      for (std::size_t i = 0; i < n_; ++i) jk[i] = base_[i].D - base_[i].C;
      out.iterations = 1;
      if (auto bad = pass(rows, jk, R, /*update_jitter=*/false)) return fail(out, *bad);
      record(R);
      return finish(out, rows, jk);
    }

    for (std::size_t it = 1; it <= cfg_.iteration_cap; ++it) {
      out.iterations = it;
      bool change = false;
      if (auto bad = pass(rows, jk, R, /*update_jitter=*/true, &change)) return fail(out, *bad);
      record(R);
      if (!change) return finish(out, rows, jk);
    }
    out.verdict = Verdict::iteration_cap_exceeded;
    return out;
  }

 private:
  Cycles fixed_part(std::size_t i) const {
    const auto& r = base_[i];
    return r.C + r.C_loop * r.maxloop + r.I_pos;
  }

  Cycles limit(std::size_t i) const { return base_[i].D - fixed_part(i); }

  std::vector<Cycles>* inner_sink() {
    if (!trace_ || !trace_->record_inner) return nullptr;
    trace_->inner.emplace_back();
    return &trace_->inner.back();
  }

  void record(const std::vector<Cycles>& R) {
    if (trace_) trace_->outer.push_back(R);
  }

  std::optional<Cycles> pre_exclusive(std::size_t i, std::span<const Cycles> jk) {
    if (cfg_.ejection == Ejection::independent)
      return i_pre_basic(m_, i, jk, limit(i), inner_sink());
    return i_pre_defl_independent(m_, i, jk, maxloop_, limit(i), inner_sink());
  }

  /// One sweep over all flows. Returns the index of the first flow that
  /// cannot meet its deadline.
  std::optional<std::size_t> pass(std::vector<FlowResult>& rows, std::vector<Cycles>& jk,
                                  std::vector<Cycles>& R, bool update_jitter,
                                  bool* change = nullptr) {
    std::vector<Cycles> idle(n_, 0);
    if (cfg_.injection == Injection::shared) {
      for (std::size_t i = 0; i < n_; ++i) {
        auto v = i_pre_idle(m_, i, jk, maxloop_, limit(i), inner_sink());
        if (!v) return i;
        idle[i] = *v;
      }
    }
    for (std::size_t i = 0; i < n_; ++i) {
      auto& row = rows[i];
      if (cfg_.injection == Injection::shared) {
        row.I_pre_idle = idle[i];
        row.I_pre_queue = i_pre_queue(m_, i, idle);
        row.I_pre = i_pre_shared(row.I_pre_idle, row.I_pre_queue);
      } else {
        auto v = pre_exclusive(i, jk);
        if (!v) return i;
        row.I_pre_idle = *v;
        row.I_pre_queue = 0;
        row.I_pre = *v;
      }
      const auto r_new = fixed_part(i) + row.I_pre;
      if (r_new > row.D) return i;
      if (r_new != R[i]) {
        if (change) *change = true;
        R[i] = r_new;
        if (update_jitter) jk[i] = R[i] - row.C;
      }
      row.R = R[i];
    }
    return std::nullopt;
  }

  FlowsetResult& fail(FlowsetResult& out, std::size_t i) {
    out.verdict = Verdict::unschedulable;
    out.failing_flow = m_.flowset()[i].id;
    out.flows.clear();
    return out;
  }

  FlowsetResult& finish(FlowsetResult& out, std::vector<FlowResult>& rows,
                        const std::vector<Cycles>& jk) {
    for (std::size_t i = 0; i < n_; ++i) {
      rows[i].Jk = jk[i];
      rows[i].schedulable = rows[i].R <= rows[i].D;
    }
    out.verdict = Verdict::schedulable;
    out.flows = std::move(rows);
    return out;
  }

  const InterferenceModel& m_;
  const AnalysisConfig& cfg_;
  AnalysisTrace* trace_;
  std::size_t n_;
  std::vector<Cycles> maxloop_;
  std::vector<FlowResult> base_;
};

}  // namespace detail

/// Worst-case latency of every flow. Iterative jitter follows the two-phase
/// structure (all idle waits first, then queueing) when injection is shared.
inline FlowsetResult analyze(const InterferenceModel& model, const AnalysisConfig& cfg,
                             AnalysisTrace* trace = nullptr) {
  return detail::Analyzer(model, cfg, trace).run();
}

inline FlowsetResult analyze(const Flowset& fs, const AnalysisConfig& cfg,
                             AnalysisTrace* trace = nullptr) {
  InterferenceModel model(fs);
  return analyze(model, cfg, trace);
}

}  // namespace rlnoc
