#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rlnoc/analysis.hpp"

namespace rlnoc {

// ---------------------------------------------------------------------------
// Seeds

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of flowset `index` in benchmark family `family`. A family is one
/// (grid, packet range) combination; every flows-per-set value and every
/// configuration of a family uses prefixes of the same flowsets.
inline std::uint64_t family_seed(std::uint64_t master, std::uint64_t family, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ splitmix64(family + 1)) + index);
}

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers. Results must be
/// written to index-addressed storage so completion order never matters.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        auto i = next.fetch_add(1);
        if (i >= n || failed) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Schedulability sweep

struct SweepSpec {
  std::vector<std::pair<int, int>> grids{{4, 4}, {5, 5}};
  std::vector<std::pair<Cycles, Cycles>> packet_ranges{{16, 48}, {32, 96}, {48, 256}, {96, 512}};
  std::vector<std::size_t> flows;
  std::size_t flowsets_per_point = 100;
  std::vector<std::string> configs{"0D_NI_II", "0D_IU_II", "0D_NI_SI", "0D_IU_SI",
                                   "1D_IU_SI", "2D_IU_SI", "3D_IU_SI"};
  std::uint64_t master_seed = 1;
  unsigned threads = 0;

  /// Full scale: 100 flowsets per point, 20..400 flows in steps of 20.
  static SweepSpec paper() {
    SweepSpec s;
    for (std::size_t n = 20; n <= 400; n += 20) s.flows.push_back(n);
    return s;
  }

  /// CI scale: 25 flowsets per point, 40..400 flows in steps of 40.
  static SweepSpec fast() {
    SweepSpec s;
    s.flowsets_per_point = 25;
    for (std::size_t n = 40; n <= 400; n += 40) s.flows.push_back(n);
    return s;
  }

  void validate() const {
    if (grids.empty() || packet_ranges.empty() || configs.empty())
      throw std::invalid_argument("sweep needs at least one grid, packet range and config");
    if (flowsets_per_point == 0) throw std::invalid_argument("flowsets per point must be >= 1");
    for (const auto& c : configs) (void)AnalysisConfig::from_profile(c);
  }
};

struct SweepRow {
  int width = 0, height = 0;
  Cycles packet_min = 0, packet_max = 0;
  std::size_t flows = 0;
  std::string config;
  std::size_t schedulable = 0;
  std::size_t total = 0;

  double ratio() const { return total ? 100.0 * static_cast<double>(schedulable) / static_cast<double>(total) : 100.0; }
};

/// Rows are ordered grid, packet range, flows, config (spec order).
inline std::vector<SweepRow> sweep_schedulability(const SweepSpec& spec) {
  spec.validate();
  std::vector<AnalysisConfig> cfgs;
  for (const auto& c : spec.configs) cfgs.push_back(AnalysisConfig::from_profile(c));
  const std::size_t max_flows =
      spec.flows.empty() ? 0 : *std::max_element(spec.flows.begin(), spec.flows.end());
  const auto nf = spec.flows.size(), nc = cfgs.size();

  std::vector<SweepRow> rows;
  std::size_t family = 0;
  for (auto [w, h] : spec.grids) {
    auto topo = std::make_shared<const Topology>(generate_multi_ring(w, h));
    for (auto [pmin, pmax] : spec.packet_ranges) {
      // verdict[set][flows][config]
      std::vector<unsigned char> ok(spec.flowsets_per_point * nf * nc, 0);
      parallel_for(spec.flowsets_per_point, spec.threads, [&](std::size_t k) {
        BenchmarkParams bp;
        bp.flows_per_set = max_flows;
        bp.packet_min = pmin;
        bp.packet_max = pmax;
        bp.seed = family_seed(spec.master_seed, family, k);
        const auto full = generate_flowset(topo, bp);
        for (std::size_t a = 0; a < nf; ++a) {
          const auto fs = full.prefix(spec.flows[a]);
          InterferenceModel model(fs);
          for (std::size_t c = 0; c < nc; ++c)
            ok[(k * nf + a) * nc + c] = analyze(model, cfgs[c]).schedulable();
        }
      });
      for (std::size_t a = 0; a < nf; ++a) {
        for (std::size_t c = 0; c < nc; ++c) {
          SweepRow row{w, h, pmin, pmax, spec.flows[a], spec.configs[c], 0, spec.flowsets_per_point};
          for (std::size_t k = 0; k < spec.flowsets_per_point; ++k)
            row.schedulable += ok[(k * nf + a) * nc + c];
          rows.push_back(row);
        }
      }
      ++family;
    }
  }
  return rows;
}

inline std::string format_number(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "grid,packet_min,packet_max,flows,config,ratio\n";
  for (const auto& r : rows)
    os << r.width << 'x' << r.height << ',' << r.packet_min << ',' << r.packet_max << ','
       << r.flows << ',' << r.config << ',' << format_number(r.ratio()) << '\n';
}

// ---------------------------------------------------------------------------
// Finding schedulable flowsets

class NoSchedulableFlowset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FoundFlowset {
  Flowset flowset;
  std::size_t attempts = 0;
  std::uint64_t seed = 0;
};

/// Generates flowsets with seeds params.seed, params.seed + 1, ... until one
/// is schedulable under every config in `configs`.
inline FoundFlowset find_schedulable_flowset(std::shared_ptr<const Topology> topology,
                                             BenchmarkParams params,
                                             const std::vector<AnalysisConfig>& configs,
                                             std::size_t max_attempts = 1000) {
  const auto base = params.seed;
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    params.seed = base + (attempt - 1);
    auto fs = generate_flowset(topology, params);
    InterferenceModel model(fs);
    bool all = true;
    for (const auto& cfg : configs) {
      if (!analyze(model, cfg).schedulable()) {
        all = false;
        break;
      }
    }
    if (all) return {std::move(fs), attempt, params.seed};
  }
  throw NoSchedulableFlowset("no schedulable flowset found in " + std::to_string(max_attempts) +
                             " attempts (" + std::to_string(params.flows_per_set) + " flows)");
}

// ---------------------------------------------------------------------------
// Per-flow statistics

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Quantile with linear interpolation between closest ranks, h = (n-1)p.
inline double quantile_sorted(const std::vector<double>& x, double p) {
  if (x.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = static_cast<double>(x.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

inline BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("box statistics of an empty sample");
  std::sort(values.begin(), values.end());
  return {values.front(), quantile_sorted(values, 0.25), quantile_sorted(values, 0.5),
          quantile_sorted(values, 0.75), values.back()};
}

inline double percent_difference(Cycles worse, Cycles better) {
  return 100.0 * (static_cast<double>(worse) - static_cast<double>(better)) /
         static_cast<double>(better);
}

/// Per-flow 100 (R_worse - R_better) / R_better. Both analyses must deem the
/// flowset schedulable.
inline std::vector<double> percent_differences(const Flowset& fs, const AnalysisConfig& worse,
                                               const AnalysisConfig& better) {
  InterferenceModel model(fs);
  auto rw = analyze(model, worse);
  auto rb = analyze(model, better);
  if (!rw.schedulable() || !rb.schedulable())
    throw std::invalid_argument("percent difference needs a flowset schedulable under both configs");
  std::vector<double> out;
  for (std::size_t i = 0; i < fs.size(); ++i) out.push_back(percent_difference(rw.flows[i].R, rb.flows[i].R));
  return out;
}

struct ComponentShares {
  std::vector<double> pre;  // 100 I_pre / R per flow
  std::vector<double> pos;  // 100 I_pos / R per flow
};

inline ComponentShares component_shares(const Flowset& fs, const AnalysisConfig& cfg) {
  auto r = analyze(fs, cfg);
  if (!r.schedulable())
    throw std::invalid_argument("component shares need a schedulable flowset");
  ComponentShares out;
  for (const auto& f : r.flows) {
    out.pre.push_back(100.0 * static_cast<double>(f.I_pre) / static_cast<double>(f.R));
    out.pos.push_back(100.0 * static_cast<double>(f.I_pos) / static_cast<double>(f.R));
  }
  return out;
}

struct StatsRow {
  std::size_t flows = 0;
  std::string metric;
  BoxStats stats;
};

struct FlowStatsSpec {
  enum class Mode { percent_difference, components };

  Mode mode = Mode::components;
  int width = 4, height = 4;
  Cycles packet_min = 16, packet_max = 48;
  std::vector<std::size_t> flows{10, 25, 50, 75, 100};
  /// Schedulable flowsets pooled per point (one per point reproduces the
  /// single-flowset plots).
  std::size_t flowsets_per_point = 1;
  /// components: analysed config. percent_difference: the better config.
  std::string config = "0D_IU_SI";
  /// percent_difference only: the config expected to give larger R.
  std::string worse_config = "0D_NI_SI";
  /// The flow plots use the per-hop B° bound, which does not grow with the
  /// number of flows.
  IposFormula ipos = IposFormula::coarse;
  std::uint64_t master_seed = 1;
  std::size_t max_attempts = 1000;
  unsigned threads = 0;
};

/// One flowset search per (point, pooled index); metrics pooled per point.
inline std::vector<StatsRow> flow_stats(const FlowStatsSpec& spec) {
  auto better = AnalysisConfig::from_profile(spec.config);
  better.ipos = spec.ipos;
  std::vector<AnalysisConfig> need{better};
  std::optional<AnalysisConfig> worse;
  if (spec.mode == FlowStatsSpec::Mode::percent_difference) {
    worse = AnalysisConfig::from_profile(spec.worse_config);
    worse->ipos = spec.ipos;
    need.push_back(*worse);
  }
  auto topo = std::make_shared<const Topology>(generate_multi_ring(spec.width, spec.height));
  const auto np = spec.flows.size(), k = spec.flowsets_per_point;
  std::vector<std::vector<double>> a(np * k), b(np * k);
  parallel_for(np * k, spec.threads, [&](std::size_t job) {
    const auto point = job / k, idx = job % k;
    BenchmarkParams bp;
    bp.flows_per_set = spec.flows[point];
    bp.packet_min = spec.packet_min;
    bp.packet_max = spec.packet_max;
    bp.seed = family_seed(spec.master_seed, point, idx);
    auto found = find_schedulable_flowset(topo, bp, need, spec.max_attempts);
    if (worse) {
      a[job] = percent_differences(found.flowset, *worse, better);
    } else {
      auto shares = component_shares(found.flowset, better);
      a[job] = std::move(shares.pre);
      b[job] = std::move(shares.pos);
    }
  });
  std::vector<StatsRow> rows;
  for (std::size_t p = 0; p < np; ++p) {
    std::vector<double> pa, pb;
    for (std::size_t i = 0; i < k; ++i) {
      pa.insert(pa.end(), a[p * k + i].begin(), a[p * k + i].end());
      pb.insert(pb.end(), b[p * k + i].begin(), b[p * k + i].end());
    }
    if (pa.empty()) continue;
    if (worse) {
      rows.push_back({spec.flows[p], "pct_diff_R", box_stats(pa)});
    } else {
      rows.push_back({spec.flows[p], "I_pre_share", box_stats(pa)});
      rows.push_back({spec.flows[p], "I_pos_share", box_stats(pb)});
    }
  }
  return rows;
}

inline void write_stats_csv(std::ostream& os, const std::vector<StatsRow>& rows) {
  os << "flows,metric,min,q1,median,q3,max\n";
  for (const auto& r : rows)
    os << r.flows << ',' << r.metric << ',' << format_number(r.stats.min) << ','
       << format_number(r.stats.q1) << ',' << format_number(r.stats.median) << ','
       << format_number(r.stats.q3) << ',' << format_number(r.stats.max) << '\n';
}

}  // namespace rlnoc
