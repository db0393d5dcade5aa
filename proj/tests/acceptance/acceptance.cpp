// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion N   run criterion N only (exit 1 if it fails)

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <string>

#include "rlnoc/rlnoc.hpp"

using namespace rlnoc;

namespace {

// Pinned parameters.
constexpr std::uint64_t kMasterSeed = 20240601;
constexpr std::size_t kFamilySize = 100;
constexpr std::size_t kFamilyFlows[] = {20, 40, 60, 80};
constexpr std::size_t kSeeds = 10;
constexpr Cycles kHorizon = 1'000'000;
const char* const kOracleConfigs[] = {"0D_IU_II", "0D_IU_SI", "1D_IU_SI"};
constexpr std::size_t kFixedPointFlows = 1000;

struct Line {
  bool pass;
  std::string text;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::shared_ptr<const Topology> grid4() {
  static auto t = std::make_shared<const Topology>(generate_multi_ring(4, 4));
  return t;
}

// Flowsets schedulable under every oracle config; sizes cycle through
// kFamilyFlows.
const std::vector<Flowset>& oracle_family() {
  static const auto family = [] {
    std::vector<AnalysisConfig> cfgs;
    for (auto c : kOracleConfigs) cfgs.push_back(AnalysisConfig::from_profile(c));
    std::vector<Flowset> out;
    for (std::size_t k = 0; k < kFamilySize; ++k) {
      BenchmarkParams bp;
      bp.flows_per_set = kFamilyFlows[k % std::size(kFamilyFlows)];
      bp.seed = family_seed(kMasterSeed, 0, k);
      out.push_back(find_schedulable_flowset(grid4(), bp, cfgs).flowset);
    }
    return out;
  }();
  return family;
}

struct OracleRun {
  std::size_t runs = 0;
  std::uint64_t packets = 0;
  std::size_t latency_violations = 0;
  std::size_t deflection_violations = 0;
  std::size_t undelivered = 0;
  std::size_t flowsets_with_deflection_violation = 0;
  std::uint64_t worst_deflections = 0;
  double worst_ratio = 0;
  InvariantCounters invariants;
  std::uint64_t independent_deflections = 0;
  std::size_t nondeterministic = 0;
};

void add(InvariantCounters& a, const InvariantCounters& b) {
  a.link_overuse += b.link_overuse;
  a.non_contiguous += b.non_contiguous;
  a.interleaved += b.interleaved;
  a.undelivered += b.undelivered;
  a.flits_lost += b.flits_lost;
  a.independent_deflections += b.independent_deflections;
}

bool same(const SimOutcome& a, const SimOutcome& b) {
  if (a.cycles != b.cycles || a.packets != b.packets || a.deflections != b.deflections ||
      !(a.invariants == b.invariants) || a.flows.size() != b.flows.size())
    return false;
  for (std::size_t i = 0; i < a.flows.size(); ++i) {
    const auto &x = a.flows[i], &y = b.flows[i];
    if (x.id != y.id || x.released != y.released || x.delivered != y.delivered ||
        x.max_latency != y.max_latency || std::memcmp(&x.mean_latency, &y.mean_latency, sizeof(double)) ||
        x.max_deflections != y.max_deflections)
      return false;
  }
  return true;
}

// Every family flowset x config x seed, plus a repeat of seed 1 for the
// determinism check. Shared by criteria 2 and 7.
const OracleRun& oracle_run() {
  static const auto run = [] {
    const auto& family = oracle_family();
    OracleRun total;
    for (std::size_t k = 0; k < family.size(); ++k) {
      const auto& fs = family[k];
      InterferenceModel model(fs);
      bool flagged = false;
      for (auto name : kOracleConfigs) {
        const auto cfg = AnalysisConfig::from_profile(name);
        const auto hw = HardwareProfile::from(cfg);
        const auto result = analyze(model, cfg);
        for (std::size_t s = 1; s <= kSeeds; ++s) {
          SimConfig sc;
          sc.seed = family_seed(kMasterSeed, 1, k * kSeeds + s);
          sc.horizon = kHorizon;
          sc.policy = s % 2 ? ReleasePolicy::periodic_offset : ReleasePolicy::sporadic;
          auto out = simulate(fs, sc, hw);
          ++total.runs;
          total.packets += out.packets;
          add(total.invariants, out.invariants);
          if (cfg.ejection == Ejection::independent) total.independent_deflections += out.deflections;
          for (const auto& v : oracle_check(fs, result, out)) {
            switch (v.kind) {
              case OracleViolation::Kind::latency: ++total.latency_violations; break;
              case OracleViolation::Kind::deflections:
                ++total.deflection_violations;
                flagged = true;
                break;
              case OracleViolation::Kind::undelivered: ++total.undelivered; break;
            }
          }
          for (const auto& f : out.flows) {
            total.worst_deflections = std::max(total.worst_deflections, f.max_deflections);
            const double r = static_cast<double>(f.max_latency) / static_cast<double>(result.find(f.id)->R);
            total.worst_ratio = std::max(total.worst_ratio, r);
          }
          if (s == 1 && !same(out, simulate(fs, sc, hw))) ++total.nondeterministic;
        }
      }
      total.flowsets_with_deflection_violation += flagged;
    }
    return total;
  }();
  return run;
}

// ---------------------------------------------------------------------------

std::vector<Line> criterion1() {
  auto fs = fixtures::scenario_flowset();
  using Ids = std::vector<FlowId>;
  struct Row {
    FlowId id;
    Ids up, down, in, upind;
  };
  const Row table[] = {
      {1, {2}, {3}, {5}, {4}}, {2, {4}, {1, 5}, {}, {}}, {3, {1}, {}, {}, {2, 5}},
      {4, {}, {2}, {}, {}},    {5, {2}, {}, {1}, {4}},
  };
  int match = 0;
  for (const auto& row : table) {
    auto s = interference_sets(fs, row.id);
    match += (s.up == row.up) + (s.down == row.down) + (s.in_ring == row.in) + (s.upind == row.upind);
  }
  return {{match == 20, fmt("interference sets of the 5-flow scenario: %d/20 entries exact", match)}};
}

std::vector<Line> criterion2() {
  const auto& r = oracle_run();
  std::vector<Line> out;
  out.push_back({r.latency_violations == 0 && r.undelivered == 0,
                 fmt("latency bound: %zu flowsets x %zu configs x %zu seeds x %llu cycles, %llu packets; "
                     "%zu latency violations, %zu undelivered; worst observed/R %.4f",
                     kFamilySize, std::size(kOracleConfigs), kSeeds,
                     static_cast<unsigned long long>(kHorizon),
                     static_cast<unsigned long long>(r.packets), r.latency_violations, r.undelivered,
                     r.worst_ratio)});
  out.push_back({r.deflection_violations == 0,
                 fmt("deflection bound: %zu flow/seed violations of maxloop in %zu/%zu flowsets; "
                     "worst per-packet deflections %llu",
                     r.deflection_violations, r.flowsets_with_deflection_violation, kFamilySize,
                     static_cast<unsigned long long>(r.worst_deflections))});
  return out;
}

std::vector<Line> criterion3() {
  const auto iu = AnalysisConfig::from_profile("0D_IU_SI"), ni = AnalysisConfig::from_profile("0D_NI_SI");
  std::vector<std::pair<AnalysisConfig, AnalysisConfig>> pairs{
      {AnalysisConfig::from_profile("0D_IU_II"), AnalysisConfig::from_profile("0D_NI_II")},
      {iu, ni},
      {AnalysisConfig::from_profile("1D_IU_SI"), AnalysisConfig::from_profile("1D_NI_SI")}};
  std::size_t flows = 0, compared = 0, bad = 0, ni_unsched = 0;
  for (const auto& fs : oracle_family()) {
    InterferenceModel model(fs);
    for (const auto& [a, b] : pairs) {
      auto ra = analyze(model, a), rb = analyze(model, b);
      flows += fs.size();
      if (!rb.schedulable()) {
        // The simplified test gives no bound at all; the iterative one does.
        ni_unsched += fs.size();
        continue;
      }
      for (std::size_t i = 0; i < fs.size(); ++i, ++compared) bad += ra.flows[i].R > rb.flows[i].R;
    }
  }
  FlowStatsSpec spec;
  spec.mode = FlowStatsSpec::Mode::percent_difference;
  spec.flows = {50};
  spec.flowsets_per_point = 10;
  spec.config = "0D_IU_SI";
  spec.worse_config = "0D_NI_SI";
  spec.master_seed = kMasterSeed;
  spec.threads = 1;
  auto rows = flow_stats(spec);
  const auto& b = rows.at(0).stats;
  return {
      {bad == 0, fmt("R(iterative) <= R(simplified): %zu counterexamples over %zu flows compared "
                     "(%zu more flows only bounded by the iterative test)",
                     bad, compared, ni_unsched)},
      {b.median > 0, fmt("percent difference simplified vs iterative at 50 flows (shared injection): "
                         "median %.2f%%, q3 %.2f%%, max %.2f%%",
                         b.median, b.q3, b.max)},
  };
}

std::vector<Line> criterion4() {
  auto spec = SweepSpec::fast();
  spec.configs = {"0D_NI_II", "0D_IU_II", "0D_NI_SI", "0D_IU_SI", "1D_IU_SI", "2D_IU_SI", "3D_IU_SI"};
  spec.master_seed = kMasterSeed;
  spec.threads = 1;
  const auto rows = sweep_schedulability(spec);
  std::map<std::tuple<int, Cycles, std::size_t, std::string>, double> ratio;
  for (const auto& r : rows) ratio[{r.width, r.packet_min, r.flows, r.config}] = r.ratio();
  std::size_t mono = 0, inj = 0, defl = 0, checks = 0;
  for (auto [w, h] : spec.grids) {
    for (auto [pmin, pmax] : spec.packet_ranges) {
      for (std::size_t a = 0; a < spec.flows.size(); ++a) {
        auto at = [&](const char* c, std::size_t idx) { return ratio.at({w, pmin, spec.flows[idx], c}); };
        for (const auto& c : spec.configs) {
          ++checks;
          if (a > 0 && at(c.c_str(), a) > at(c.c_str(), a - 1)) ++mono;
        }
        inj += at("0D_NI_II", a) < at("0D_NI_SI", a);
        inj += at("0D_IU_II", a) < at("0D_IU_SI", a);
        defl += at("0D_IU_SI", a) < at("1D_IU_SI", a);
        defl += at("1D_IU_SI", a) < at("2D_IU_SI", a);
        defl += at("2D_IU_SI", a) < at("3D_IU_SI", a);
      }
    }
  }
  // First flow count below 100% for iterative and simplified, 4x4 16-48, shared injection.
  auto first_drop = [&](const char* c) -> long {
    for (auto n : spec.flows)
      if (ratio.at({4, 16, n, c}) < 100.0) return static_cast<long>(n);
    return -1;
  };
  return {
      {mono == 0, fmt("ratio non-increasing in flows: %zu counterexamples (%zu points)", mono, checks)},
      {inj == 0, fmt("independent injection >= shared injection: %zu counterexamples", inj)},
      {defl == 0, fmt("fixed maxloop k >= k+1 for k = 0,1,2: %zu counterexamples", defl)},
      {true, fmt("info: 4x4 16-48 shared injection first drops below 100%% at %ld flows (iterative) "
                 "vs %ld (simplified)",
                 first_drop("0D_IU_SI"), first_drop("0D_NI_SI"))},
  };
}

std::vector<Line> criterion5() {
  FlowStatsSpec spec;
  spec.mode = FlowStatsSpec::Mode::components;
  spec.flows = {10, 25, 50, 75, 100};
  spec.flowsets_per_point = 5;
  spec.master_seed = kMasterSeed;
  spec.threads = 1;
  auto medians = [&](const char* cfg) {
    spec.config = cfg;
    std::map<std::size_t, std::pair<double, double>> m;  // flows -> (pre, pos)
    for (const auto& r : flow_stats(spec))
      (r.metric == "I_pre_share" ? m[r.flows].first : m[r.flows].second) = r.stats.median;
    return m;
  };
  auto shared = medians("0D_IU_SI");
  std::string trace;
  std::size_t crossover = 0;
  for (auto [n, v] : shared) {
    trace += fmt(" %zu:%.1f/%.1f", n, v.first, v.second);
    if (!crossover && v.first > v.second) crossover = n;
  }
  const auto& smallest = shared.begin()->second;
  const bool ok_shared = smallest.second > smallest.first && crossover > 0;

  auto defl = medians("1D_IU_SI");
  std::string trace1;
  bool ok_defl = defl.size() == spec.flows.size();
  for (auto [n, v] : defl) {
    trace1 += fmt(" %zu:%.1f/%.1f", n, v.first, v.second);
    ok_defl = ok_defl && v.second > v.first;
  }
  return {
      {ok_shared, fmt("shared injection, no deflection: I_pos dominates at the smallest load, I_pre from "
                      "%zu flows (median pre/pos %%:%s)",
                      crossover, trace.c_str())},
      {ok_defl, fmt("maxloop 1: I_pos dominates at every load (median pre/pos %%:%s)", trace1.c_str())},
  };
}

std::vector<Line> criterion6() {
  const char* profiles[] = {"0D_NI_II", "0D_IU_II", "0D_NI_SI", "0D_IU_SI",
                            "1D_IU_SI", "2D_IU_II", "3D_NI_SI", "OFD_IU_SI"};
  std::size_t flows = 0, sequences = 0, decreasing = 0, unterminated = 0, outer_bad = 0, accounting = 0,
              reported = 0;
  for (std::size_t k = 0; flows < kFixedPointFlows; ++k) {
    BenchmarkParams bp;
    bp.flows_per_set = 20 + 20 * (k % 4);
    bp.seed = family_seed(kMasterSeed, 2, k);
    auto fs = generate_flowset(grid4(), bp);
    flows += fs.size();
    InterferenceModel model(fs);
    for (auto p : profiles) {
      AnalysisTrace trace;
      trace.record_inner = true;
      auto r = analyze(model, AnalysisConfig::from_profile(p), &trace);
      for (std::size_t s = 0; s < trace.inner.size(); ++s) {
        const auto& seq = trace.inner[s];
        ++sequences;
        for (std::size_t i = 1; i < seq.size(); ++i) decreasing += seq[i] < seq[i - 1];
        // Converged sequences end on a repeated value; only the final one of a
        // failed analysis may instead stop at the cutoff.
        const bool converged = seq.size() >= 2 && seq.back() == seq[seq.size() - 2];
        const bool last_of_failure = !r.schedulable() && s + 1 == trace.inner.size();
        unterminated += !converged && !last_of_failure;
      }
      for (std::size_t pass = 1; pass < trace.outer.size(); ++pass)
        for (std::size_t i = 0; i < trace.outer[pass].size(); ++i)
          outer_bad += trace.outer[pass][i] < trace.outer[pass - 1][i];
      if (!r.schedulable()) continue;
      for (const auto& f : r.flows) {
        ++reported;
        accounting += f.R != f.C + f.C_loop * f.maxloop + f.I_pre + f.I_pos;
        accounting += f.I_pre != f.I_pre_idle + f.I_pre_queue;
      }
    }
  }
  return {
      {decreasing == 0 && unterminated == 0,
       fmt("inner busy periods over %zu flows x %zu profiles: %zu sequences, %zu decreasing steps, "
           "%zu unterminated",
           flows, std::size(profiles), sequences, decreasing, unterminated)},
      {outer_bad == 0, fmt("outer R traces non-decreasing: %zu counterexamples", outer_bad)},
      {accounting == 0, fmt("R = C + C_loop*maxloop + I_pre + I_pos on %zu reported flows: %zu mismatches",
                            reported, accounting)},
  };
}

std::vector<Line> criterion7() {
  const auto& r = oracle_run();
  const auto& iv = r.invariants;
  return {
      {iv.flits_lost == 0 && iv.undelivered == 0,
       fmt("flit conservation over %zu runs: %llu flits lost, %llu packets undelivered", r.runs,
           static_cast<unsigned long long>(iv.flits_lost), static_cast<unsigned long long>(iv.undelivered))},
      {iv.link_overuse == 0, fmt("at most one flit per link per cycle: %llu violations",
                                 static_cast<unsigned long long>(iv.link_overuse))},
      {iv.non_contiguous == 0 && iv.interleaved == 0,
       fmt("packet contiguity: %llu non-contiguous, %llu interleaved",
           static_cast<unsigned long long>(iv.non_contiguous), static_cast<unsigned long long>(iv.interleaved))},
      {r.independent_deflections == 0 && iv.independent_deflections == 0,
       fmt("deflections under independent ejection: %llu",
           static_cast<unsigned long long>(r.independent_deflections))},
      {r.nondeterministic == 0, fmt("determinism: %zu of %zu repeated runs differ", r.nondeterministic,
                                    kFamilySize * std::size(kOracleConfigs))},
  };
}

std::vector<Line> criterion8() {
  std::size_t bad = 0, grids = 0;
  for (int w = 2; w <= 6; ++w) {
    for (int h = 2; h <= 6; ++h, ++grids) {
      auto t = generate_multi_ring(w, h);
      for (const auto& ring : t.rings())
        for (std::size_t k = 0; k < ring.size(); ++k) {
          auto a = ring.switches[k], b = ring.switches[(k + 1) % ring.size()];
          bad += std::abs(a.column - b.column) + std::abs(a.row - b.row) != 1;
        }
      for (std::size_t s = 0; s < t.core_count(); ++s)
        for (std::size_t d = 0; d < t.core_count(); ++d) {
          if (s == d) continue;
          bool found = false;
          for (const auto& ring : t.rings()) {
            auto has = [&](Coord c) {
              return std::find(ring.switches.begin(), ring.switches.end(), c) != ring.switches.end();
            };
            found = found || (has(t.coord(s)) && has(t.coord(d)));
          }
          bad += !found;
        }
    }
  }
  std::size_t rings = 0;
  std::string err;
  try {
    rings = io::load_topology(RLNOC_DATA_DIR "/rlrec_4x4.json")->rings().size();
  } catch (const std::exception& e) {
    err = e.what();
  }
  return {
      {bad == 0, fmt("generated topologies %zu grids (2..6 x 2..6): %zu adjacency/connectivity failures", grids, bad)},
      {rings == 10 && err.empty(), fmt("4x4 reference topology loads with %zu rings%s%s", rings,
                                       err.empty() ? "" : ": ", err.c_str())},
  };
}

const std::map<int, std::pair<const char*, std::function<std::vector<Line>()>>> kCriteria{
    {1, {"interference sets of the reference scenario", criterion1}},
    {2, {"safety oracle", criterion2}},
    {3, {"iterative dominance", criterion3}},
    {4, {"configuration orderings", criterion4}},
    {5, {"component-share crossover", criterion5}},
    {6, {"fixed-point properties", criterion6}},
    {7, {"simulator protocol invariants", criterion7}},
    {8, {"topology invariants", criterion8}},
};

bool run(int n) {
  const auto& [name, fn] = kCriteria.at(n);
  const auto t0 = std::chrono::steady_clock::now();
  auto lines = fn();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool pass = std::all_of(lines.begin(), lines.end(), [](const Line& l) { return l.pass; });
  std::printf("criterion %d %s: %s (%.1f s)\n", n, pass ? "PASS" : "FAIL", name, secs);
  for (const auto& l : lines) std::printf("    [%s] %s\n", l.pass ? "ok" : "FAIL", l.text.c_str());
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int a = 1; a < argc; ++a) {
    if (std::strcmp(argv[a], "--criterion") == 0 && a + 1 < argc) {
      which.push_back(std::atoi(argv[++a]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  if (which.empty())
    for (const auto& [n, _] : kCriteria) which.push_back(n);
  bool all = true;
  for (int n : which) {
    if (!kCriteria.count(n)) {
      std::fprintf(stderr, "no criterion %d\n", n);
      return 2;
    }
    all = run(n) && all;
  }
  return all ? 0 : 1;
}
