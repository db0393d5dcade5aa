#include <gtest/gtest.h>

#include "oracle.hpp"
#include "rlnoc/fixtures.hpp"

using namespace rlnoc;

namespace {

std::shared_ptr<const Topology> grid4() {
  static auto t = std::make_shared<const Topology>(generate_multi_ring(4, 4));
  return t;
}

Flowset random_set(std::uint64_t seed, std::size_t flows, Cycles pmin = 16, Cycles pmax = 48) {
  BenchmarkParams bp;
  bp.flows_per_set = flows;
  bp.packet_min = pmin;
  bp.packet_max = pmax;
  bp.seed = seed;
  return generate_flowset(grid4(), bp);
}

const char* kProfiles[] = {"0D_NI_II", "0D_IU_II", "0D_NI_SI", "0D_IU_SI",
                           "1D_IU_SI", "2D_IU_II", "3D_NI_SI", "OFD_IU_SI"};

}  // namespace

TEST(Profile, ParsesAndPrintsNames) {
  for (const char* p : kProfiles) EXPECT_EQ(AnalysisConfig::from_profile(p).profile(), p);
  auto c = AnalysisConfig::from_profile("2D_NI_SI");
  EXPECT_EQ(c.ejection, Ejection::shared);
  EXPECT_EQ(c.fixed_maxloop, 2u);
  EXPECT_EQ(c.jitter, JitterMethod::simplified);
  EXPECT_EQ(c.injection, Injection::shared);
  auto o = AnalysisConfig::from_profile("OFD_IU_II");
  EXPECT_EQ(o.maxloop_mode, MaxloopMode::oldest_first);
  for (const char* bad : {"", "0D", "XD_IU_SI", "0D_XX_SI", "0D_IU_XX", "D_IU_SI", "0D-IU-SI"})
    EXPECT_THROW(AnalysisConfig::from_profile(bad), std::invalid_argument) << bad;
}

TEST(BusyPeriod, HandIterates) {
  // w = 1 + ceil(w / 10) * 5: 1 -> 6 -> 6.
  std::vector<BusyTerm> terms{{10, 0, 5, 1}};
  std::vector<Cycles> it;
  EXPECT_EQ(busy_period(1, terms, 100, &it), 6u);
  EXPECT_EQ(it, (std::vector<Cycles>{1, 6, 6}));
  // Two terms, one with jitter: 3 -> 3+4+2 = 9 -> 3+8+2 = 13 -> 3+8+4 = 15.
  std::vector<BusyTerm> two{{8, 0, 4, 1}, {12, 2, 2, 1}};
  it.clear();
  EXPECT_EQ(busy_period(3, two, 100, &it), 15u);
  EXPECT_EQ(it, (std::vector<Cycles>{3, 9, 13, 15, 15}));
}

TEST(BusyPeriod, StopsAtTheCutoff) {
  // Utilisation 1: grows without bound.
  std::vector<BusyTerm> terms{{4, 0, 4, 1}};
  std::vector<Cycles> it;
  EXPECT_FALSE(busy_period(1, terms, 50, &it).has_value());
  ASSERT_FALSE(it.empty());
  EXPECT_GT(it.back(), 50u);
  for (std::size_t k = 1; k < it.size(); ++k) EXPECT_GE(it[k], it[k - 1]);
  EXPECT_FALSE(busy_period(60, terms, 50).has_value());
}

TEST(Analysis, ScenarioHandValues) {
  // 0D_IU_II on the worked scenario. Flow 4 (xi1 -> xi3, L = 5): nothing
  // upstream or injected alongside, so I_pre = 1; C = 3 + 4 = 7; the
  // downstream switches xi2 and xi3 hold at most 3 and 5 payload flits.
  // Flow 2 (xi2 -> xi5, L = 4): flow 4 is upstream with jitter 5 + (16 - 7),
  // so w = 1 + ceil(15 / 250) * 5 = 6; I_pos = 5 (xi3) + 0 + 0.
  auto fs = fixtures::scenario_flowset();
  auto r = analyze(fs, AnalysisConfig::from_profile("0D_IU_II"));
  ASSERT_TRUE(r.schedulable());
  const auto* f4 = r.find(4);
  EXPECT_EQ(f4->C, 7u);
  EXPECT_EQ(f4->I_pre, 1u);
  EXPECT_EQ(f4->I_pos, 8u);
  EXPECT_EQ(f4->R, 16u);
  const auto* f2 = r.find(2);
  EXPECT_EQ(f2->C, 7u);
  EXPECT_EQ(f2->I_pre, 6u);
  EXPECT_EQ(f2->I_pos, 5u);
  EXPECT_EQ(f2->R, 18u);
  EXPECT_EQ(f2->Jk, 11u);
}

TEST(Analysis, ScenarioFrozenAcrossProfiles) {
  // Values produced by the reference evaluator and frozen here.
  auto fs = fixtures::scenario_flowset();
  for (const char* p : kProfiles) {
    auto cfg = AnalysisConfig::from_profile(p);
    auto lib = analyze(fs, cfg);
    auto ref = oracle::analyze(fs, cfg);
    ASSERT_EQ(lib.schedulable(), ref.schedulable) << p;
    if (!ref.schedulable) continue;
    for (std::size_t i = 0; i < fs.size(); ++i) EXPECT_EQ(lib.flows[i].R, ref.R[i]) << p << " flow " << i;
  }
  std::vector<Cycles> R;
  for (const auto& f : analyze(fs, AnalysisConfig::from_profile("0D_IU_SI")).flows) R.push_back(f.R);
  EXPECT_EQ(R, (std::vector<Cycles>{34, 18, 20, 16, 20}));
}

TEST(Analysis, MatchesReferenceOnRandomFlowsets) {
  std::size_t compared = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto fs = random_set(seed, 20 + (seed % 5) * 15);
    for (const char* p : kProfiles) {
      for (auto ipos : {IposFormula::tight, IposFormula::coarse}) {
        auto cfg = AnalysisConfig::from_profile(p);
        cfg.ipos = ipos;
        auto lib = analyze(fs, cfg);
        auto ref = oracle::analyze(fs, cfg);
        ASSERT_EQ(lib.schedulable(), ref.schedulable) << p << " seed " << seed;
        if (!lib.schedulable()) continue;
        ++compared;
        for (std::size_t i = 0; i < fs.size(); ++i) {
          ASSERT_EQ(lib.flows[i].R, ref.R[i]) << p << " seed " << seed << " flow " << i;
          ASSERT_EQ(lib.flows[i].I_pre, ref.I_pre[i]);
          ASSERT_EQ(lib.flows[i].I_pos, ref.I_pos[i]);
        }
      }
    }
  }
  EXPECT_GT(compared, 100u);
}

TEST(Analysis, ComponentAccountingIsExact) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto fs = random_set(seed, 40);
    for (const char* p : kProfiles) {
      auto r = analyze(fs, AnalysisConfig::from_profile(p));
      for (const auto& f : r.flows) {
        EXPECT_EQ(f.R, f.C + f.C_loop * f.maxloop + f.I_pre + f.I_pos);
        EXPECT_EQ(f.I_pre, f.I_pre_idle + f.I_pre_queue);
        EXPECT_LE(f.R, f.D);
      }
    }
  }
}

TEST(Analysis, TightPostInjectionNeverExceedsCoarse) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto fs = random_set(seed, 30);
    InterferenceModel m(fs);
    for (const char* p : kProfiles) {
      auto tight = AnalysisConfig::from_profile(p), coarse = tight;
      coarse.ipos = IposFormula::coarse;
      for (std::size_t i = 0; i < fs.size(); ++i) {
        auto ml = resolve_maxloop(m, i, tight);
        EXPECT_LE(i_pos(m, i, tight, ml), i_pos(m, i, coarse, ml));
      }
    }
  }
}

TEST(Analysis, ExcludingTheDestinationOnlyShrinksIpos) {
  auto fs = fixtures::scenario_flowset();
  auto on = AnalysisConfig::from_profile("0D_IU_II");
  on.ipos_exclude_destination = true;
  auto a = analyze(fs, on), b = analyze(fs, AnalysisConfig::from_profile("0D_IU_II"));
  ASSERT_TRUE(a.schedulable());
  EXPECT_EQ(a.find(4)->I_pos, 3u);  // xi2 only
  for (std::size_t i = 0; i < fs.size(); ++i) EXPECT_LE(a.flows[i].R, b.flows[i].R);
}

TEST(Analysis, IterativeNeverWorseThanSimplified) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto fs = random_set(seed, 60);
    for (auto [iu, ni] : {std::pair{"0D_IU_II", "0D_NI_II"}, {"0D_IU_SI", "0D_NI_SI"}, {"2D_IU_SI", "2D_NI_SI"}}) {
      auto a = analyze(fs, AnalysisConfig::from_profile(iu));
      auto b = analyze(fs, AnalysisConfig::from_profile(ni));
      if (b.schedulable()) {
        ASSERT_TRUE(a.schedulable());
        for (std::size_t i = 0; i < fs.size(); ++i) EXPECT_LE(a.flows[i].R, b.flows[i].R);
      }
    }
  }
}

TEST(Analysis, SharedInjectionWaitsAtLeastAsLong) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto fs = random_set(seed, 50);
    auto ii = analyze(fs, AnalysisConfig::from_profile("0D_IU_II"));
    auto si = analyze(fs, AnalysisConfig::from_profile("0D_IU_SI"));
    if (!si.schedulable()) continue;
    ASSERT_TRUE(ii.schedulable()) << seed;
    for (std::size_t i = 0; i < fs.size(); ++i) EXPECT_GE(si.flows[i].I_pre, ii.flows[i].I_pre);
  }
}

TEST(Analysis, AddingFlowsNeverHelps) {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    auto full = random_set(seed, 120);
    for (const char* p : {"0D_IU_SI", "1D_IU_SI", "0D_NI_II"}) {
      bool prev = true;
      for (std::size_t n = 10; n <= 120; n += 10) {
        bool now = analyze(full.prefix(n), AnalysisConfig::from_profile(p)).schedulable();
        EXPECT_FALSE(now && !prev) << p << " seed " << seed << " n " << n;
        prev = now;
      }
    }
  }
}

TEST(Analysis, OldestFirstCountsOtherFlowsToTheSameCore) {
  auto fs = fixtures::scenario_flowset();
  InterferenceModel m(fs);
  auto cfg = AnalysisConfig::from_profile("OFD_IU_SI");
  // Flows 1 and 3 both end at xi1.
  EXPECT_EQ(resolve_maxloop(m, fs.index_of(1), cfg), 1u);
  EXPECT_EQ(resolve_maxloop(m, fs.index_of(3), cfg), 1u);
  EXPECT_EQ(resolve_maxloop(m, fs.index_of(2), cfg), 0u);
  EXPECT_EQ(resolve_maxloop(m, 0, AnalysisConfig::from_profile("0D_IU_SI")), 0u);
  EXPECT_EQ(resolve_maxloop(m, 0, AnalysisConfig::from_profile("3D_IU_SI")), 3u);
}

TEST(Analysis, UnschedulableReportsTheFailingFlow) {
  auto topo = fixtures::scenario_topology();
  // C = 5 + 6 - 1 = 10 exceeds D = 9.
  Flowset fs(topo, {{7, 100, 9, 6, 0, {2, 0}, {0, 0}, 0}});
  auto r = analyze(fs, AnalysisConfig{});
  EXPECT_EQ(r.verdict, Verdict::unschedulable);
  EXPECT_EQ(r.failing_flow, FlowId{7});
  EXPECT_TRUE(r.flows.empty());
}

TEST(Analysis, DivergingBusyPeriodIsCutOff) {
  // Two upstream flows of utilisation 1/2 each pass the victim's source:
  // w = 1 + 2 * ceil(w / 12) * 6 never settles. The victim's cutoff is
  // D - C - I_pos = 12 - 2 - 0.
  auto topo = fixtures::scenario_topology();
  Flowset fs(topo, {{1, 12, 12, 6, 0, {0, 0}, {2, 1}, 0},
                    {2, 12, 12, 6, 0, {0, 1}, {2, 0}, 0},
                    {3, 12, 12, 1, 0, {1, 0}, {2, 0}, 0}});
  InterferenceModel m(fs);
  std::vector<Cycles> jk(3, 0), it;
  EXPECT_FALSE(i_pre_basic(m, 2, jk, 10, &it).has_value());
  EXPECT_EQ(it, (std::vector<Cycles>{1, 13}));
  EXPECT_FALSE(analyze(fs, AnalysisConfig{}).schedulable());
}

TEST(Analysis, IterationCapIsReported) {
  auto fs = fixtures::scenario_flowset();
  auto cfg = AnalysisConfig::from_profile("0D_IU_II");
  ASSERT_GT(analyze(fs, cfg).iterations, 1u);
  cfg.iteration_cap = 1;
  EXPECT_EQ(analyze(fs, cfg).verdict, Verdict::iteration_cap_exceeded);
}

TEST(Analysis, OuterTraceIsNonDecreasing) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto fs = random_set(seed, 60);
    for (const char* p : {"0D_IU_II", "0D_IU_SI", "2D_IU_SI"}) {
      AnalysisTrace trace;
      (void)analyze(fs, AnalysisConfig::from_profile(p), &trace);
      for (std::size_t k = 1; k < trace.outer.size(); ++k)
        for (std::size_t i = 0; i < fs.size(); ++i) EXPECT_GE(trace.outer[k][i], trace.outer[k - 1][i]);
    }
  }
}

TEST(Analysis, EmptyFlowsetIsSchedulable) {
  Flowset fs(grid4(), {});
  auto r = analyze(fs, AnalysisConfig::from_profile("3D_IU_SI"));
  EXPECT_TRUE(r.schedulable());
  EXPECT_TRUE(r.flows.empty());
}
