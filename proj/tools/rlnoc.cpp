// rlnoc: command-line front end for topology generation, analysis,
// simulation and the benchmark harness.
//
// Exit codes: 0 ok, 1 unschedulable / oracle failure, 2 usage error,
// 3 input or output file error.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rlnoc/rlnoc.hpp"

namespace {

using namespace rlnoc;

constexpr int kOk = 0, kFail = 1, kUsage = 2, kFileError = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string output;
  std::uint64_t seed = 1;
  std::string config = "0D_IU_SI";
};

/// -o wins; otherwise $RLNOC_OUTPUT_DIR/<name>; otherwise stdout.
std::string resolve_output(const std::string& flag, const std::string& name) {
  if (!flag.empty()) return flag;
  if (const char* dir = std::getenv("RLNOC_OUTPUT_DIR"); dir && *dir) {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
  }
  return "-";
}

void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  io::write_text(path, text);
}

Cycles from_us(double us, double clock_ghz) {
  if (us < 0 || clock_ghz <= 0) throw UsageError("times and clock must be positive");
  return static_cast<Cycles>(std::llround(us * clock_ghz * 1000.0));
}

std::pair<int, int> parse_grid(const std::string& s) {
  auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw UsageError("grid must look like 4x4, got '" + s + "'");
  }
}

std::pair<Cycles, Cycles> parse_range(const std::string& s) {
  auto d = s.find('-');
  try {
    if (d == std::string::npos) throw std::invalid_argument(s);
    return {std::stoull(s.substr(0, d)), std::stoull(s.substr(d + 1))};
  } catch (const std::exception&) {
    throw UsageError("range must look like 16-48, got '" + s + "'");
  }
}

AnalysisConfig make_config(const std::string& profile, const std::string& ipos, bool exclude_dest,
                           std::size_t cap) {
  AnalysisConfig cfg;
  try {
    cfg = AnalysisConfig::from_profile(profile);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.ipos = ipos == "coarse" ? IposFormula::coarse : IposFormula::tight;
  cfg.ipos_exclude_destination = exclude_dest;
  cfg.iteration_cap = cap;
  return cfg;
}

std::string meta_line(const std::string& key, const std::string& value) {
  return "# " + key + "=" + value + "\n";
}

Flowset load_flowset_arg(const std::string& path, const std::string& topology_path) {
  std::shared_ptr<const Topology> fallback;
  if (!topology_path.empty()) fallback = io::load_topology(topology_path);
  return io::load_flowset(path, fallback);
}

std::shared_ptr<const Topology> topology_for(const std::string& path, const std::string& fixture,
                                             int width, int height) {
  if (!path.empty()) return io::load_topology(path);
  if (fixture == "rlrec4x4") return fixtures::rlrec_4x4();
  if (fixture == "scenario") return fixtures::scenario_topology();
  if (!fixture.empty()) throw UsageError("unknown fixture '" + fixture + "'");
  try {
    return std::make_shared<const Topology>(generate_multi_ring(width, height));
  } catch (const TopologyError& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case latency analysis and simulation of routerless multi-ring NoCs"};
  app.require_subcommand(1);
  Common common;

  // topo
  auto* topo = app.add_subcommand("topo", "Generate, load or validate a topology and export it");
  int width = 4, height = 4;
  std::string topo_in, fixture;
  bool validate_only = false;
  topo->add_option("--width", width, "Grid columns")->check(CLI::PositiveNumber);
  topo->add_option("--height", height, "Grid rows")->check(CLI::PositiveNumber);
  topo->add_option("--input", topo_in, "Topology JSON to load instead of generating");
  topo->add_option("--fixture", fixture, "Built-in topology: rlrec4x4 | scenario");
  topo->add_flag("--validate", validate_only, "Only validate; write a summary instead of JSON");
  topo->add_option("-o,--output", common.output, "Output file (default stdout)");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random flowset");
  BenchmarkParams bp;
  std::string gen_topo;
  double clock_ghz = 1.0, period_min_us = -1, period_max_us = -1;
  gen->add_option("--width", width, "Grid columns")->check(CLI::PositiveNumber);
  gen->add_option("--height", height, "Grid rows")->check(CLI::PositiveNumber);
  gen->add_option("--topology", gen_topo, "Topology JSON (default: generated grid)");
  gen->add_option("--fixture", fixture, "Built-in topology: rlrec4x4 | scenario");
  gen->add_option("--flows", bp.flows_per_set, "Flows per set");
  gen->add_option("--packet-min", bp.packet_min, "Smallest packet (flits)");
  gen->add_option("--packet-max", bp.packet_max, "Largest packet (flits)");
  gen->add_option("--period-min", bp.period_min, "Shortest period (cycles)");
  gen->add_option("--period-max", bp.period_max, "Longest period (cycles)");
  gen->add_option("--period-min-us", period_min_us, "Shortest period (microseconds)");
  gen->add_option("--period-max-us", period_max_us, "Longest period (microseconds)");
  gen->add_option("--clock-ghz", clock_ghz, "Clock used to convert microseconds")->capture_default_str();
  gen->add_option("--jitter-min", bp.jitter_fraction_min, "Smallest jitter as a fraction of T");
  gen->add_option("--jitter-max", bp.jitter_fraction_max, "Largest jitter as a fraction of T");
  gen->add_option("--seed", common.seed, "Generator seed");
  gen->add_option("-o,--output", common.output, "Output file (default stdout)");

  // analyze
  auto* an = app.add_subcommand("analyze", "Worst-case latency of every flow of a flowset");
  std::string flowset_path, topology_path, ipos = "tight";
  bool exclude_dest = false;
  std::size_t cap = 1000;
  an->add_option("flowset", flowset_path, "Flowset JSON")->required();
  an->add_option("--topology", topology_path, "Topology JSON when the flowset embeds none");
  an->add_option("-c,--config", common.config, "Profile, e.g. 0D_IU_SI, 2D_NI_II, OFD_IU_SI");
  an->add_option("--ipos", ipos, "Post-injection bound")->check(CLI::IsMember({"tight", "coarse"}));
  an->add_flag("--ipos-exclude-destination", exclude_dest, "Skip the destination switch in I_pos");
  an->add_option("--iteration-cap", cap, "Outer iteration cap");
  an->add_option("-o,--output", common.output, "Result CSV (default stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Cycle-accurate simulation of a flowset");
  SimConfig sc;
  std::string policy = "periodic", trace_path;
  double horizon_us = -1;
  sim->add_option("flowset", flowset_path, "Flowset JSON")->required();
  sim->add_option("--topology", topology_path, "Topology JSON when the flowset embeds none");
  sim->add_option("-c,--config", common.config, "Hardware profile (link sharing)");
  sim->add_option("--seed", sc.seed, "Release seed");
  sim->add_option("--horizon", sc.horizon, "Cycles during which packets are released");
  sim->add_option("--horizon-us", horizon_us, "Horizon in microseconds");
  sim->add_option("--clock-ghz", clock_ghz, "Clock used to convert microseconds")->capture_default_str();
  sim->add_option("--policy", policy, "Release policy")
      ->check(CLI::IsMember({"periodic", "sporadic"}));
  sim->add_option("--trace", trace_path, "Write a per-packet event trace CSV here");
  sim->add_option("-o,--output", common.output, "Outcome CSV (default stdout)");

  // verify
  auto* ver = app.add_subcommand("verify", "Analyse, simulate several seeds and compare");
  std::size_t seeds = 10;
  ver->add_option("flowset", flowset_path, "Flowset JSON")->required();
  ver->add_option("--topology", topology_path, "Topology JSON when the flowset embeds none");
  ver->add_option("-c,--config", common.config, "Profile used for analysis and hardware");
  ver->add_option("--seeds", seeds, "Number of simulation seeds");
  ver->add_option("--seed", sc.seed, "First simulation seed");
  ver->add_option("--horizon", sc.horizon, "Cycles per seed");
  ver->add_option("-o,--output", common.output, "Violation report CSV (default stdout)");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Schedulability ratio sweep");
  std::string scale = "fast";
  std::vector<std::string> grids, packets, configs;
  std::vector<std::size_t> flows;
  std::size_t flowsets = 0;
  unsigned threads = 0;
  sw->add_option("--scale", scale, "Default point grid")->check(CLI::IsMember({"fast", "paper"}));
  sw->add_option("--grids", grids, "Grids, e.g. 4x4 5x5")->delimiter(',');
  sw->add_option("--packets", packets, "Packet ranges, e.g. 16-48 32-96")->delimiter(',');
  sw->add_option("--flows", flows, "Flows-per-set values")->delimiter(',');
  sw->add_option("--flowsets", flowsets, "Flowsets per point");
  sw->add_option("--configs", configs, "Profiles")->delimiter(',');
  sw->add_option("--seed", common.seed, "Master seed");
  sw->add_option("--threads", threads, "Worker threads (0 = all cores)");
  sw->add_option("-o,--output", common.output, "Sweep CSV (default stdout)");

  // flowstats
  auto* fsw = app.add_subcommand("flowstats", "Per-flow latency statistics of schedulable flowsets");
  FlowStatsSpec fss;
  std::string mode = "components", grid = "4x4", prange = "16-48", stats_ipos = "coarse";
  fsw->add_option("--mode", mode, "components | pctdiff")
      ->check(CLI::IsMember({"components", "pctdiff"}));
  fsw->add_option("-c,--config", fss.config, "Analysed (or better) profile");
  fsw->add_option("--worse-config", fss.worse_config, "pctdiff: profile expected to be worse");
  fsw->add_option("--ipos", stats_ipos, "Post-injection bound")
      ->check(CLI::IsMember({"tight", "coarse"}))
      ->capture_default_str();
  fsw->add_option("--grid", grid, "Grid, e.g. 4x4");
  fsw->add_option("--packets", prange, "Packet range, e.g. 16-48");
  fsw->add_option("--flows", flows, "Flows-per-set values")->delimiter(',');
  fsw->add_option("--flowsets", fss.flowsets_per_point, "Schedulable flowsets pooled per point");
  fsw->add_option("--max-attempts", fss.max_attempts, "Generation attempts per flowset");
  fsw->add_option("--seed", common.seed, "Master seed");
  fsw->add_option("--threads", threads, "Worker threads (0 = all cores)");
  fsw->add_option("-o,--output", common.output, "Stats CSV (default stdout)");

  // plot
  auto* pl = app.add_subcommand("plot", "Render a sweep or stats CSV as SVG");
  std::string csv_path, kind = "lines", title;
  pl->add_option("csv", csv_path, "Input CSV")->required();
  pl->add_option("--kind", kind, "lines | boxwhisker")->check(CLI::IsMember({"lines", "boxwhisker"}));
  pl->add_option("--title", title, "Plot title");
  pl->add_option("-o,--output", common.output, "SVG file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*topo) {
      auto t = topology_for(topo_in, fixture, width, height);
      if (validate_only) {
        std::ostringstream os;
        os << "valid " << t->width() << "x" << t->height() << " rings=" << t->rings().size()
           << "\n";
        emit(resolve_output(common.output, "topology.txt"), os.str());
      } else {
        emit(resolve_output(common.output, "topology.json"), io::to_json(*t).dump(2) + "\n");
      }
      return kOk;
    }

    if (*gen) {
      auto t = topology_for(gen_topo, fixture, width, height);
      if (period_min_us >= 0) bp.period_min = from_us(period_min_us, clock_ghz);
      if (period_max_us >= 0) bp.period_max = from_us(period_max_us, clock_ghz);
      bp.seed = common.seed;
      try {
        bp.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      auto fs = generate_flowset(t, bp);
      emit(resolve_output(common.output, "flowset.json"), io::to_json(fs, bp.seed).dump(2) + "\n");
      return kOk;
    }

    if (*an) {
      auto cfg = make_config(common.config, ipos, exclude_dest, cap);
      auto fs = load_flowset_arg(flowset_path, topology_path);
      InterferenceModel model(fs);
      auto result = analyze(model, cfg);
      std::ostringstream os;
      os << meta_line("config", cfg.profile()) << meta_line("ipos", ipos)
         << meta_line("ipos_exclude_destination", exclude_dest ? "1" : "0")
         << meta_line("verdict", std::string(to_string(result.verdict)))
         << meta_line("iterations", std::to_string(result.iterations));
      if (result.failing_flow) os << meta_line("failing_flow", std::to_string(*result.failing_flow));
      io::write_analysis_csv(os, model, result);
      emit(resolve_output(common.output, "analysis.csv"), os.str());
      return result.schedulable() ? kOk : kFail;
    }

    if (*sim) {
      auto cfg = make_config(common.config, "tight", false, 1000);
      if (horizon_us >= 0) sc.horizon = from_us(horizon_us, clock_ghz);
      sc.policy = policy == "sporadic" ? ReleasePolicy::sporadic : ReleasePolicy::periodic_offset;
      sc.trace = !trace_path.empty();
      auto fs = load_flowset_arg(flowset_path, topology_path);
      auto out = simulate(fs, sc, HardwareProfile::from(cfg));
      std::ostringstream os;
      os << meta_line("config", cfg.profile()) << meta_line("seed", std::to_string(sc.seed))
         << meta_line("horizon", std::to_string(sc.horizon)) << meta_line("policy", policy)
         << meta_line("cycles", std::to_string(out.cycles))
         << meta_line("deflections", std::to_string(out.deflections))
         << meta_line("invariants_clean", out.invariants.clean() ? "1" : "0");
      io::write_sim_csv(os, out);
      emit(resolve_output(common.output, "simulation.csv"), os.str());
      if (sc.trace) {
        std::ostringstream ts;
        io::write_trace_csv(ts, out);
        io::write_text(trace_path, ts.str());
      }
      return kOk;
    }

    if (*ver) {
      auto cfg = make_config(common.config, "tight", false, 1000);
      auto fs = load_flowset_arg(flowset_path, topology_path);
      auto result = analyze(fs, cfg);
      std::ostringstream os;
      os << meta_line("config", cfg.profile()) << meta_line("first_seed", std::to_string(sc.seed))
         << meta_line("seeds", std::to_string(seeds))
         << meta_line("horizon", std::to_string(sc.horizon));
      if (!result.schedulable()) {
        os << meta_line("verdict", std::string(to_string(result.verdict)));
        emit(resolve_output(common.output, "verify.csv"), os.str());
        std::cerr << "flowset is not schedulable under " << cfg.profile() << "\n";
        return kFail;
      }
      os << "seed,flow,kind,observed,bound\n";
      bool clean = true;
      const auto first = sc.seed;
      for (std::size_t k = 0; k < seeds; ++k) {
        sc.seed = first + k;
        sc.policy = k % 2 ? ReleasePolicy::sporadic : ReleasePolicy::periodic_offset;
        auto out = simulate(fs, sc, HardwareProfile::from(cfg));
        for (const auto& v : oracle_check(fs, result, out)) {
          clean = false;
          os << sc.seed << ',' << v.flow << ',' << to_string(v.kind) << ',' << v.observed << ','
             << v.bound << '\n';
        }
        if (!out.invariants.clean()) {
          clean = false;
          os << sc.seed << ",,protocol-invariant,,\n";
        }
      }
      emit(resolve_output(common.output, "verify.csv"), os.str());
      return clean ? kOk : kFail;
    }

    if (*sw) {
      SweepSpec spec = scale == "paper" ? SweepSpec::paper() : SweepSpec::fast();
      if (!grids.empty()) {
        spec.grids.clear();
        for (const auto& g : grids) spec.grids.push_back(parse_grid(g));
      }
      if (!packets.empty()) {
        spec.packet_ranges.clear();
        for (const auto& p : packets) spec.packet_ranges.push_back(parse_range(p));
      }
      if (!flows.empty()) spec.flows = flows;
      if (flowsets) spec.flowsets_per_point = flowsets;
      if (!configs.empty()) spec.configs = configs;
      spec.master_seed = common.seed;
      spec.threads = threads;
      try {
        spec.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      auto rows = sweep_schedulability(spec);
      std::ostringstream os;
      os << meta_line("master_seed", std::to_string(spec.master_seed))
         << meta_line("scale", scale)
         << meta_line("flowsets_per_point", std::to_string(spec.flowsets_per_point));
      write_sweep_csv(os, rows);
      emit(resolve_output(common.output, "sweep.csv"), os.str());
      return kOk;
    }

    if (*fsw) {
      fss.mode = mode == "pctdiff" ? FlowStatsSpec::Mode::percent_difference
                                   : FlowStatsSpec::Mode::components;
      std::tie(fss.width, fss.height) = parse_grid(grid);
      std::tie(fss.packet_min, fss.packet_max) = parse_range(prange);
      if (!flows.empty()) fss.flows = flows;
      fss.ipos = stats_ipos == "tight" ? IposFormula::tight : IposFormula::coarse;
      fss.master_seed = common.seed;
      fss.threads = threads;
      try {
        (void)AnalysisConfig::from_profile(fss.config);
        (void)AnalysisConfig::from_profile(fss.worse_config);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      auto rows = flow_stats(fss);
      std::ostringstream os;
      os << meta_line("master_seed", std::to_string(fss.master_seed)) << meta_line("mode", mode)
         << meta_line("config", fss.config) << meta_line("ipos", stats_ipos);
      if (fss.mode == FlowStatsSpec::Mode::percent_difference)
        os << meta_line("worse_config", fss.worse_config)
           << meta_line("metric", "100*(R_worse-R_better)/R_better");
      os << meta_line("grid", grid) << meta_line("packets", prange)
         << meta_line("flowsets_per_point", std::to_string(fss.flowsets_per_point));
      write_stats_csv(os, rows);
      emit(resolve_output(common.output, "flowstats.csv"), os.str());
      return kOk;
    }

    if (*pl) {
      auto text = io::read_text(csv_path);
      auto svg = plot::render_plot(text, kind == "lines" ? plot::Kind::lines : plot::Kind::boxwhisker,
                                   title);
      emit(resolve_output(common.output, "plot.svg"), svg);
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const io::FileError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kFileError;
  } catch (const io::FormatError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kFileError;
  } catch (const plot::CsvError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kFileError;
  } catch (const TopologyError& e) {
    std::cerr << "invalid topology: " << e.what() << "\n";
    return kFileError;
  } catch (const FlowsetError& e) {
    std::cerr << "invalid flowset: " << e.what() << "\n";
    return kFileError;
  } catch (const NoSchedulableFlowset& e) {
    std::cerr << e.what() << "\n";
    return kFail;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kFileError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}
