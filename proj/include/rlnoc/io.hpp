#pragma once

#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlnoc/analysis.hpp"
#include "rlnoc/simulator.hpp"

namespace rlnoc::io {

using nlohmann::json;

/// The file could not be opened, read or written.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The file was read but its content does not follow the schema.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void only_fields(const json& obj, std::initializer_list<const char*> allowed,
                        const std::string& where) {
  if (!obj.is_object()) throw FormatError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw FormatError(where + ": unknown field '" + key + "'");
  }
}

template <class T>
T field(const json& obj, const char* name, const std::string& where) {
  if (!obj.contains(name)) throw FormatError(where + ": missing field '" + name + "'");
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception&) {
    throw FormatError(where + ": field '" + name + "' has the wrong type");
  }
}

inline Coord coord_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw FormatError(where + ": coordinate must be [column, row]");
  return {j[0].get<int>(), j[1].get<int>()};
}

inline json coord_json(Coord c) { return json::array({c.column, c.row}); }

inline Cycles cycles_field(const json& obj, const char* name, const std::string& where) {
  if (obj.contains(name) && !obj.at(name).is_number_unsigned())
    throw FormatError(where + ": field '" + name + "' must be a non-negative integer");
  return field<Cycles>(obj, name, where);
}

}  // namespace detail

inline json to_json(const Topology& t) {
  json rings = json::array();
  for (const auto& r : t.rings()) {
    json sw = json::array();
    for (auto c : r.switches) sw.push_back(detail::coord_json(c));
    json jr{{"id", r.id}, {"switches", sw}};
    if (r.buffer_capacity) jr["buffer_capacity"] = *r.buffer_capacity;
    rings.push_back(jr);
  }
  return {{"width", t.width()}, {"height", t.height()}, {"rings", rings}};
}

inline std::shared_ptr<const Topology> topology_from_json(const json& j) {
  detail::only_fields(j, {"width", "height", "rings"}, "topology");
  const auto w = detail::field<int>(j, "width", "topology");
  const auto h = detail::field<int>(j, "height", "topology");
  const auto& jr = j.contains("rings") ? j.at("rings") : json();
  if (!jr.is_array()) throw FormatError("topology: 'rings' must be an array");
  std::vector<Ring> rings;
  for (std::size_t k = 0; k < jr.size(); ++k) {
    const auto where = "topology.rings[" + std::to_string(k) + "]";
    detail::only_fields(jr[k], {"id", "switches", "buffer_capacity"}, where);
    Ring r;
    r.id = jr[k].contains("id") ? detail::cycles_field(jr[k], "id", where) : k;
    if (r.id != k) throw FormatError(where + ": ids must be 0..n-1 in order");
    const auto& sw = jr[k].contains("switches") ? jr[k].at("switches") : json();
    if (!sw.is_array()) throw FormatError(where + ": 'switches' must be an array");
    for (const auto& c : sw) r.switches.push_back(detail::coord_of(c, where));
    if (jr[k].contains("buffer_capacity"))
      r.buffer_capacity = detail::cycles_field(jr[k], "buffer_capacity", where);
    rings.push_back(std::move(r));
  }
  return std::make_shared<const Topology>(w, h, std::move(rings));
}

/// Flowset document. The topology is embedded unless `embed_topology` is off.
inline json to_json(const Flowset& fs, std::optional<std::uint64_t> seed = std::nullopt,
                    bool embed_topology = true) {
  json flows = json::array();
  for (const auto& f : fs.flows()) {
    flows.push_back({{"id", f.id},
                     {"T", f.period},
                     {"D", f.deadline},
                     {"L", f.length},
                     {"J", f.jitter},
                     {"src", detail::coord_json(f.src)},
                     {"dst", detail::coord_json(f.dst)},
                     {"ring", f.ring}});
  }
  json out;
  if (seed) out["seed"] = *seed;
  if (embed_topology) out["topology"] = to_json(fs.topology());
  out["flows"] = flows;
  return out;
}

/// Reads a flowset. A missing ring is filled in by the routing table.
/// `fallback` is used when the document carries no topology.
inline Flowset flowset_from_json(const json& j,
                                 std::shared_ptr<const Topology> fallback = nullptr) {
  detail::only_fields(j, {"seed", "topology", "flows"}, "flowset");
  auto topo = j.contains("topology") ? topology_from_json(j.at("topology")) : fallback;
  if (!topo) throw FormatError("flowset: no topology embedded or supplied");
  const auto& jf = j.contains("flows") ? j.at("flows") : json();
  if (!jf.is_array()) throw FormatError("flowset: 'flows' must be an array");
  std::vector<Flow> flows;
  for (std::size_t k = 0; k < jf.size(); ++k) {
    const auto where = "flowset.flows[" + std::to_string(k) + "]";
    const auto& o = jf[k];
    detail::only_fields(o, {"id", "T", "D", "L", "J", "src", "dst", "ring"}, where);
    Flow f;
    f.id = detail::field<FlowId>(o, "id", where);
    f.period = detail::cycles_field(o, "T", where);
    f.deadline = o.contains("D") ? detail::cycles_field(o, "D", where) : f.period;
    f.length = detail::cycles_field(o, "L", where);
    f.jitter = o.contains("J") ? detail::cycles_field(o, "J", where) : 0;
    if (!o.contains("src") || !o.contains("dst"))
      throw FormatError(where + ": 'src' and 'dst' are required");
    f.src = detail::coord_of(o.at("src"), where);
    f.dst = detail::coord_of(o.at("dst"), where);
    if (o.contains("ring")) {
      f.ring = detail::cycles_field(o, "ring", where);
    } else {
      if (!topo->contains(f.src) || !topo->contains(f.dst) || f.src == f.dst)
        throw FlowsetError(where + ": cannot route flow with invalid endpoints");
      f.ring = topo->select_ring(f.src, f.dst);
    }
    flows.push_back(f);
  }
  return Flowset(std::move(topo), std::move(flows));
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write '" + path + "'");
  out << text;
  if (!out) throw FileError("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::shared_ptr<const Topology> load_topology(const std::string& path) {
  return topology_from_json(read_json(path));
}

inline Flowset load_flowset(const std::string& path,
                            std::shared_ptr<const Topology> fallback = nullptr) {
  return flowset_from_json(read_json(path), std::move(fallback));
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string id_list(const std::vector<FlowId>& ids) {
  std::string s;
  for (auto id : ids) {
    if (!s.empty()) s += ' ';
    s += std::to_string(id);
  }
  return s;
}

}  // namespace detail

/// Header comment lines carrying run metadata, one `# key=value` per entry.
inline void write_meta(std::ostream& os,
                       const std::vector<std::pair<std::string, std::string>>& meta) {
  for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
}

/// Analysis result table followed by a diagnostics table with every flow's
/// interference sets (space separated flow ids).
inline void write_analysis_csv(std::ostream& os, const InterferenceModel& model,
                               const FlowsetResult& result) {
  os << "id,C,C_loop,maxloop,I_pre_idle,I_pre_queue,I_pre,I_pos,Jk,R,D,schedulable\n";
  for (const auto& r : result.flows) {
    os << r.id << ',' << r.C << ',' << r.C_loop << ',' << r.maxloop << ',' << r.I_pre_idle << ','
       << r.I_pre_queue << ',' << r.I_pre << ',' << r.I_pos << ',' << r.Jk << ',' << r.R << ','
       << r.D << ',' << (r.schedulable ? 1 : 0) << '\n';
  }
  os << "\n# diagnostics\n";
  os << "id,ring,up,down,in,upind,in_core\n";
  const auto& fs = model.flowset();
  for (const auto& f : fs.flows()) {
    auto s = interference_sets(model, f.id);
    os << f.id << ',' << f.ring << ',' << detail::id_list(s.up) << ','
       << detail::id_list(s.down) << ',' << detail::id_list(s.in_ring) << ','
       << detail::id_list(s.upind) << ',' << detail::id_list(s.in_core) << '\n';
  }
}

inline void write_sim_csv(std::ostream& os, const SimOutcome& sim) {
  os << "id,packets,delivered,max_latency,mean_latency,max_deflections\n";
  for (const auto& f : sim.flows) {
    char mean[32];
    std::snprintf(mean, sizeof mean, "%.3f", f.mean_latency);
    os << f.id << ',' << f.released << ',' << f.delivered << ',' << f.max_latency << ',' << mean
       << ',' << f.max_deflections << '\n';
  }
}

inline void write_trace_csv(std::ostream& os, const SimOutcome& sim) {
  static constexpr const char* names[] = {"release", "inject", "deflect", "eject"};
  os << "cycle,event,flow,packet\n";
  for (const auto& e : sim.trace)
    os << e.cycle << ',' << names[static_cast<int>(e.kind)] << ',' << e.flow << ',' << e.packet
       << '\n';
}

}  // namespace rlnoc::io
