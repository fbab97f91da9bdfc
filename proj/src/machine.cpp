#include "hpmdiag/machine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hpmdiag/error.hpp"
#include "json_util.hpp"

namespace hpmdiag {

using detail::json;
using detail::ObjectReader;

int Topology::group_of(const std::vector<CoreGroup>& groups, int core) {
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (std::find(groups[i].begin(), groups[i].end(), core) != groups[i].end()) return static_cast<int>(i);
  }
  return -1;
}

std::vector<CoreGroup> Topology::socket_groups() const {
  std::vector<CoreGroup> out;
  if (cores_per_socket <= 0) return out;
  for (std::size_t i = 0; i < core_ids.size(); ++i) {
    if (i % static_cast<std::size_t>(cores_per_socket) == 0) out.emplace_back();
    out.back().push_back(core_ids[i]);
  }
  return out;
}

namespace {

void check_partition(const std::vector<CoreGroup>& groups, const std::vector<int>& core_ids,
                     const std::string& field, std::vector<std::string>& out) {
  std::map<int, int> seen;
  for (const auto& g : groups) {
    if (g.empty()) out.push_back("Topology." + field + ": empty group (partition)");
    for (int c : g) ++seen[c];
  }
  for (int c : core_ids) {
    const auto it = seen.find(c);
    if (it == seen.end() || it->second != 1) {
      out.push_back("Topology." + field + ": core " + std::to_string(c) +
                    " must appear exactly once (partition)");
      return;
    }
  }
  for (const auto& [c, n] : seen) {
    if (std::find(core_ids.begin(), core_ids.end(), c) == core_ids.end()) {
      out.push_back("Topology." + field + ": core " + std::to_string(c) + " not in core_ids (partition)");
      return;
    }
  }
}

}  // namespace

std::vector<std::string> validate_machine(const MachineModel& m) {
  std::vector<std::string> out;
  const auto& t = m.topology;
  if (t.sockets < 1) out.push_back("Topology.sockets must be >= 1");
  if (t.cores_per_socket < 1) out.push_back("Topology.cores_per_socket must be >= 1");
  if (static_cast<long>(t.sockets) * t.cores_per_socket != static_cast<long>(t.core_ids.size())) {
    out.push_back("Topology: sockets * cores_per_socket must equal |core_ids|");
  }
  std::vector<int> sorted = t.core_ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    out.push_back("Topology.core_ids contains duplicates");
  }
  check_partition(t.olc_groups, t.core_ids, "olc_groups", out);
  check_partition(t.numa_domains, t.core_ids, "numa_domains", out);

  const auto& b = m.baselines;
  const std::pair<const char*, double> positives[] = {
      {"stream_bw_core_MBs", b.stream_bw_core_MBs}, {"update_bw_socket_MBs", b.update_bw_socket_MBs},
      {"olc_bw_MBs", b.olc_bw_MBs},                 {"peak_mflops_core", b.peak_mflops_core},
      {"issue_width", b.issue_width},               {"cacheline_bytes", b.cacheline_bytes},
  };
  for (const auto& [name, value] : positives) {
    if (!(value > 0.0) || !std::isfinite(value)) out.push_back(std::string("Baselines.") + name + " must be > 0");
  }
  if (b.issue_width < 1.0 || b.issue_width > 8.0) out.push_back("Baselines.issue_width must be in [1, 8]");
  return out;
}

namespace {

std::vector<CoreGroup> read_groups(const json& value, const std::string& path) {
  if (!value.is_array()) throw ParseError(path, "expected an array of core-id arrays");
  std::vector<CoreGroup> groups;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const auto& g = value[i];
    const std::string gpath = path + "[" + std::to_string(i) + "]";
    if (!g.is_array()) throw ParseError(gpath, "expected an array of core ids");
    CoreGroup group;
    for (std::size_t k = 0; k < g.size(); ++k) {
      group.push_back(detail::as_integer(g[k], gpath + "[" + std::to_string(k) + "]"));
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

}  // namespace

MachineModel parse_machine_json(std::string_view text) {
  const json root = detail::parse_json_text(text, "machine");
  ObjectReader top(root, "");
  MachineModel m;
  m.name = top.text("name");

  ObjectReader topo(top.required("topology"), "topology");
  m.topology.sockets = topo.integer("sockets");
  m.topology.cores_per_socket = topo.integer("cores_per_socket");
  const json& ids = topo.required("core_ids");
  if (!ids.is_array()) throw ParseError("topology.core_ids", "expected an array");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    m.topology.core_ids.push_back(detail::as_integer(ids[i], "topology.core_ids[" + std::to_string(i) + "]"));
  }
  m.topology.olc_groups = read_groups(topo.required("olc_groups"), "topology.olc_groups");
  m.topology.numa_domains = read_groups(topo.required("numa_domains"), "topology.numa_domains");
  topo.finish();

  ObjectReader base(top.required("baselines"), "baselines");
  m.baselines.stream_bw_core_MBs = base.number("stream_bw_core_MBs");
  m.baselines.update_bw_socket_MBs = base.number("update_bw_socket_MBs");
  m.baselines.olc_bw_MBs = base.number("olc_bw_MBs");
  m.baselines.peak_mflops_core = base.number("peak_mflops_core");
  m.baselines.issue_width = base.number("issue_width");
  m.baselines.cacheline_bytes = base.number("cacheline_bytes");
  base.finish();
  top.finish();

  const auto violations = validate_machine(m);
  if (!violations.empty()) {
    std::string message = "machine '" + m.name + "' is invalid";
    for (const auto& v : violations) message += "\n  " + v;
    throw ValidationError(message);
  }
  return m;
}

MachineModel load_machine(const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return parse_machine_json(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.context(), e.message());
  }
}

std::string write_machine_json(const MachineModel& m) {
  nlohmann::ordered_json root;
  root["name"] = m.name;
  nlohmann::ordered_json topo;
  topo["sockets"] = m.topology.sockets;
  topo["cores_per_socket"] = m.topology.cores_per_socket;
  topo["core_ids"] = m.topology.core_ids;
  topo["olc_groups"] = m.topology.olc_groups;
  topo["numa_domains"] = m.topology.numa_domains;
  root["topology"] = std::move(topo);
  nlohmann::ordered_json base;
  base["stream_bw_core_MBs"] = m.baselines.stream_bw_core_MBs;
  base["update_bw_socket_MBs"] = m.baselines.update_bw_socket_MBs;
  base["olc_bw_MBs"] = m.baselines.olc_bw_MBs;
  base["peak_mflops_core"] = m.baselines.peak_mflops_core;
  base["issue_width"] = m.baselines.issue_width;
  base["cacheline_bytes"] = m.baselines.cacheline_bytes;
  root["baselines"] = std::move(base);
  return root.dump(2) + "\n";
}

MachineModel make_uniform_machine(std::string name, int sockets, int cores_per_socket, Baselines baselines) {
  MachineModel m;
  m.name = std::move(name);
  m.topology.sockets = sockets;
  m.topology.cores_per_socket = cores_per_socket;
  for (int s = 0; s < sockets; ++s) {
    CoreGroup group;
    for (int c = 0; c < cores_per_socket; ++c) {
      const int id = s * cores_per_socket + c;
      m.topology.core_ids.push_back(id);
      group.push_back(id);
    }
    m.topology.olc_groups.push_back(group);
    m.topology.numa_domains.push_back(std::move(group));
  }
  m.baselines = baselines;
  return m;
}

double roofline_limit(double intensity, double bw_MBs, double peak_mflops) {
  if (!(intensity > 0.0) || !(bw_MBs > 0.0) || !(peak_mflops > 0.0)) {
    throw PreconditionError("roofline_limit requires positive inputs");
  }
  return std::min(peak_mflops, intensity * bw_MBs);
}

double bandwidth_utilization(double measured_MBs, double baseline_MBs) {
  if (!(baseline_MBs > 0.0)) throw PreconditionError("bandwidth baseline must be > 0");
  return measured_MBs / baseline_MBs;
}

namespace {

int groups_touched(const std::vector<CoreGroup>& groups, const std::vector<int>& cores) {
  std::set<int> used;
  for (int c : cores) {
    const int g = Topology::group_of(groups, c);
    if (g >= 0) used.insert(g);
  }
  return std::max(1, static_cast<int>(used.size()));
}

}  // namespace

double memory_reference_MBs(const MachineModel& m, const std::vector<int>& cores) {
  const double threads = static_cast<double>(std::max<std::size_t>(1, cores.size()));
  const int sockets = groups_touched(m.topology.socket_groups(), cores);
  return std::min(m.baselines.update_bw_socket_MBs * sockets, m.baselines.stream_bw_core_MBs * threads);
}

double olc_reference_MBs(const MachineModel& m, const std::vector<int>& cores) {
  return m.baselines.olc_bw_MBs * groups_touched(m.topology.olc_groups, cores);
}

std::optional<double> baseline_by_name(const Baselines& b, std::string_view name) {
  if (name == "stream_bw_core" || name == "stream_bw_core_MBs") return b.stream_bw_core_MBs;
  if (name == "update_bw_socket" || name == "update_bw_socket_MBs") return b.update_bw_socket_MBs;
  if (name == "olc_bw" || name == "olc_bw_MBs") return b.olc_bw_MBs;
  return std::nullopt;
}

}  // namespace hpmdiag
