#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hpmdiag {

using CoreGroup = std::vector<int>;

struct Topology {
  int sockets = 1;
  int cores_per_socket = 1;
  std::vector<CoreGroup> olc_groups;    // cores sharing an outer-level cache
  std::vector<CoreGroup> numa_domains;  // locality domains
  std::vector<int> core_ids;

  int locality_domain_count() const { return static_cast<int>(numa_domains.size()); }
  // Index of the group holding `core`, or -1.
  static int group_of(const std::vector<CoreGroup>& groups, int core);
  // Sockets are contiguous blocks of cores_per_socket entries of core_ids.
  std::vector<CoreGroup> socket_groups() const;
};

// Measured machine capabilities. Units are part of the field names.
struct Baselines {
  double stream_bw_core_MBs = 0.0;     // single-thread streaming bandwidth
  double update_bw_socket_MBs = 0.0;   // all-core array-update bandwidth, one socket
  double olc_bw_MBs = 0.0;             // outer-level cache bandwidth, one OLC group
  double peak_mflops_core = 0.0;
  double issue_width = 4.0;            // instructions per cycle
  double cacheline_bytes = 64.0;
};

struct MachineModel {
  std::string name;
  Topology topology;
  Baselines baselines;
};

// Empty iff every invariant holds.
std::vector<std::string> validate_machine(const MachineModel& machine);

// Throws IoError, ParseError or ValidationError.
MachineModel load_machine(const std::filesystem::path& path);
MachineModel parse_machine_json(std::string_view text);
std::string write_machine_json(const MachineModel& machine);

// Contiguous topology: sockets x cores_per_socket, one OLC group and one
// NUMA domain per socket.
MachineModel make_uniform_machine(std::string name, int sockets, int cores_per_socket, Baselines baselines);

// min(peak, intensity * bandwidth). All inputs must be > 0.
double roofline_limit(double intensity_flop_per_byte, double bw_MBs, double peak_mflops);

// measured / baseline; baseline must be > 0.
double bandwidth_utilization(double measured_MBs, double baseline_MBs);

// Bandwidth ceiling for a set of cores: min(update_bw_socket x sockets
// touched, stream_bw_core x cores).
double memory_reference_MBs(const MachineModel& machine, const std::vector<int>& cores);
// olc_bw x outer-level-cache groups touched.
double olc_reference_MBs(const MachineModel& machine, const std::vector<int>& cores);

// Named baseline lookup for the `--baseline` override
// ("stream_bw_core", "update_bw_socket", "olc_bw").
std::optional<double> baseline_by_name(const Baselines& baselines, std::string_view name);

}  // namespace hpmdiag
