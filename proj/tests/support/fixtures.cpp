#include "fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fixtures {

using namespace hpmdiag;

const std::vector<MatmulRow>& matmul_rows() {
  static const std::vector<MatmulRow> rows{
      {"Classic", 5314.0, 1.25420e12, 0.440861, 1249.0, false, 0.5},
      {"uBLAS", 630.0, 1.01207e12, 4.61834, 156.0, false, 0.5},
      {"Eigen3", 371.0, 2.1014e11, 0.41168, 8555.0, true, 0.3},
      {"MKL", 531.0, 2.03448e11, 0.321115, 11261.0, true, 0.3},
  };
  return rows;
}

const MatmulRow& matmul_row(const std::string& name) {
  for (const auto& r : matmul_rows()) {
    if (r.name == name) return r;
  }
  throw std::out_of_range(name);
}

static Count round_count(double v) { return static_cast<Count>(std::llround(v)); }

MeasurementSession matmul_session(const MatmulRow& row) {
  const double runtime = kMatmulFlops / (row.mflops * 1e6);
  const double lines = row.mem_bw_MBs * 1e6 * runtime / 64.0;

  CoreMeasurement core;
  core.core_id = 0;
  core.counts["INSTR_RETIRED"] = round_count(row.instructions);
  core.counts["CPU_CLK_UNHALTED"] = round_count(row.cpi * row.instructions);
  core.counts["FP_OPS_PACKED_DP"] = row.packed ? round_count(kMatmulFlops / 2.0) : 0;
  core.counts["FP_OPS_SCALAR_DP"] = row.packed ? 0 : round_count(kMatmulFlops);
  core.counts["MEM_LINES_READ"] = round_count(lines * 2.0 / 3.0);
  core.counts["MEM_LINES_WRITE"] = round_count(lines) - core.counts["MEM_LINES_READ"];
  core.counts["MEM_LINES_REMOTE"] = 0;
  core.counts["LOADS_RETIRED"] = round_count(row.ldst_fraction * row.instructions * 2.0 / 3.0);
  core.counts["STORES_RETIRED"] = round_count(row.ldst_fraction * row.instructions / 3.0);

  RegionMeasurement region;
  region.region_name = "dgemm";
  region.wall_time_s = runtime;
  region.cores.push_back(core);

  MeasurementSession s;
  s.session_id = "matmul-" + row.name;
  s.machine_ref = "westmere-1s";
  s.thread_count = 1;
  s.core_set = {0};
  s.regions.push_back(region);
  return s;
}

std::string packed_counts_json(const std::string& id, const std::vector<double>& counts_e10, double wall_time_s) {
  std::string cores;
  std::string core_set;
  for (std::size_t i = 0; i < counts_e10.size(); ++i) {
    char buf[160];
    std::snprintf(buf, sizeof buf, R"({"core_id": %zu, "counts": {"FP_COMP_OPS_EXE_SSE_FP_PACKED": %.0f}})", i,
                  counts_e10[i] * 1e10);
    cores += (i ? ", " : "") + std::string(buf);
    core_set += (i ? ", " : "") + std::to_string(i);
  }
  return R"({"session_id": ")" + id + R"(", "machine_ref": "westmere-1s", "thread_count": )" +
         std::to_string(counts_e10.size()) + R"(, "core_set": [)" + core_set +
         R"(], "aliases": {"FP_COMP_OPS_EXE_SSE_FP_PACKED": "FP_OPS_PACKED_SP"}, "regions": [{"region_name": "backprojection", "wall_time_s": )" +
         std::to_string(wall_time_s) + R"(, "cores": [)" + cores + "]}]}";
}

MeasurementSession packed_counts_session(const std::string& id, const std::vector<double>& counts_e10,
                                         double wall_time_s) {
  return parse_session_json(packed_counts_json(id, counts_e10, wall_time_s));
}

MeasurementSession bandwidth_session(double total_MBs, double wall_time_s) {
  const double lines_per_core = total_MBs * 1e6 * wall_time_s / 64.0 / 6.0;
  RegionMeasurement region;
  region.region_name = "backprojection";
  region.wall_time_s = wall_time_s;
  for (int c = 0; c < 6; ++c) {
    CoreMeasurement core;
    core.core_id = c;
    core.counts["MEM_LINES_READ"] = round_count(lines_per_core * 0.5);
    core.counts["MEM_LINES_WRITE"] = round_count(lines_per_core * 0.5);
    core.counts["MEM_LINES_REMOTE"] = 0;
    core.counts["INSTR_RETIRED"] = 40'000'000'000ULL;
    core.counts["CPU_CLK_UNHALTED"] = 30'000'000'000ULL;
    region.cores.push_back(core);
  }
  MeasurementSession s;
  s.session_id = "bandwidth";
  s.machine_ref = "westmere-1s";
  s.thread_count = 6;
  s.core_set = {0, 1, 2, 3, 4, 5};
  s.regions.push_back(region);
  return s;
}

static Baselines westmere_baselines() {
  Baselines b;
  b.stream_bw_core_MBs = 11814.0;
  b.update_bw_socket_MBs = 20300.0;
  b.olc_bw_MBs = 60000.0;
  b.peak_mflops_core = 11720.0;
  b.issue_width = 4.0;
  b.cacheline_bytes = 64.0;
  return b;
}

MachineModel westmere_1s() { return make_uniform_machine("westmere-1s", 1, 6, westmere_baselines()); }
MachineModel westmere_2s() { return make_uniform_machine("westmere-2s", 2, 6, westmere_baselines()); }

RegionMeasurement timeline_region(int cores, int samples, double dt) {
  RegionMeasurement region;
  region.region_name = "loop";
  region.wall_time_s = dt * samples;
  std::vector<TimelineSample> timeline;
  for (int i = 0; i < samples; ++i) {
    TimelineSample s;
    s.t_s = dt * (i + 1);
    s.dt_s = dt;
    for (int c = 0; c < cores; ++c) {
      CoreMeasurement m;
      m.core_id = c;
      m.counts["INSTR_RETIRED"] = 1000 + 10 * c + i;
      m.counts["CPU_CLK_UNHALTED"] = 1500 + 7 * c + 3 * i;
      m.counts["FP_OPS_PACKED_DP"] = 200 + c;
      m.counts["FP_OPS_SCALAR_DP"] = 50 + i;
      s.per_core_counts.push_back(m);
    }
    timeline.push_back(s);
  }
  for (int c = 0; c < cores; ++c) {
    CoreMeasurement total;
    total.core_id = c;
    for (const auto& s : timeline) {
      for (const auto& [ev, v] : s.per_core_counts[c].counts) total.counts[ev] += v;
    }
    region.cores.push_back(total);
  }
  region.timeline = timeline;
  return region;
}

DiagnosisInput input_for(MeasurementSession session, MachineModel machine) {
  DiagnosisInput in;
  in.session = std::move(session);
  in.machine = std::move(machine);
  return in;
}

}  // namespace fixtures
