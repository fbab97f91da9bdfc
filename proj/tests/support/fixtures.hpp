#pragma once

#include <string>
#include <vector>

#include "hpmdiag/machine.hpp"
#include "hpmdiag/patterns.hpp"
#include "hpmdiag/session.hpp"

namespace fixtures {

// Single-threaded 5000x5000 matrix-multiply rows, reference derived metrics.
struct MatmulRow {
  std::string name;
  double mem_bw_MBs;
  double instructions;
  double cpi;
  double mflops;
  bool packed;           // SSE packed vs scalar FP instructions
  double ldst_fraction;  // constructed
};

inline constexpr double kMatmulFlops = 2.0 * 5000.0 * 5000.0 * 5000.0;

const std::vector<MatmulRow>& matmul_rows();
const MatmulRow& matmul_row(const std::string& name);

// Counts back-computed from the row: runtime = flops / MFlop/s, cycles =
// CPI x instructions, memory lines = bandwidth x runtime / 64.
hpmdiag::MeasurementSession matmul_session(const MatmulRow& row);

// Packed-FP counts per core (x1e10) before and after the scheduling fix.
inline const std::vector<double> kImbalancedCounts{2.74, 9.39, 9.23, 9.30, 9.29, 3.07};
inline const std::vector<double> kBalancedCounts{7.16, 7.17, 7.16, 7.17, 7.17, 7.17};
inline constexpr double kImbalancedRuntime = 61.72;
inline constexpr double kBalancedRuntime = 43.9;

// Session JSON using the vendor event name through the alias table.
std::string packed_counts_json(const std::string& id, const std::vector<double>& counts_e10, double wall_time_s);
hpmdiag::MeasurementSession packed_counts_session(const std::string& id, const std::vector<double>& counts_e10,
                                                  double wall_time_s);

// Six cores of one socket drawing `total_MBs` from memory.
hpmdiag::MeasurementSession bandwidth_session(double total_MBs, double wall_time_s = 43.9);

hpmdiag::MachineModel westmere_1s();
hpmdiag::MachineModel westmere_2s();

// Region with a uniform timeline of `samples` samples of width dt.
hpmdiag::RegionMeasurement timeline_region(int cores, int samples, double dt);

hpmdiag::DiagnosisInput input_for(hpmdiag::MeasurementSession session, hpmdiag::MachineModel machine);

}  // namespace fixtures
