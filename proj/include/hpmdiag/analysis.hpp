#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hpmdiag/machine.hpp"
#include "hpmdiag/metric_value.hpp"
#include "hpmdiag/perfgroup.hpp"
#include "hpmdiag/session.hpp"
#include "hpmdiag/thresholds.hpp"

namespace hpmdiag {

// ---------------------------------------------------------------------------
// Derived metrics
// ---------------------------------------------------------------------------

// The quantities the pattern signatures consume. Every field may carry an
// undefined / not-computable marker instead of a number.
struct MetricSet {
  MetricValue cpi;
  MetricValue mem_bw_MBs;
  MetricValue olc_bw_MBs;
  MetricValue mflops;
  MetricValue simd_fraction;   // packed FP instructions / all FP instructions
  MetricValue instr_per_flop;  // instructions retired / flops
  MetricValue ldst_fraction;   // (loads + stores) / instructions retired
  MetricValue nonfp_fraction;  // 1 - FP instructions / instructions retired
  MetricValue cache_hit_ratio;
  MetricValue evicts_per_instr;
  MetricValue remote_fraction;
};

struct DomainBandwidth {
  int domain = 0;             // index into topology.numa_domains
  std::vector<int> core_ids;  // region cores inside the domain
  MetricValue mem_bw_MBs;
};

struct DerivedMetrics {
  MetricSet aggregate;
  std::vector<int> core_ids;
  std::vector<MetricSet> per_core;  // parallel to core_ids
  std::vector<DomainBandwidth> domains;
};

DerivedMetrics derive_metrics(const RegionMeasurement& region, const MachineModel& machine,
                              const GroupRegistry& groups = builtin_groups());

// Name/value pairs in a fixed order, for reports.
std::vector<std::pair<std::string, MetricValue>> metric_fields(const MetricSet& metrics);

// ---------------------------------------------------------------------------
// Imbalance
// ---------------------------------------------------------------------------

struct ImbalanceReport {
  std::string event_name;
  std::vector<double> per_core;
  double index = 0.0;          // 1 - min/max, 0 when all values are zero
  double max_over_mean = 1.0;  // 1 when all values are zero
};

// Throws UnknownEvent when any core lacks the event.
ImbalanceReport imbalance_index(const RegionMeasurement& region, std::string_view event);
ImbalanceReport imbalance_of(std::string label, std::vector<double> values);

// |sum(before) - sum(after)| / sum(before). Throws UnknownEvent.
double balance_work_conservation(const RegionMeasurement& before, const RegionMeasurement& after,
                                 std::string_view event);

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

enum class SeriesKind { runtime, performance };

struct ScalingPoint {
  int threads = 1;
  double value = 0.0;  // runtime in seconds, or performance in `unit`
  std::optional<double> instructions;  // total instructions retired in the run
  std::string label;
  std::string session_ref;

  friend bool operator==(const ScalingPoint&, const ScalingPoint&) = default;
};

struct ScalingSeries {
  std::string label;
  SeriesKind kind = SeriesKind::runtime;
  std::string unit = "s";
  std::vector<ScalingPoint> points;

  friend bool operator==(const ScalingSeries&, const ScalingSeries&) = default;
};

enum class ScalingShape { linear, saturating, degrading, irregular };
std::string_view to_string(ScalingShape shape);

struct ScalingClassification {
  std::vector<int> threads;
  std::vector<double> speedups;  // relative to the smallest thread count
  ScalingShape shape = ScalingShape::irregular;
  std::optional<int> saturation_point;
};

std::vector<std::string> validate_series(const ScalingSeries& series);

// Throws TooFewPoints (< 2 points) or ValidationError.
ScalingClassification speedup_curve(const ScalingSeries& series, const Thresholds& thresholds = {});

// Least-squares slope of log(instructions) over log(threads); nullopt when
// fewer than two points carry positive instruction totals.
std::optional<double> instruction_growth_exponent(const ScalingSeries& series);

ScalingSeries parse_series_json(std::string_view text);
ScalingSeries load_series(const std::filesystem::path& path);
std::string write_series_json(const ScalingSeries& series);

// Total instructions retired over all regions, if every region reports them.
std::optional<double> total_instructions(const MeasurementSession& session);

}  // namespace hpmdiag
