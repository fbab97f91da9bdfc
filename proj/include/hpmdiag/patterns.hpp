#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hpmdiag/analysis.hpp"
#include "hpmdiag/machine.hpp"
#include "hpmdiag/perfgroup.hpp"
#include "hpmdiag/session.hpp"
#include "hpmdiag/thresholds.hpp"

namespace hpmdiag {

// Declaration order is the ranking tiebreak.
enum class PatternKind {
  LoadImbalance,
  OlcBandwidthSaturation,
  MemoryBandwidthSaturation,
  StridedErraticAccess,
  BadInstructionMix,
  LimitedInstructionThroughput,
  MicroarchAnomaly,
  SynchronizationOverhead,
  FalseCachelineSharing,
  BadNumaPlacement,
};

inline constexpr std::array<PatternKind, 10> kAllPatterns{
    PatternKind::LoadImbalance,
    PatternKind::OlcBandwidthSaturation,
    PatternKind::MemoryBandwidthSaturation,
    PatternKind::StridedErraticAccess,
    PatternKind::BadInstructionMix,
    PatternKind::LimitedInstructionThroughput,
    PatternKind::MicroarchAnomaly,
    PatternKind::SynchronizationOverhead,
    PatternKind::FalseCachelineSharing,
    PatternKind::BadNumaPlacement,
};

std::string_view to_string(PatternKind kind);     // "LoadImbalance"
std::string_view display_name(PatternKind kind);  // "Load imbalance"
std::optional<PatternKind> parse_pattern_kind(std::string_view name);

enum class Relation { ge, le, approx, mismatch };
enum class EvidenceSource { hpm, scaling, static_analysis, baseline };

std::string_view to_string(Relation relation);  // ">=", "<=", "~", "mismatch"
std::string_view to_string(EvidenceSource source);

struct Evidence {
  std::string description;
  std::string metric_name;
  double observed = 0.0;
  std::optional<double> reference;
  Relation relation = Relation::ge;
  EvidenceSource source = EvidenceSource::hpm;

  friend bool operator==(const Evidence&, const Evidence&) = default;
};

struct Finding {
  PatternKind pattern = PatternKind::LoadImbalance;
  bool fired = false;
  double severity = 0.0;  // 0 unless fired
  std::vector<Evidence> evidence;
  std::vector<std::string> caveats;
  // False when a detector precondition failed; `caveats` explains why.
  bool computable = true;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct DiagnosisInput {
  MeasurementSession session;
  MachineModel machine;
  std::string region;  // empty: first region
  std::optional<ScalingSeries> series;
  std::optional<double> static_cycles_per_iter;
  std::optional<double> iterations;  // loop iterations covered by the region
  std::optional<double> model_mflops;
  bool useful_work_fp = false;
  bool data_parallel = false;
  std::string baseline;  // optional named baseline override
  Thresholds thresholds;
  const GroupRegistry* groups = nullptr;  // null: builtin registry
};

// Everything the detectors share, computed once per input.
struct PreparedInput {
  const DiagnosisInput* input = nullptr;
  const RegionMeasurement* region = nullptr;
  DerivedMetrics metrics;
  double mem_reference_MBs = 0.0;
  double olc_reference_MBs = 0.0;
  std::string mem_reference_name;
  std::optional<ScalingClassification> scaling;
  std::string scaling_error;  // set when the series could not be classified
};

// Throws ValidationError when the session does not fit the machine or the
// region does not exist.
PreparedInput prepare(const DiagnosisInput& input);

// Single detector. Throws NotComputable when its preconditions fail.
// MicroarchAnomaly runs the other detectors to apply its residual rule.
Finding detect(PatternKind kind, const PreparedInput& prepared);
Finding detect(PatternKind kind, const DiagnosisInput& input);

// The signature alone: no saturation exclusion for LimitedInstructionThroughput
// and no residual rule for MicroarchAnomaly.
Finding detect_signature(PatternKind kind, const PreparedInput& prepared);

// All ten detectors, sorted by (fired, severity, pattern order). A detector
// that cannot run contributes an unfired finding with computable = false.
std::vector<Finding> diagnose(const DiagnosisInput& input);
std::vector<Finding> diagnose(const PreparedInput& prepared);

}  // namespace hpmdiag
