#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hpmdiag/analysis.hpp"
#include "hpmdiag/machine.hpp"
#include "hpmdiag/patterns.hpp"
#include "hpmdiag/session.hpp"
#include "hpmdiag/thresholds.hpp"

namespace hpmdiag {

// Two Westmere-like sockets of six cores.
MachineModel default_synth_machine();

struct SyntheticSpec {
  std::optional<PatternKind> pattern;  // none: clean baseline
  int cores = 12;
  double intensity = 0.0;  // [0, 1]
  std::uint64_t seed = 0;
  MachineModel machine = default_synth_machine();
};

// Ground truth and the side inputs a diagnosis needs.
struct SyntheticLabel {
  std::optional<PatternKind> pattern;
  double intensity = 0.0;
  std::uint64_t seed = 0;
  bool useful_work_fp = true;
  bool data_parallel = true;
  double model_mflops = 0.0;  // what the clean workload achieves
  ScalingSeries series;

  friend bool operator==(const SyntheticLabel&, const SyntheticLabel&) = default;
};

struct SyntheticCase {
  MeasurementSession session;
  SyntheticLabel label;
};

// Deterministic in the spec. Throws UnsupportedPattern when the machine or
// core count cannot express the pattern, ValidationError for a bad spec.
SyntheticCase generate_session(const SyntheticSpec& spec);

std::string write_label_json(const SyntheticLabel& label);
SyntheticLabel parse_label_json(std::string_view text);
SyntheticLabel load_label(const std::filesystem::path& path);

// The diagnosis input a label implies for its session.
DiagnosisInput diagnosis_input(MeasurementSession session, const SyntheticLabel& label, const MachineModel& machine,
                               const Thresholds& thresholds = {});

struct SweepRow {
  std::optional<PatternKind> injected;
  int cases = 0;
  int hits = 0;         // injected pattern fired
  int top2 = 0;         // injected pattern among the first two fired findings
  int any_fired = 0;    // cases with at least one fired finding
  double hit_rate() const { return cases ? static_cast<double>(hits) / cases : 0.0; }
  double top2_rate() const { return cases ? static_cast<double>(top2) / cases : 0.0; }
};

struct FalsePositiveRow {
  PatternKind pattern;
  int negatives = 0;  // cases where this pattern was not injected
  int fired = 0;
  double rate() const { return negatives ? static_cast<double>(fired) / negatives : 0.0; }
};

struct SweepSummary {
  std::vector<SweepRow> rows;  // one per injected pattern (none first), in order of first appearance
  std::vector<FalsePositiveRow> false_positives;  // one per PatternKind
};

// Generates, round-trips through the session file format, diagnoses.
SweepSummary sweep(const std::vector<SyntheticSpec>& specs, const Thresholds& thresholds = {});
std::string format_sweep_text(const SweepSummary& summary);
std::string format_sweep_json(const SweepSummary& summary);

}  // namespace hpmdiag
