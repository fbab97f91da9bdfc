#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hpmdiag {

using Count = std::uint64_t;

// Event name -> raw count, ordered so serialization is stable.
using EventCounts = std::map<std::string, Count>;

struct CoreMeasurement {
  int core_id = 0;
  EventCounts counts;

  friend bool operator==(const CoreMeasurement&, const CoreMeasurement&) = default;
};

struct TimelineSample {
  double t_s = 0.0;   // sample end time
  double dt_s = 0.0;  // sample width
  std::vector<CoreMeasurement> per_core_counts;  // deltas within the sample

  friend bool operator==(const TimelineSample&, const TimelineSample&) = default;
};

struct RegionMeasurement {
  std::string region_name;
  double wall_time_s = 0.0;
  std::vector<CoreMeasurement> cores;
  std::optional<std::vector<TimelineSample>> timeline;
  // Relative tolerance between summed timeline deltas and region totals.
  double timeline_tolerance = 0.0;

  bool has_event(std::string_view event) const;
  // Core order as stored.
  std::vector<int> core_ids() const;

  friend bool operator==(const RegionMeasurement&, const RegionMeasurement&) = default;
};

struct MeasurementSession {
  std::string session_id;
  std::string machine_ref;
  int thread_count = 0;
  std::vector<int> core_set;
  std::map<std::string, std::string> aliases;  // vendor name -> canonical name
  std::vector<RegionMeasurement> regions;
  std::string notes;

  const RegionMeasurement* find_region(std::string_view name) const;

  friend bool operator==(const MeasurementSession&, const MeasurementSession&) = default;
};

// Canonical event names: uppercase identifier, `[A-Z][A-Z0-9_]*`.
bool is_canonical_event_name(std::string_view name);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

// One broken invariant. `type` and `field` name the data-model location.
struct Violation {
  std::string type;
  std::string field;
  std::string rule;

  std::string to_string() const;
  friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate_session(const MeasurementSession& session);
std::vector<Violation> validate_region(const RegionMeasurement& region);

// ---------------------------------------------------------------------------
// I/O
// ---------------------------------------------------------------------------

struct LoadOptions {
  bool lenient = false;  // accept unknown JSON keys
};

// Throws ParseError or ValidationError (the latter lists every violation).
MeasurementSession load_session(const std::filesystem::path& path, LoadOptions options = {});
MeasurementSession parse_session_json(std::string_view text, LoadOptions options = {});
std::string write_session_json(const MeasurementSession& session);
void write_session(const MeasurementSession& session, const std::filesystem::path& path);

// `region,core_id,event,value` rows; `#wall_time_s=<float>` applies to the
// regions that follow it. `#session_id=` and `#machine_ref=` are optional.
MeasurementSession parse_session_csv(std::string_view text, std::string default_session_id = "csv");

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

struct CountStats {
  Count sum = 0;
  Count min = 0;
  Count max = 0;
  double mean = 0.0;
  std::vector<Count> per_core;  // same order as region.cores
};

// Throws UnknownEvent when a core lacks `event`.
CountStats aggregate_counts(const RegionMeasurement& region, std::string_view event);

// Samples with t0 < t_s <= t1; core totals become the sums of the included
// deltas and wall time the summed sample widths. Throws PreconditionError,
// NoTimeline or EmptySlice.
RegionMeasurement slice_timeline(const RegionMeasurement& region, double t0, double t1);

// Sums every event over the timeline samples, per core.
std::vector<CoreMeasurement> timeline_totals(const RegionMeasurement& region);

}  // namespace hpmdiag
