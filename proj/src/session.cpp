#include "hpmdiag/session.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hpmdiag/error.hpp"

namespace hpmdiag {

bool RegionMeasurement::has_event(std::string_view event) const {
  if (cores.empty()) return false;
  return std::all_of(cores.begin(), cores.end(), [&](const CoreMeasurement& c) {
    return c.counts.find(std::string(event)) != c.counts.end();
  });
}

std::vector<int> RegionMeasurement::core_ids() const {
  std::vector<int> ids;
  ids.reserve(cores.size());
  for (const auto& c : cores) ids.push_back(c.core_id);
  return ids;
}

const RegionMeasurement* MeasurementSession::find_region(std::string_view name) const {
  for (const auto& r : regions) {
    if (r.region_name == name) return &r;
  }
  return nullptr;
}

bool is_canonical_event_name(std::string_view name) {
  if (name.empty() || name.front() < 'A' || name.front() > 'Z') return false;
  return std::all_of(name.begin(), name.end(), [](char ch) {
    return (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_';
  });
}

std::string Violation::to_string() const { return type + "." + field + ": " + rule; }

namespace {

std::set<std::string> event_names(const CoreMeasurement& core) {
  std::set<std::string> names;
  for (const auto& [name, value] : core.counts) names.insert(name);
  return names;
}

void check_cores(const std::vector<CoreMeasurement>& cores, const std::string& where,
                 std::vector<Violation>& out) {
  std::set<int> seen;
  bool bad_id = false;
  bool dup_id = false;
  std::set<std::string> bad_names;
  for (const auto& core : cores) {
    if (core.core_id < 0) bad_id = true;
    if (!seen.insert(core.core_id).second) dup_id = true;
    for (const auto& [name, value] : core.counts) {
      if (!is_canonical_event_name(name)) bad_names.insert(name);
    }
  }
  if (bad_id) out.push_back({"CoreMeasurement", "core_id", where + ": core_id must be >= 0"});
  if (dup_id) out.push_back({"CoreMeasurement", "core_id", where + ": duplicate core_id"});
  for (const auto& name : bad_names) {
    out.push_back({"EventCount", "event_name",
                   where + ": '" + name + "' does not match [A-Z][A-Z0-9_]*"});
  }
  if (!cores.empty()) {
    const auto reference = event_names(cores.front());
    for (const auto& core : cores) {
      if (event_names(core) != reference) {
        out.push_back({"RegionMeasurement", "cores",
                       where + ": ragged event set (core " + std::to_string(core.core_id) +
                           " differs from core " + std::to_string(cores.front().core_id) + ")"});
        break;
      }
    }
  }
}

}  // namespace

std::vector<Violation> validate_region(const RegionMeasurement& region) {
  std::vector<Violation> out;
  const std::string where = "region '" + region.region_name + "'";
  if (!(region.wall_time_s > 0.0) || !std::isfinite(region.wall_time_s)) {
    out.push_back({"RegionMeasurement", "wall_time_s", where + ": wall_time_s must be > 0"});
  }
  if (region.cores.empty()) {
    out.push_back({"RegionMeasurement", "cores", where + ": at least one core required"});
  }
  check_cores(region.cores, where, out);

  if (!region.timeline) return out;
  const auto& samples = *region.timeline;

  bool ordered = true;
  bool widths_ok = true;
  bool shape_ok = true;
  std::set<int> region_ids;
  for (const auto& c : region.cores) region_ids.insert(c.core_id);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!(s.dt_s > 0.0) || !(s.t_s >= 0.0)) widths_ok = false;
    if (i > 0 && !(s.t_s > samples[i - 1].t_s)) ordered = false;
    std::set<int> ids;
    for (const auto& c : s.per_core_counts) ids.insert(c.core_id);
    if (ids != region_ids || ids.size() != s.per_core_counts.size()) shape_ok = false;
  }
  if (!ordered) {
    out.push_back({"TimelineSample", "t_s", where + ": ordering, t_s must be strictly increasing"});
  }
  if (!widths_ok) {
    out.push_back({"TimelineSample", "dt_s", where + ": dt_s must be > 0 and t_s >= 0"});
  }
  if (!shape_ok) {
    out.push_back({"TimelineSample", "per_core_counts",
                   where + ": sample cores must match the region's cores"});
    return out;
  }

  // Timeline deltas must add up to the region totals.
  const auto totals = timeline_totals(region);
  for (const auto& core : region.cores) {
    const auto it = std::find_if(totals.begin(), totals.end(),
                                 [&](const CoreMeasurement& t) { return t.core_id == core.core_id; });
    for (const auto& [event, value] : core.counts) {
      const Count summed = it == totals.end() ? 0 : [&] {
        const auto e = it->counts.find(event);
        return e == it->counts.end() ? Count{0} : e->second;
      }();
      const double diff = std::fabs(static_cast<double>(summed) - static_cast<double>(value));
      const double allowed = region.timeline_tolerance * static_cast<double>(value);
      if (diff > allowed) {
        out.push_back({"TimelineSample", "per_core_counts",
                       where + ": timeline sum of " + event + " on core " +
                           std::to_string(core.core_id) + " differs from region total"});
        return out;
      }
    }
  }
  return out;
}

std::vector<Violation> validate_session(const MeasurementSession& session) {
  std::vector<Violation> out;
  if (session.thread_count < 1) {
    out.push_back({"MeasurementSession", "thread_count", "thread_count must be >= 1"});
  }
  if (static_cast<std::size_t>(std::max(session.thread_count, 0)) != session.core_set.size()) {
    out.push_back({"MeasurementSession", "thread_count", "thread_count must equal |core_set|"});
  }
  const std::set<int> core_set(session.core_set.begin(), session.core_set.end());
  if (core_set.size() != session.core_set.size()) {
    out.push_back({"MeasurementSession", "core_set", "core_set contains duplicates"});
  }
  for (const auto& [vendor, canonical] : session.aliases) {
    if (!is_canonical_event_name(canonical)) {
      out.push_back({"MeasurementSession", "aliases",
                     "alias target '" + canonical + "' is not a canonical event name"});
    }
  }
  for (const auto& region : session.regions) {
    for (const auto& core : region.cores) {
      if (!core_set.count(core.core_id)) {
        out.push_back({"RegionMeasurement", "cores",
                       "region '" + region.region_name + "': core " +
                           std::to_string(core.core_id) + " not in core_set"});
        break;
      }
    }
    auto region_violations = validate_region(region);
    out.insert(out.end(), region_violations.begin(), region_violations.end());
  }
  return out;
}

CountStats aggregate_counts(const RegionMeasurement& region, std::string_view event) {
  if (region.cores.empty()) throw UnknownEvent(std::string(event));
  CountStats stats;
  stats.per_core.reserve(region.cores.size());
  for (const auto& core : region.cores) {
    const auto it = core.counts.find(std::string(event));
    if (it == core.counts.end()) throw UnknownEvent(std::string(event));
    stats.per_core.push_back(it->second);
  }
  stats.min = *std::min_element(stats.per_core.begin(), stats.per_core.end());
  stats.max = *std::max_element(stats.per_core.begin(), stats.per_core.end());
  for (Count v : stats.per_core) stats.sum += v;
  stats.mean = static_cast<double>(stats.sum) / static_cast<double>(stats.per_core.size());
  return stats;
}

std::vector<CoreMeasurement> timeline_totals(const RegionMeasurement& region) {
  std::vector<CoreMeasurement> totals;
  for (const auto& core : region.cores) totals.push_back({core.core_id, {}});
  if (!region.timeline) return totals;
  for (const auto& sample : *region.timeline) {
    for (const auto& delta : sample.per_core_counts) {
      auto it = std::find_if(totals.begin(), totals.end(),
                             [&](const CoreMeasurement& t) { return t.core_id == delta.core_id; });
      if (it == totals.end()) continue;
      for (const auto& [event, value] : delta.counts) it->counts[event] += value;
    }
  }
  return totals;
}

RegionMeasurement slice_timeline(const RegionMeasurement& region, double t0, double t1) {
  if (!(t0 >= 0.0) || !(t0 < t1)) {
    throw PreconditionError("slice_timeline requires 0 <= t0 < t1");
  }
  if (!region.timeline) throw NoTimeline(region.region_name);

  RegionMeasurement slice;
  slice.region_name = region.region_name;
  slice.timeline_tolerance = region.timeline_tolerance;
  slice.timeline.emplace();
  for (const auto& sample : *region.timeline) {
    if (sample.t_s > t0 && sample.t_s <= t1) slice.timeline->push_back(sample);
  }
  if (slice.timeline->empty()) {
    throw EmptySlice("no timeline samples in (" + std::to_string(t0) + ", " + std::to_string(t1) +
                     "]");
  }
  for (const auto& sample : *slice.timeline) slice.wall_time_s += sample.dt_s;
  for (const auto& core : region.cores) {
    CoreMeasurement empty{core.core_id, {}};
    // Keep the full event set even for events absent from every sample.
    for (const auto& [event, value] : core.counts) empty.counts.emplace(event, 0);
    slice.cores.push_back(std::move(empty));
  }
  const auto totals = timeline_totals(slice);
  for (std::size_t i = 0; i < slice.cores.size(); ++i) {
    for (const auto& [event, value] : totals[i].counts) slice.cores[i].counts[event] = value;
  }
  return slice;
}

}  // namespace hpmdiag
