#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "hpmdiag/error.hpp"
#include "hpmdiag/session.hpp"
#include "json_util.hpp"

namespace hpmdiag {

using detail::json;
using detail::ObjectReader;

namespace {

[[noreturn]] void throw_violations(const std::vector<Violation>& violations) {
  std::string message = "session violates " + std::to_string(violations.size()) + " invariant(s)";
  for (const auto& v : violations) message += "\n  " + v.to_string();
  throw ValidationError(message);
}

Count read_count(const json& value, const std::string& path) {
  if (value.is_number_unsigned()) return value.get<Count>();
  if (value.is_number_integer()) {
    throw ValidationError("EventCount.value: " + path + " must be >= 0");
  }
  if (value.is_number_float()) {
    const double v = value.get<double>();
    if (v < 0.0) throw ValidationError("EventCount.value: " + path + " must be >= 0");
    // Producers occasionally emit 2.74e10 style literals for integral counts.
    if (std::floor(v) == v && v < 1.8e19) return static_cast<Count>(v);
  }
  throw ParseError(path, "expected a non-negative integer count");
}

EventCounts read_counts(const json& object, const std::string& path,
                        const std::map<std::string, std::string>& aliases) {
  if (!object.is_object()) throw ParseError(path, "expected an object of event counts");
  EventCounts counts;
  for (const auto& [raw_name, value] : object.items()) {
    const auto alias = aliases.find(raw_name);
    const std::string& name = alias == aliases.end() ? raw_name : alias->second;
    if (!counts.emplace(name, read_count(value, path + "." + raw_name)).second) {
      throw ValidationError("CoreMeasurement.counts: " + path + " has duplicate event '" + name +
                            "' after alias mapping");
    }
  }
  return counts;
}

std::vector<CoreMeasurement> read_cores(const json& array, const std::string& path, bool strict,
                                        const std::map<std::string, std::string>& aliases) {
  if (!array.is_array()) throw ParseError(path, "expected an array");
  std::vector<CoreMeasurement> cores;
  for (std::size_t i = 0; i < array.size(); ++i) {
    ObjectReader r(array[i], path + "[" + std::to_string(i) + "]", strict);
    CoreMeasurement core;
    core.core_id = r.integer("core_id");
    core.counts = read_counts(r.required("counts"), r.child("counts"), aliases);
    r.finish();
    cores.push_back(std::move(core));
  }
  return cores;
}

nlohmann::ordered_json cores_to_json(const std::vector<CoreMeasurement>& cores) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& core : cores) {
    nlohmann::ordered_json c;
    c["core_id"] = core.core_id;
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [name, value] : core.counts) counts[name] = value;
    c["counts"] = std::move(counts);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

MeasurementSession parse_session_json(std::string_view text, LoadOptions options) {
  const json root = detail::parse_json_text(text, "session");
  const bool strict = !options.lenient;
  ObjectReader top(root, "", strict);

  MeasurementSession session;
  session.session_id = top.text("session_id");
  session.machine_ref = top.text("machine_ref");
  session.thread_count = top.integer("thread_count");
  const json& core_set = top.required("core_set");
  if (!core_set.is_array()) throw ParseError("core_set", "expected an array");
  for (std::size_t i = 0; i < core_set.size(); ++i) {
    session.core_set.push_back(detail::as_integer(core_set[i], "core_set[" + std::to_string(i) + "]"));
  }
  if (const json* aliases = top.optional("aliases")) {
    if (!aliases->is_object()) throw ParseError("aliases", "expected an object");
    for (const auto& [vendor, canonical] : aliases->items()) {
      session.aliases[vendor] = detail::as_text(canonical, "aliases." + vendor);
    }
  }
  if (const json* notes = top.optional("notes")) session.notes = detail::as_text(*notes, "notes");

  const json& regions = top.required("regions");
  if (!regions.is_array()) throw ParseError("regions", "expected an array");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string path = "regions[" + std::to_string(i) + "]";
    ObjectReader r(regions[i], path, strict);
    RegionMeasurement region;
    region.region_name = r.text("region_name");
    region.wall_time_s = r.number("wall_time_s");
    region.cores = read_cores(r.required("cores"), r.child("cores"), strict, session.aliases);
    if (const json* tol = r.optional("timeline_tolerance")) {
      region.timeline_tolerance = detail::as_number(*tol, r.child("timeline_tolerance"));
    }
    if (const json* timeline = r.optional("timeline")) {
      if (!timeline->is_array()) throw ParseError(r.child("timeline"), "expected an array");
      region.timeline.emplace();
      for (std::size_t k = 0; k < timeline->size(); ++k) {
        ObjectReader s((*timeline)[k], r.child("timeline") + "[" + std::to_string(k) + "]", strict);
        TimelineSample sample;
        sample.t_s = s.number("t_s");
        sample.dt_s = s.number("dt_s");
        sample.per_core_counts =
            read_cores(s.required("per_core_counts"), s.child("per_core_counts"), strict, session.aliases);
        s.finish();
        region.timeline->push_back(std::move(sample));
      }
    }
    r.finish();
    session.regions.push_back(std::move(region));
  }
  top.finish();

  const auto violations = validate_session(session);
  if (!violations.empty()) throw_violations(violations);
  return session;
}

MeasurementSession load_session(const std::filesystem::path& path, LoadOptions options) {
  const std::string text = detail::read_text_file(path);
  if (path.extension() == ".csv") return parse_session_csv(text, path.stem().string());
  try {
    return parse_session_json(text, options);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.context(), e.message());
  }
}

std::string write_session_json(const MeasurementSession& session) {
  nlohmann::ordered_json root;
  root["session_id"] = session.session_id;
  root["machine_ref"] = session.machine_ref;
  root["thread_count"] = session.thread_count;
  root["core_set"] = session.core_set;
  nlohmann::ordered_json aliases = nlohmann::ordered_json::object();
  for (const auto& [vendor, canonical] : session.aliases) aliases[vendor] = canonical;
  root["aliases"] = std::move(aliases);
  if (!session.notes.empty()) root["notes"] = session.notes;
  auto regions = nlohmann::ordered_json::array();
  for (const auto& region : session.regions) {
    nlohmann::ordered_json r;
    r["region_name"] = region.region_name;
    r["wall_time_s"] = region.wall_time_s;
    r["cores"] = cores_to_json(region.cores);
    if (region.timeline_tolerance != 0.0) r["timeline_tolerance"] = region.timeline_tolerance;
    if (region.timeline) {
      auto samples = nlohmann::ordered_json::array();
      for (const auto& sample : *region.timeline) {
        nlohmann::ordered_json s;
        s["t_s"] = sample.t_s;
        s["dt_s"] = sample.dt_s;
        s["per_core_counts"] = cores_to_json(sample.per_core_counts);
        samples.push_back(std::move(s));
      }
      r["timeline"] = std::move(samples);
    }
    regions.push_back(std::move(r));
  }
  root["regions"] = std::move(regions);
  return root.dump(2) + "\n";
}

void write_session(const MeasurementSession& session, const std::filesystem::path& path) {
  detail::write_text_file(path, write_session_json(session));
}

// ---------------------------------------------------------------------------
// CSV importer
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view field, const std::string& context) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(context, "invalid number '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

MeasurementSession parse_session_csv(std::string_view text, std::string default_session_id) {
  MeasurementSession session;
  session.session_id = std::move(default_session_id);

  std::optional<double> wall_time;
  std::map<std::string, std::size_t> region_index;
  std::set<int> cores_seen;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const std::string context = "csv:" + std::to_string(line_no);
    const std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '#') {
      const auto directive = trim(line.substr(1));
      const auto eq = directive.find('=');
      if (eq == std::string_view::npos) continue;  // plain comment
      const auto key = trim(directive.substr(0, eq));
      const auto value = trim(directive.substr(eq + 1));
      if (key == "wall_time_s") {
        wall_time = parse_number<double>(value, context);
      } else if (key == "session_id") {
        session.session_id = std::string(value);
      } else if (key == "machine_ref") {
        session.machine_ref = std::string(value);
      }
      continue;
    }

    const auto fields = split_commas(line);
    if (fields.size() == 4 && fields[0] == "region" && fields[1] == "core_id") continue;  // header
    if (fields.size() != 4) throw ParseError(context, "expected 4 fields: region,core_id,event,value");

    const std::string region_name(fields[0]);
    auto [it, inserted] = region_index.try_emplace(region_name, session.regions.size());
    if (inserted) {
      if (!wall_time) throw ParseError(context, "#wall_time_s=<float> must precede region data");
      RegionMeasurement region;
      region.region_name = region_name;
      region.wall_time_s = *wall_time;
      session.regions.push_back(std::move(region));
    }
    auto& region = session.regions[it->second];
    const int core_id = parse_number<int>(fields[1], context);
    cores_seen.insert(core_id);
    auto core = std::find_if(region.cores.begin(), region.cores.end(),
                             [&](const CoreMeasurement& c) { return c.core_id == core_id; });
    if (core == region.cores.end()) {
      region.cores.push_back({core_id, {}});
      core = std::prev(region.cores.end());
    }
    const Count value = parse_number<Count>(fields[3], context);
    if (!core->counts.emplace(std::string(fields[2]), value).second) {
      throw ParseError(context, "duplicate entry for event " + std::string(fields[2]));
    }
  }

  session.core_set.assign(cores_seen.begin(), cores_seen.end());
  session.thread_count = static_cast<int>(session.core_set.size());
  const auto violations = validate_session(session);
  if (!violations.empty()) throw_violations(violations);
  return session;
}

}  // namespace hpmdiag
