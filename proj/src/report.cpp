#include "hpmdiag/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "json.hpp"

namespace hpmdiag {

namespace {

using ojson = nlohmann::ordered_json;

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ojson metric_json(const MetricValue& v) {
  if (v.ok()) return v.value();
  return v.describe();
}

std::string evidence_line(const Evidence& e) {
  std::string line = e.description + ": " + e.metric_name + " = " + format_number(e.observed);
  if (e.reference) {
    line += " " + std::string(to_string(e.relation)) + " " + format_number(*e.reference);
  } else if (e.relation == Relation::mismatch) {
    line += " (mismatch)";
  }
  return line + " [" + std::string(to_string(e.source)) + "]";
}

void pad(std::ostringstream& out, const std::string& s, std::size_t width) {
  out << s;
  for (std::size_t i = s.size(); i < width; ++i) out << ' ';
}

}  // namespace

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string render_text_report(const PreparedInput& p, const std::vector<Finding>& findings,
                               const ReportOptions& options) {
  const auto& in = *p.input;
  const auto& region = *p.region;
  std::ostringstream out;

  out << "Session " << in.session.session_id << "  region " << region.region_name << "\n";
  out << "  machine " << in.machine.name << ", " << region.cores.size() << " core(s), wall time "
      << format_number(region.wall_time_s) << " s\n";
  if (options.timestamp) out << "  generated " << utc_now() << "\n";

  out << "\nDerived metrics\n";
  for (const auto& [name, value] : metric_fields(p.metrics.aggregate)) {
    out << "  ";
    pad(out, name, 20);
    out << value.describe() << "\n";
  }
  out << "  ";
  pad(out, "mem_reference_MBs", 20);
  out << format_number(p.mem_reference_MBs) << " (" << p.mem_reference_name << ")\n";
  out << "  ";
  pad(out, "olc_reference_MBs", 20);
  out << format_number(p.olc_reference_MBs) << "\n";
  if (p.scaling) {
    out << "  ";
    pad(out, "scaling_shape", 20);
    out << to_string(p.scaling->shape);
    if (p.scaling->saturation_point) out << " (saturates at " << *p.scaling->saturation_point << " threads)";
    out << "\n";
  }

  out << "\nFindings\n";
  int rank = 0;
  for (const auto& f : findings) {
    if (!f.fired) continue;
    out << "  " << ++rank << ". " << display_name(f.pattern) << "  severity " << format_number(f.severity) << "\n";
    for (const auto& e : f.evidence) out << "       - " << evidence_line(e) << "\n";
  }
  if (rank == 0) out << "  no patterns detected\n";

  out << "\nNot fired\n";
  for (const auto& f : findings) {
    if (f.fired) continue;
    out << "  " << display_name(f.pattern) << (f.computable ? "" : " (not computable)") << "\n";
    for (const auto& e : f.evidence) out << "       - " << evidence_line(e) << "\n";
  }

  bool any_caveat = false;
  for (const auto& f : findings) {
    for (const auto& c : f.caveats) {
      if (!any_caveat) out << "\nCaveats\n";
      any_caveat = true;
      out << "  " << to_string(f.pattern) << ": " << c << "\n";
    }
  }
  return out.str();
}

std::string render_json_report(const PreparedInput& p, const std::vector<Finding>& findings,
                               const ReportOptions& options) {
  const auto& in = *p.input;
  ojson root;
  root["session_id"] = in.session.session_id;
  root["region"] = p.region->region_name;
  root["machine"] = in.machine.name;

  auto list = ojson::array();
  for (const auto& f : findings) {
    ojson jf;
    jf["pattern"] = to_string(f.pattern);
    jf["fired"] = f.fired;
    jf["severity"] = f.severity;
    jf["computable"] = f.computable;
    auto ev = ojson::array();
    for (const auto& e : f.evidence) {
      ojson je;
      je["description"] = e.description;
      je["metric"] = e.metric_name;
      je["observed"] = e.observed;
      je["reference"] = e.reference ? ojson(*e.reference) : ojson(nullptr);
      je["relation"] = to_string(e.relation);
      je["source"] = to_string(e.source);
      ev.push_back(std::move(je));
    }
    jf["evidence"] = std::move(ev);
    jf["caveats"] = f.caveats;
    list.push_back(std::move(jf));
  }
  root["findings"] = std::move(list);

  ojson metrics;
  for (const auto& [name, value] : metric_fields(p.metrics.aggregate)) metrics[name] = metric_json(value);
  metrics["mem_reference_MBs"] = p.mem_reference_MBs;
  metrics["olc_reference_MBs"] = p.olc_reference_MBs;
  auto per_core = ojson::array();
  for (std::size_t i = 0; i < p.metrics.core_ids.size(); ++i) {
    ojson c;
    c["core_id"] = p.metrics.core_ids[i];
    for (const auto& [name, value] : metric_fields(p.metrics.per_core[i])) c[name] = metric_json(value);
    per_core.push_back(std::move(c));
  }
  metrics["per_core"] = std::move(per_core);
  if (p.scaling) {
    ojson s;
    s["threads"] = p.scaling->threads;
    s["speedups"] = p.scaling->speedups;
    s["shape"] = to_string(p.scaling->shape);
    s["saturation_point"] = p.scaling->saturation_point ? ojson(*p.scaling->saturation_point) : ojson(nullptr);
    metrics["scaling"] = std::move(s);
  }
  root["metrics"] = std::move(metrics);

  ojson used;
  for (const auto& [name, value] : in.thresholds.values()) used[name] = value;
  root["thresholds_used"] = std::move(used);
  if (options.timestamp) root["generated_at"] = utc_now();
  return root.dump(2) + "\n";
}

}  // namespace hpmdiag
