#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "hpmdiag/analysis.hpp"
#include "hpmdiag/error.hpp"
#include "hpmdiag/machine.hpp"
#include "hpmdiag/patterns.hpp"
#include "hpmdiag/perfgroup.hpp"
#include "hpmdiag/report.hpp"
#include "hpmdiag/session.hpp"
#include "hpmdiag/synth.hpp"
#include "hpmdiag/thresholds.hpp"
#include "json.hpp"

namespace hpmdiag::cli {

namespace fs = std::filesystem;

namespace {

// Group files in a directory, sorted by name; the group name is the stem.
struct GroupDirResult {
  GroupRegistry registry;
  std::vector<std::string> user_groups;
  std::vector<std::string> diagnostics;
};

GroupDirResult load_group_dir(const std::string& dir, bool fail_fast) {
  GroupDirResult result;
  result.registry = builtin_groups();
  if (dir.empty()) return result;
  if (!fs::is_directory(dir)) throw IoError("cannot open groups directory '" + dir + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    try {
      auto group = load_group_file(file);
      result.user_groups.push_back(group.group_name);
      result.registry.add(std::move(group));
    } catch (const ParseError& e) {
      if (fail_fast) throw;
      result.diagnostics.push_back(e.what());
    }
  }
  return result;
}

Thresholds load_thresholds_opt(const std::string& path) {
  return path.empty() ? Thresholds{} : load_thresholds(path);
}

const RegionMeasurement& pick_region(const MeasurementSession& s, const std::string& name) {
  if (s.regions.empty()) throw ValidationError("session '" + s.session_id + "' has no regions");
  if (name.empty()) return s.regions.front();
  const auto* r = s.find_region(name);
  if (r == nullptr) throw ValidationError("no region named '" + name + "' in session '" + s.session_id + "'");
  return *r;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write '" + path + "'");
  file << text;
  if (!file) throw IoError("cannot write '" + path + "'");
}

std::string num(double v) { return format_number(v); }

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string session;
  std::string machine;
  std::string groups;
  std::string thresholds;
  std::string baseline;
  std::string useful_work;
  bool data_parallel = false;
  std::optional<double> static_cycles;
  std::optional<double> iterations;
  std::optional<double> model_mflops;
  std::string format = "text";
  bool lenient = false;
  bool no_timestamp = false;
  std::string region;
  std::string scaling;
  std::string label;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const auto groups = load_group_dir(a.groups, true);
  DiagnosisInput in;
  in.session = load_session(a.session, {a.lenient});
  in.machine = load_machine(a.machine);
  in.thresholds = load_thresholds_opt(a.thresholds);
  in.region = a.region;
  in.baseline = a.baseline;
  in.groups = &groups.registry;
  if (!a.label.empty()) {
    const auto label = load_label(a.label);
    if (label.series.points.size() >= 2) in.series = label.series;
    in.model_mflops = label.model_mflops;
    in.useful_work_fp = label.useful_work_fp;
    in.data_parallel = label.data_parallel;
  }
  if (!a.scaling.empty()) in.series = load_series(a.scaling);
  if (!a.useful_work.empty()) in.useful_work_fp = a.useful_work == "fp";
  if (a.data_parallel) in.data_parallel = true;
  if (a.static_cycles) in.static_cycles_per_iter = a.static_cycles;
  if (a.iterations) in.iterations = a.iterations;
  if (a.model_mflops) in.model_mflops = a.model_mflops;

  const auto prepared = prepare(in);
  const auto findings = diagnose(prepared);
  ReportOptions opts;
  opts.timestamp = !a.no_timestamp;
  out << (a.format == "json" ? render_json_report(prepared, findings, opts)
                             : render_text_report(prepared, findings, opts));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// timeline
// ---------------------------------------------------------------------------

struct TimelineArgs {
  std::string session;
  std::string metric;
  double resolution = 0.0;
  std::string out;
  std::string groups;
  std::string region;
  bool lenient = false;
};

std::string metric_cell(const MetricValue& v) {
  if (v.ok()) return num(v.value());
  return v.state() == MetricValue::State::undefined ? "undefined" : "not computable";
}

int cmd_timeline(const TimelineArgs& a, std::ostream& out) {
  const auto groups = load_group_dir(a.groups, true);
  const auto session = load_session(a.session, {a.lenient});
  const auto& region = pick_region(session, a.region);

  const auto found = groups.registry.find_metric(a.metric);
  if (!found) throw UnknownMetric("unknown metric '" + a.metric + "'");
  const auto& [group, formula] = *found;

  std::vector<std::string> missing;
  for (const auto& slot : referenced_slots(*formula->expression)) {
    const auto* entry = group->find_slot(slot);
    if (!region.has_event(entry->event_name)) missing.push_back(entry->event_name);
  }
  if (!missing.empty()) {
    std::string msg = "metric " + a.metric + " not computable, missing events:";
    for (const auto& m : missing) msg += " " + m;
    throw UnknownMetric(msg);
  }
  if (!region.timeline) throw NoTimeline(region.region_name);
  if (!(a.resolution > 0.0)) throw ValidationError("--resolution must be > 0");

  const auto& samples = *region.timeline;
  const auto core_ids = region.core_ids();
  const auto bin_of = [&](double t) { return std::max(0L, static_cast<long>(std::ceil(t / a.resolution - 1e-9)) - 1); };
  const long bins = samples.empty() ? 0 : bin_of(samples.back().t_s) + 1;

  struct Bin {
    double time = 0.0;
    bool used = false;
    std::vector<std::map<std::string, double>> per_core;
  };
  std::vector<Bin> acc(static_cast<std::size_t>(bins));
  for (auto& b : acc) b.per_core.resize(core_ids.size());
  for (const auto& s : samples) {
    auto& b = acc[static_cast<std::size_t>(bin_of(s.t_s))];
    b.used = true;
    b.time += s.dt_s;
    for (const auto& core : s.per_core_counts) {
      const auto it = std::find(core_ids.begin(), core_ids.end(), core.core_id);
      auto& target = b.per_core[static_cast<std::size_t>(it - core_ids.begin())];
      for (const auto& [ev, v] : core.counts) target[ev] += static_cast<double>(v);
    }
  }

  const auto bind = [&](const std::map<std::string, double>& counts) {
    SlotBindings b;
    for (const auto& e : group->event_set) {
      const auto it = counts.find(e.event_name);
      b[e.counter_slot] = it == counts.end() ? 0.0 : it->second;
    }
    return b;
  };

  std::ostringstream csv;
  csv << "t_s";
  for (int id : core_ids) csv << "," << a.metric << "_core" << id;
  csv << "," << a.metric << "_total\n";
  for (long i = 0; i < bins; ++i) {
    const auto& b = acc[static_cast<std::size_t>(i)];
    csv << num(a.resolution * static_cast<double>(i + 1));
    if (!b.used) {
      for (std::size_t c = 0; c <= core_ids.size(); ++c) csv << ",";
      csv << "\n";
      continue;
    }
    std::map<std::string, double> total;
    for (const auto& counts : b.per_core) {
      csv << "," << metric_cell(evaluate_formula(*formula, bind(counts), b.time));
      for (const auto& [ev, v] : counts) total[ev] += v;
    }
    csv << "," << metric_cell(evaluate_formula(*formula, bind(total), b.time)) << "\n";
  }
  write_output(a.out, csv.str(), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// scaling
// ---------------------------------------------------------------------------

struct ScalingArgs {
  std::vector<std::string> sessions;
  std::string series;
  std::string group_by;
  std::string machine;
  std::string thresholds;
  std::string region;
  std::string format = "text";
  bool lenient = false;
};

std::optional<std::vector<CoreGroup>> sharing_groups(const std::string& by, const MachineModel& m) {
  if (by == "olc") return m.topology.olc_groups;
  if (by == "numa") return m.topology.numa_domains;
  if (by == "socket") return m.topology.socket_groups();
  return std::nullopt;
}

bool inside_one_group(const std::vector<int>& cores, const std::vector<CoreGroup>& groups) {
  for (const auto& g : groups) {
    if (std::all_of(cores.begin(), cores.end(),
                    [&](int c) { return std::find(g.begin(), g.end(), c) != g.end(); })) {
      return true;
    }
  }
  return false;
}

int cmd_scaling(const ScalingArgs& a, std::ostream& out) {
  const auto thresholds = load_thresholds_opt(a.thresholds);
  std::optional<std::vector<CoreGroup>> groups;
  if (!a.group_by.empty()) {
    if (a.machine.empty()) throw ValidationError("--group-by needs --machine");
    groups = sharing_groups(a.group_by, load_machine(a.machine));
  }

  ScalingSeries series;
  std::vector<std::vector<int>> point_cores;
  if (!a.series.empty()) {
    series = load_series(a.series);
  } else {
    for (const auto& path : a.sessions) {
      const auto s = load_session(path, {a.lenient});
      const auto& region = pick_region(s, a.region);
      ScalingPoint p;
      p.threads = s.thread_count;
      p.value = region.wall_time_s;
      p.instructions = total_instructions(s);
      p.label = s.session_id;
      p.session_ref = path;
      series.points.push_back(std::move(p));
      point_cores.push_back(s.core_set);
    }
    series.label = "sessions";
  }

  if (groups) {
    std::size_t largest = 0;
    for (const auto& g : *groups) largest = std::max(largest, g.size());
    ScalingSeries kept = series;
    kept.points.clear();
    for (std::size_t i = 0; i < series.points.size(); ++i) {
      const bool ok = point_cores.empty() ? series.points[i].threads <= static_cast<int>(largest)
                                          : inside_one_group(point_cores[i], *groups);
      if (ok) kept.points.push_back(series.points[i]);
    }
    series = std::move(kept);
  }

  if (series.points.size() < 2) {
    throw TooFewPoints("scaling analysis needs at least 2 runs, got " + std::to_string(series.points.size()));
  }

  // Equal thread counts: a before/after comparison of two variants.
  const bool comparison = std::all_of(series.points.begin(), series.points.end(),
                                      [&](const ScalingPoint& p) { return p.threads == series.points[0].threads; });
  if (comparison) {
    const auto& base = series.points.front();
    nlohmann::ordered_json j;
    j["mode"] = "comparison";
    auto rows = nlohmann::ordered_json::array();
    std::ostringstream text;
    text << "Comparison at " << base.threads << " thread(s), baseline " << (base.label.empty() ? "run 1" : base.label)
         << "\n";
    for (std::size_t i = 0; i < series.points.size(); ++i) {
      const auto& p = series.points[i];
      const double speedup = series.kind == SeriesKind::runtime ? base.value / p.value : p.value / base.value;
      const std::string name = p.label.empty() ? "run " + std::to_string(i + 1) : p.label;
      text << "  " << name << "  " << num(p.value) << (series.kind == SeriesKind::runtime ? " s" : " " + series.unit)
           << "  speedup " << num(speedup) << "\n";
      rows.push_back({{"label", name}, {"value", p.value}, {"speedup", speedup}});
    }
    j["runs"] = std::move(rows);
    out << (a.format == "json" ? j.dump(2) + "\n" : text.str());
    return kExitOk;
  }

  std::stable_sort(series.points.begin(), series.points.end(),
                   [](const ScalingPoint& x, const ScalingPoint& y) { return x.threads < y.threads; });
  const auto c = speedup_curve(series, thresholds);
  if (a.format == "json") {
    nlohmann::ordered_json j;
    j["mode"] = "scaling";
    j["threads"] = c.threads;
    j["speedups"] = c.speedups;
    j["shape"] = to_string(c.shape);
    j["saturation_point"] = c.saturation_point ? nlohmann::ordered_json(*c.saturation_point) : nullptr;
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << "threads  speedup\n";
  for (std::size_t i = 0; i < c.threads.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%7d  %s\n", c.threads[i], num(c.speedups[i]).c_str());
    out << buf;
  }
  out << "shape: " << to_string(c.shape) << "\n";
  out << "saturation point: " << (c.saturation_point ? std::to_string(*c.saturation_point) : "none") << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// groups
// ---------------------------------------------------------------------------

int cmd_groups(const std::string& dir, std::ostream& out, std::ostream& err) {
  const auto result = load_group_dir(dir, false);
  for (const auto& g : result.registry.groups()) {
    const bool user = std::find(result.user_groups.begin(), result.user_groups.end(), g.group_name) !=
                      result.user_groups.end();
    out << g.group_name << (user ? " (user)" : "") << ": " << g.short_description << "\n";
    out << "  events:";
    for (const auto& e : g.event_set) out << " " << e.counter_slot << "=" << e.event_name;
    out << "\n";
    for (const auto& m : g.metrics) {
      out << "  " << m.metric_name;
      if (!m.unit.empty()) out << " [" << m.unit << "]";
      out << " = " << print_expr(*m.expression) << "\n";
    }
  }
  for (const auto& d : result.diagnostics) err << "error: " << d << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth / sweep
// ---------------------------------------------------------------------------

std::optional<PatternKind> pattern_arg(const std::string& name) {
  if (name.empty() || name == "None" || name == "none" || name == "clean") return std::nullopt;
  const auto k = parse_pattern_kind(name);
  if (!k) throw ValidationError("unknown pattern '" + name + "'");
  return k;
}

struct SynthArgs {
  std::string pattern;
  int cores = 12;
  double intensity = 0.0;
  std::uint64_t seed = 0;
  std::string machine;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  spec.pattern = pattern_arg(a.pattern);
  spec.cores = a.cores;
  spec.intensity = a.intensity;
  spec.seed = a.seed;
  if (!a.machine.empty()) spec.machine = load_machine(a.machine);
  const auto c = generate_session(spec);
  const fs::path path(a.out);
  const fs::path label_path = path.parent_path() / (path.stem().string() + ".label.json");
  write_output(path.string(), write_session_json(c.session), out);
  write_output(label_path.string(), write_label_json(c.label), out);
  out << "wrote " << path.string() << " and " << label_path.string() << "\n";
  return kExitOk;
}

struct SweepArgs {
  int per_pattern = 20;
  int clean = 50;
  double intensity = 0.8;
  std::uint64_t seed = 1;
  int cores = 12;
  std::string machine;
  std::string thresholds;
  std::string format = "text";
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const auto machine = a.machine.empty() ? default_synth_machine() : load_machine(a.machine);
  std::vector<SyntheticSpec> specs;
  std::uint64_t seed = a.seed;
  for (int i = 0; i < a.clean; ++i) specs.push_back({std::nullopt, a.cores, 0.0, seed++, machine});
  for (auto k : kAllPatterns) {
    for (int i = 0; i < a.per_pattern; ++i) specs.push_back({k, a.cores, a.intensity, seed++, machine});
  }
  const auto summary = sweep(specs, load_thresholds_opt(a.thresholds));
  out << (a.format == "json" ? format_sweep_json(summary) : format_sweep_text(summary));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diagnose performance patterns from hardware counter measurements", "hpmdiag"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hpmdiag 0.1.0");

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Derive metrics and rank performance patterns for a session");
  an->add_option("--session", analyze.session, "Session file (.json, or .csv importer layout)")->required();
  an->add_option("--machine", analyze.machine, "Machine model file")->required();
  an->add_option("--groups", analyze.groups, "Directory of extra performance-group files");
  an->add_option("--thresholds", analyze.thresholds, "Thresholds file");
  an->add_option("--baseline", analyze.baseline, "Named baseline used as the bandwidth reference")
      ->check(CLI::IsMember({"stream_bw_core", "update_bw_socket", "olc_bw", "stream_bw_core_MBs",
                             "update_bw_socket_MBs", "olc_bw_MBs"}));
  an->add_option("--useful-work", analyze.useful_work, "Declare the useful work (fp)")->check(CLI::IsMember({"fp", "other"}));
  an->add_flag("--data-parallel", analyze.data_parallel, "Loops are data parallel (SIMD expected)");
  an->add_option("--static-cycles", analyze.static_cycles, "Cycles per iteration predicted by static code analysis");
  an->add_option("--iterations", analyze.iterations, "Loop iterations covered by the region");
  an->add_option("--model-mflops", analyze.model_mflops, "Performance-model prediction in MFlop/s");
  an->add_option("--format", analyze.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  an->add_flag("--lenient", analyze.lenient, "Accept unknown keys in the session file");
  an->add_flag("--no-timestamp", analyze.no_timestamp, "Omit the generation time");
  an->add_option("--region", analyze.region, "Region to analyze (default: first)");
  an->add_option("--scaling", analyze.scaling, "Scaling series file");
  an->add_option("--label", analyze.label, "Synthetic label sidecar (series, model prediction, workload flags)");

  TimelineArgs timeline;
  auto* tl = app.add_subcommand("timeline", "Export a metric timeline as CSV");
  tl->add_option("--session", timeline.session, "Session file")->required();
  tl->add_option("--metric", timeline.metric, "Metric name, e.g. DP_MFLOPS or MEM_BW")->required();
  tl->add_option("--resolution", timeline.resolution, "Bin width in seconds")->required();
  tl->add_option("--out", timeline.out, "Output CSV (default stdout)");
  tl->add_option("--groups", timeline.groups, "Directory of extra performance-group files");
  tl->add_option("--region", timeline.region, "Region (default: first)");
  tl->add_flag("--lenient", timeline.lenient, "Accept unknown keys in the session file");

  ScalingArgs scaling;
  auto* sc = app.add_subcommand("scaling", "Classify speedup over thread counts or compare variants");
  sc->add_option("sessions", scaling.sessions, "Session files, one per run");
  sc->add_option("--series", scaling.series, "Scaling series file instead of sessions");
  sc->add_option("--group-by", scaling.group_by, "Restrict to one sharing group")
      ->check(CLI::IsMember({"olc", "numa", "socket"}));
  sc->add_option("--machine", scaling.machine, "Machine model file (for --group-by)");
  sc->add_option("--thresholds", scaling.thresholds, "Thresholds file");
  sc->add_option("--region", scaling.region, "Region whose wall time is used (default: first)");
  sc->add_option("--format", scaling.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  sc->add_flag("--lenient", scaling.lenient, "Accept unknown keys in session files");

  std::string groups_dir;
  auto* gr = app.add_subcommand("groups", "List performance groups and validate group files");
  gr->add_option("--dir", groups_dir, "Directory of group files to validate and list");

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth", "Generate a synthetic session with one injected pattern");
  sy->add_option("--pattern", synth.pattern, "Pattern name, or None for a clean session");
  sy->add_option("--cores", synth.cores, "Cores used");
  sy->add_option("--intensity", synth.intensity, "Pattern strength in [0, 1]")->check(CLI::Range(0.0, 1.0));
  sy->add_option("--seed", synth.seed, "Noise seed");
  sy->add_option("--machine", synth.machine, "Machine model file (default: built-in two-socket model)");
  sy->add_option("--out", synth.out, "Session output path; the label goes next to it")->required();

  SweepArgs sweep_args;
  auto* sw = app.add_subcommand("sweep", "Run the synthetic oracle sweep and print hit / false-positive rates");
  sw->add_option("--per-pattern", sweep_args.per_pattern, "Sessions per pattern");
  sw->add_option("--clean", sweep_args.clean, "Clean sessions");
  sw->add_option("--intensity", sweep_args.intensity, "Injection intensity")->check(CLI::Range(0.0, 1.0));
  sw->add_option("--seed", sweep_args.seed, "First seed");
  sw->add_option("--cores", sweep_args.cores, "Cores per session");
  sw->add_option("--machine", sweep_args.machine, "Machine model file");
  sw->add_option("--thresholds", sweep_args.thresholds, "Thresholds file");
  sw->add_option("--format", sweep_args.format, "text or json")->check(CLI::IsMember({"text", "json"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (an->parsed()) return cmd_analyze(analyze, out);
    if (tl->parsed()) return cmd_timeline(timeline, out);
    if (sc->parsed()) return cmd_scaling(scaling, out);
    if (gr->parsed()) return cmd_groups(groups_dir, out, err);
    if (sy->parsed()) return cmd_synth(synth, out);
    if (sw->parsed()) return cmd_sweep(sweep_args, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace hpmdiag::cli
