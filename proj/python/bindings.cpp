#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hpmdiag/analysis.hpp"
#include "hpmdiag/error.hpp"
#include "hpmdiag/machine.hpp"
#include "hpmdiag/patterns.hpp"
#include "hpmdiag/perfgroup.hpp"
#include "hpmdiag/report.hpp"
#include "hpmdiag/session.hpp"
#include "hpmdiag/synth.hpp"
#include "hpmdiag/thresholds.hpp"

namespace py = pybind11;
using namespace hpmdiag;

namespace {

std::string render(const DiagnosisInput& in, const std::string& format, bool timestamp) {
  if (format != "json" && format != "text") throw ValidationError("format must be 'json' or 'text'");
  const auto prepared = prepare(in);
  const auto findings = diagnose(prepared);
  const ReportOptions opts{timestamp};
  return format == "json" ? render_json_report(prepared, findings, opts) : render_text_report(prepared, findings, opts);
}

std::string analyze(const std::filesystem::path& session, const std::filesystem::path& machine, bool useful_work_fp,
                    bool data_parallel, const std::string& baseline, std::optional<double> model_mflops,
                    std::optional<double> static_cycles, std::optional<double> iterations, const std::string& region,
                    std::optional<std::filesystem::path> thresholds, bool lenient, const std::string& format,
                    bool timestamp) {
  DiagnosisInput in;
  in.session = load_session(session, {lenient});
  in.machine = load_machine(machine);
  in.region = region;
  in.useful_work_fp = useful_work_fp;
  in.data_parallel = data_parallel;
  in.baseline = baseline;
  in.model_mflops = model_mflops;
  in.static_cycles_per_iter = static_cycles;
  in.iterations = iterations;
  if (thresholds) in.thresholds = load_thresholds(*thresholds);
  return render(in, format, timestamp);
}

std::optional<double> evaluate(const std::string& expression, const std::map<std::string, double>& bindings,
                               double time) {
  std::vector<std::string> declared;
  SlotBindings b;
  for (const auto& [k, v] : bindings) {
    declared.push_back(k);
    b[k] = v;
  }
  const auto v = evaluate_formula(*parse_expr(expression, declared), b, time);
  if (v.ok()) return v.value();
  return std::nullopt;
}

py::dict classify(const std::vector<int>& threads, const std::vector<double>& values, bool runtime) {
  if (threads.size() != values.size()) throw ValidationError("threads and values differ in length");
  ScalingSeries s;
  s.kind = runtime ? SeriesKind::runtime : SeriesKind::performance;
  for (std::size_t i = 0; i < threads.size(); ++i) s.points.push_back({threads[i], values[i], std::nullopt, "", ""});
  const auto c = speedup_curve(s);
  py::dict d;
  d["threads"] = c.threads;
  d["speedups"] = c.speedups;
  d["shape"] = std::string(to_string(c.shape));
  d["saturation_point"] = c.saturation_point ? py::object(py::int_(*c.saturation_point)) : py::object(py::none());
  return d;
}

std::optional<PatternKind> pattern_arg(const std::optional<std::string>& name) {
  if (!name) return std::nullopt;
  const auto k = parse_pattern_kind(*name);
  if (!k) throw ValidationError("unknown pattern '" + *name + "'");
  return k;
}

std::pair<std::string, std::string> generate(const std::optional<std::string>& pattern, double intensity,
                                             std::uint64_t seed, int cores) {
  SyntheticSpec spec;
  spec.pattern = pattern_arg(pattern);
  spec.intensity = intensity;
  spec.seed = seed;
  spec.cores = cores;
  const auto c = generate_session(spec);
  return {write_session_json(c.session), write_label_json(c.label)};
}

std::string diagnose_synthetic(const std::string& session_json, const std::string& label_json,
                               const std::string& format) {
  const auto in = diagnosis_input(parse_session_json(session_json), parse_label_json(label_json),
                                  default_synth_machine());
  return render(in, format, false);
}

}  // namespace

PYBIND11_MODULE(_hpmdiag, m) {
  m.doc() = "Hardware performance counter diagnosis";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<ValidationError>(m, "ValidationError", base);

  m.def("analyze", &analyze, py::arg("session"), py::arg("machine"), py::kw_only(),
        py::arg("useful_work_fp") = false, py::arg("data_parallel") = false, py::arg("baseline") = "",
        py::arg("model_mflops") = py::none(), py::arg("static_cycles") = py::none(),
        py::arg("iterations") = py::none(), py::arg("region") = "", py::arg("thresholds") = py::none(),
        py::arg("lenient") = false, py::arg("format") = "json", py::arg("timestamp") = false);
  m.def("evaluate", &evaluate, py::arg("expression"), py::arg("bindings"), py::arg("time") = 1.0,
        "Value of a metric formula, or None when it is undefined.");
  m.def("imbalance_index", [](std::vector<double> v) { return imbalance_of("values", std::move(v)).index; });
  m.def("roofline", &roofline_limit, py::arg("intensity"), py::arg("bandwidth_MBs"), py::arg("peak_mflops"));
  m.def("classify_scaling", &classify, py::arg("threads"), py::arg("values"), py::arg("runtime") = true);
  m.def("generate", &generate, py::arg("pattern") = py::none(), py::arg("intensity") = 0.8, py::arg("seed") = 0,
        py::arg("cores") = 12, "Synthetic session and label, both as JSON text.");
  m.def("diagnose_synthetic", &diagnose_synthetic, py::arg("session_json"), py::arg("label_json"),
        py::arg("format") = "json");
  m.def("builtin_groups", [] {
    std::vector<std::string> names;
    for (const auto& g : builtin_groups().groups()) names.push_back(g.group_name);
    return names;
  });
  m.def("patterns", [] {
    std::vector<std::string> names;
    for (auto k : kAllPatterns) names.emplace_back(to_string(k));
    return names;
  });
}
