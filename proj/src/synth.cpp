#include "hpmdiag/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "hpmdiag/error.hpp"
#include "json_util.hpp"

// Construction rules are documented in docs/synth.md; keep the two in sync.

namespace hpmdiag {

namespace {

constexpr double kClockHz = 2.93e9;
constexpr double kFlopsPerCore = 2.0e10;
constexpr int kTimelineSamples = 10;
constexpr double kJitter = 0.02;

struct Params {
  double cpi = 0.55;
  double ipf = 1.2;
  double simd = 0.9;
  double mem_util = 0.45;
  double olc_util = 0.45;
  double ldst = 0.35;
  double hit = 0.97;
  double evict = 0.001;
  double remote = 0.02;
  double numa_skew = 0.0;
  double outer_weight = 1.0;
  double growth = 0.0;  // instructions ~ threads^growth across the series
};

double nonfp_of(const Params& p) { return 1.0 - 1.0 / (p.ipf * (1.0 + p.simd)); }

Params params_for(const std::optional<PatternKind>& pattern, double x) {
  Params p;
  if (!pattern) return p;
  switch (*pattern) {
    case PatternKind::LoadImbalance:
      p.outer_weight = 1.0 - x;
      break;
    case PatternKind::MemoryBandwidthSaturation:
      p.mem_util = 0.45 + 0.55 * x;
      break;
    case PatternKind::OlcBandwidthSaturation:
      p.olc_util = 0.45 + 0.55 * x;
      break;
    case PatternKind::StridedErraticAccess:
      p.ldst = 0.35 + 0.35 * x;
      p.mem_util = 0.45 - 0.4 * x;
      p.hit = 0.97 - 0.37 * x;
      p.cpi = 0.55 * (1.0 + 5.0 * x);
      break;
    case PatternKind::BadInstructionMix:
      p.ipf = 1.2 + 3.6 * x;
      p.simd = 0.9 - 0.8 * x;
      break;
    case PatternKind::LimitedInstructionThroughput:
      p.cpi = std::max(0.25, 0.55 - 0.45 * x);
      break;
    case PatternKind::MicroarchAnomaly:
      p.cpi = 0.55 * (1.0 + 3.0 * x);
      break;
    case PatternKind::SynchronizationOverhead: {
      // Extra non-FP instructions at constant CPI.
      const double n0 = nonfp_of(p);
      const double nonfp = n0 + (0.98 - n0) * x;
      p.ipf = 1.0 / ((1.0 + p.simd) * (1.0 - nonfp));
      p.growth = 2.2 * x;
      break;
    }
    case PatternKind::FalseCachelineSharing:
      p.evict = 0.001 + 0.03 * x;
      break;
    case PatternKind::BadNumaPlacement:
      p.numa_skew = x;
      p.remote = 0.02 + 0.48 * x;
      break;
  }
  return p;
}

// Speedup over the single-thread run, before normalization.
double speedup_at(const std::optional<PatternKind>& pattern, double x, int k, int n) {
  const double kk = k;
  if (!pattern) return kk;
  switch (*pattern) {
    case PatternKind::MemoryBandwidthSaturation:
    case PatternKind::OlcBandwidthSaturation:
      return std::min(kk, n - (n - 2) * x);
    case PatternKind::SynchronizationOverhead:
      return kk / (1.0 + 0.3 * x * (kk - 1.0));
    case PatternKind::FalseCachelineSharing: {
      const double s = std::min(1.0, 1.8 * x);
      return kk * (1.0 - s) + 0.8 * s;
    }
    default:
      return kk;
  }
}

std::vector<int> series_threads(int n) {
  std::vector<int> t{1};
  if (n >= 2) t.push_back(2);
  for (int k = 4; k < n; k += 2) t.push_back(k);
  if (n > 2) t.push_back(n);
  return t;
}

class Jitter {
 public:
  explicit Jitter(std::uint64_t seed) : rng_(seed) {}
  // Multiplicative factor in [1 - kJitter, 1 + kJitter]; independent of the
  // standard library's distribution implementations.
  double next() {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return 1.0 + kJitter * (2.0 * u - 1.0);
  }

 private:
  std::mt19937_64 rng_;
};

Count to_count(double v) { return v <= 0.0 ? 0 : static_cast<Count>(std::llround(v)); }

std::string format_intensity(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

void add_timeline(RegionMeasurement& region) {
  std::vector<TimelineSample> samples(kTimelineSamples);
  const double dt = region.wall_time_s / kTimelineSamples;
  for (int i = 0; i < kTimelineSamples; ++i) {
    samples[i].t_s = dt * (i + 1);
    samples[i].dt_s = dt;
  }
  for (const auto& core : region.cores) {
    for (int i = 0; i < kTimelineSamples; ++i) samples[i].per_core_counts.push_back({core.core_id, {}});
    for (const auto& [event, value] : core.counts) {
      const Count share = value / kTimelineSamples;
      for (int i = 0; i < kTimelineSamples; ++i) {
        const Count delta = i + 1 < kTimelineSamples ? share : value - share * (kTimelineSamples - 1);
        samples[i].per_core_counts.back().counts[event] = delta;
      }
    }
  }
  region.timeline = std::move(samples);
}

}  // namespace

MachineModel default_synth_machine() {
  Baselines b;
  b.stream_bw_core_MBs = 11814.0;
  b.update_bw_socket_MBs = 20300.0;
  b.olc_bw_MBs = 60000.0;
  b.peak_mflops_core = 11720.0;
  b.issue_width = 4.0;
  b.cacheline_bytes = 64.0;
  return make_uniform_machine("westmere-2s-synth", 2, 6, b);
}

SyntheticCase generate_session(const SyntheticSpec& spec) {
  if (!(spec.intensity >= 0.0 && spec.intensity <= 1.0)) throw ValidationError("intensity must be in [0, 1]");
  const auto& topo = spec.machine.topology;
  if (spec.cores < 1 || spec.cores > static_cast<int>(topo.core_ids.size())) {
    throw ValidationError("cores must be in [1, " + std::to_string(topo.core_ids.size()) + "] for machine '" +
                          spec.machine.name + "'");
  }
  if (const auto v = validate_machine(spec.machine); !v.empty()) throw ValidationError(v.front());
  if (spec.pattern && spec.cores < 2) {
    throw UnsupportedPattern(std::string(to_string(*spec.pattern)) + " needs at least 2 cores");
  }

  const std::vector<int> cores(topo.core_ids.begin(), topo.core_ids.begin() + spec.cores);
  std::vector<int> domain_of;
  std::map<int, int> domain_cores;
  for (int c : cores) {
    domain_of.push_back(Topology::group_of(topo.numa_domains, c));
    ++domain_cores[domain_of.back()];
  }
  if (spec.pattern == PatternKind::BadNumaPlacement && domain_cores.size() < 2) {
    throw UnsupportedPattern("BadNumaPlacement needs cores in at least 2 NUMA domains");
  }

  const double x = spec.intensity;
  const Params p = params_for(spec.pattern, x);
  const int n = spec.cores;

  std::vector<double> weight(n, 1.0);
  if (n >= 2) weight.front() = weight.back() = p.outer_weight;
  double weight_sum = 0.0;
  for (double w : weight) weight_sum += w;

  // Domain shares (1 +- skew) / 2 for the first two touched domains, even otherwise.
  std::map<int, double> domain_share;
  {
    int i = 0;
    for (const auto& [d, count] : domain_cores) {
      double share = 1.0 / static_cast<double>(domain_cores.size());
      if (p.numa_skew > 0.0 && i < 2) share = (1.0 + (i == 0 ? p.numa_skew : -p.numa_skew)) / 2.0;
      if (p.numa_skew > 0.0 && i >= 2) share = 0.0;
      domain_share[d] = share;
      ++i;
    }
  }

  std::vector<double> instr(n), cycles(n), flops(n);
  double wall = 0.0;
  for (int i = 0; i < n; ++i) {
    flops[i] = kFlopsPerCore * weight[i];
    instr[i] = p.ipf * flops[i];
    cycles[i] = p.cpi * instr[i];
    wall = std::max(wall, cycles[i] / kClockHz);
  }
  const double mem_bytes = p.mem_util * memory_reference_MBs(spec.machine, cores) * 1e6 * wall;
  const double olc_bytes = p.olc_util * olc_reference_MBs(spec.machine, cores) * 1e6 * wall;
  const double line = 64.0;

  Jitter jitter(spec.seed);
  RegionMeasurement region;
  region.region_name = "main";
  region.wall_time_s = wall;
  for (int i = 0; i < n; ++i) {
    const double mem_share = p.numa_skew > 0.0 ? domain_share[domain_of[i]] / domain_cores[domain_of[i]]
                                                : weight[i] / weight_sum;
    const double mem_lines = mem_bytes * mem_share / line;
    const double olc_lines = olc_bytes * (weight[i] / weight_sum) / line;
    const double fp_instr = flops[i] / (1.0 + p.simd);
    const double ldst = p.ldst * instr[i];

    const std::pair<const char*, double> values[] = {
        {"INSTR_RETIRED", instr[i]},
        {"CPU_CLK_UNHALTED", cycles[i]},
        {"FP_OPS_PACKED_DP", p.simd * fp_instr},
        {"FP_OPS_SCALAR_DP", (1.0 - p.simd) * fp_instr},
        {"MEM_LINES_READ", mem_lines * 2.0 / 3.0},
        {"MEM_LINES_WRITE", mem_lines / 3.0},
        {"MEM_LINES_REMOTE", mem_lines * p.remote},
        {"L3_LINES_IN", olc_lines * 2.0 / 3.0},
        {"L3_LINES_OUT", olc_lines / 3.0},
        {"LOADS_RETIRED", ldst * 2.0 / 3.0},
        {"STORES_RETIRED", ldst / 3.0},
        {"CACHE_ACCESSES", ldst},
        {"CACHE_MISSES", ldst * (1.0 - p.hit)},
        {"CACHE_EVICTS", instr[i] * p.evict},
    };
    CoreMeasurement core;
    core.core_id = cores[i];
    for (const auto& [event, value] : values) core.counts[event] = to_count(value * jitter.next());
    region.cores.push_back(std::move(core));
  }
  add_timeline(region);

  SyntheticCase out;
  auto& s = out.session;
  s.session_id = "synth-" + std::string(spec.pattern ? to_string(*spec.pattern) : "clean") + "-i" +
                 format_intensity(x) + "-s" + std::to_string(spec.seed);
  s.machine_ref = spec.machine.name;
  s.thread_count = n;
  s.core_set = cores;
  s.notes = "synthetic session";
  s.regions.push_back(std::move(region));

  auto& label = out.label;
  label.pattern = spec.pattern;
  label.intensity = x;
  label.seed = spec.seed;
  const Params clean;
  const double clean_wall = clean.cpi * clean.ipf * kFlopsPerCore / kClockHz;
  label.model_mflops = n * kFlopsPerCore / clean_wall / 1e6;

  label.series.label = s.session_id;
  const double total_instr = [&] {
    double t = 0.0;
    for (double v : instr) t += v;
    return t;
  }();
  const double s_n = speedup_at(spec.pattern, x, n, n);
  for (int k : series_threads(n)) {
    ScalingPoint pt;
    pt.threads = k;
    pt.value = wall * s_n / speedup_at(spec.pattern, x, k, n);
    pt.instructions = std::round(total_instr * std::pow(static_cast<double>(k) / n, p.growth));
    label.series.points.push_back(pt);
  }
  return out;
}

std::string write_label_json(const SyntheticLabel& label) {
  nlohmann::ordered_json root;
  root["pattern"] = label.pattern ? nlohmann::ordered_json(to_string(*label.pattern)) : nlohmann::ordered_json(nullptr);
  root["intensity"] = label.intensity;
  root["seed"] = label.seed;
  root["useful_work_fp"] = label.useful_work_fp;
  root["data_parallel"] = label.data_parallel;
  root["model_mflops"] = label.model_mflops;
  root["series"] = nlohmann::ordered_json::parse(write_series_json(label.series));
  return root.dump(2) + "\n";
}

SyntheticLabel parse_label_json(std::string_view text) {
  const auto root = detail::parse_json_text(text, "label");
  detail::ObjectReader r(root, "");
  SyntheticLabel label;
  const auto& pattern = r.required("pattern");
  if (!pattern.is_null()) {
    label.pattern = parse_pattern_kind(detail::as_text(pattern, "pattern"));
    if (!label.pattern) throw ParseError("pattern", "unknown pattern '" + pattern.get<std::string>() + "'");
  }
  label.intensity = r.number("intensity");
  const auto& seed = r.required("seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    throw ParseError("seed", "expected a non-negative integer");
  }
  label.seed = seed.get<std::uint64_t>();
  const auto flag = [&](const char* key) {
    const auto& v = r.required(key);
    if (!v.is_boolean()) throw ParseError(key, "expected true or false");
    return v.get<bool>();
  };
  label.useful_work_fp = flag("useful_work_fp");
  label.data_parallel = flag("data_parallel");
  label.model_mflops = r.number("model_mflops");
  label.series = parse_series_json(r.required("series").dump());
  r.finish();
  return label;
}

SyntheticLabel load_label(const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return parse_label_json(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.context(), e.message());
  }
}

DiagnosisInput diagnosis_input(MeasurementSession session, const SyntheticLabel& label, const MachineModel& machine,
                               const Thresholds& thresholds) {
  DiagnosisInput in;
  in.session = std::move(session);
  in.machine = machine;
  if (label.series.points.size() >= 2) in.series = label.series;
  in.model_mflops = label.model_mflops;
  in.useful_work_fp = label.useful_work_fp;
  in.data_parallel = label.data_parallel;
  in.thresholds = thresholds;
  return in;
}

SweepSummary sweep(const std::vector<SyntheticSpec>& specs, const Thresholds& thresholds) {
  SweepSummary summary;
  for (auto k : kAllPatterns) summary.false_positives.push_back({k, 0, 0});

  for (const auto& spec : specs) {
    const auto generated = generate_session(spec);
    // Through the file formats, as a user would see them.
    auto session = parse_session_json(write_session_json(generated.session));
    const auto label = parse_label_json(write_label_json(generated.label));
    const auto input = diagnosis_input(std::move(session), label, spec.machine, thresholds);
    const auto findings = diagnose(input);

    auto row = std::find_if(summary.rows.begin(), summary.rows.end(),
                            [&](const SweepRow& r) { return r.injected == spec.pattern; });
    if (row == summary.rows.end()) {
      summary.rows.push_back({spec.pattern});
      row = summary.rows.end() - 1;
    }
    ++row->cases;
    int rank = 0;
    bool any = false;
    for (const auto& f : findings) {
      if (!f.fired) continue;
      any = true;
      ++rank;
      if (spec.pattern == f.pattern) {
        ++row->hits;
        if (rank <= 2) ++row->top2;
      }
    }
    if (any) ++row->any_fired;

    for (auto& fp : summary.false_positives) {
      if (spec.pattern == fp.pattern) continue;
      ++fp.negatives;
      for (const auto& f : findings) {
        if (f.pattern == fp.pattern && f.fired) ++fp.fired;
      }
    }
  }
  return summary;
}

std::string format_sweep_text(const SweepSummary& summary) {
  std::string out = "injected                        cases  hit_rate  top2_rate  any_fired\n";
  char buf[160];
  for (const auto& r : summary.rows) {
    const std::string name = r.injected ? std::string(to_string(*r.injected)) : "None";
    std::snprintf(buf, sizeof buf, "%-30s  %5d  %8.3f  %9.3f  %9d\n", name.c_str(), r.cases, r.hit_rate(),
                  r.top2_rate(), r.any_fired);
    out += buf;
  }
  out += "\npattern                         negatives  fired  false_positive_rate\n";
  for (const auto& fp : summary.false_positives) {
    std::snprintf(buf, sizeof buf, "%-30s  %9d  %5d  %19.3f\n", std::string(to_string(fp.pattern)).c_str(),
                  fp.negatives, fp.fired, fp.rate());
    out += buf;
  }
  return out;
}

std::string format_sweep_json(const SweepSummary& summary) {
  nlohmann::ordered_json root;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : summary.rows) {
    nlohmann::ordered_json j;
    j["injected"] = r.injected ? nlohmann::ordered_json(to_string(*r.injected)) : nlohmann::ordered_json(nullptr);
    j["cases"] = r.cases;
    j["hits"] = r.hits;
    j["top2"] = r.top2;
    j["any_fired"] = r.any_fired;
    j["hit_rate"] = r.hit_rate();
    j["top2_rate"] = r.top2_rate();
    rows.push_back(std::move(j));
  }
  root["rows"] = std::move(rows);
  auto fps = nlohmann::ordered_json::array();
  for (const auto& fp : summary.false_positives) {
    nlohmann::ordered_json j;
    j["pattern"] = to_string(fp.pattern);
    j["negatives"] = fp.negatives;
    j["fired"] = fp.fired;
    j["false_positive_rate"] = fp.rate();
    fps.push_back(std::move(j));
  }
  root["false_positives"] = std::move(fps);
  return root.dump(2) + "\n";
}

}  // namespace hpmdiag
