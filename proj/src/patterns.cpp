#include "hpmdiag/patterns.hpp"

#include <algorithm>
#include <cmath>

#include "hpmdiag/error.hpp"

namespace hpmdiag {

namespace {

struct PatternNames {
  PatternKind kind;
  std::string_view id;
  std::string_view display;
};

constexpr std::array<PatternNames, 10> kNames{{
    {PatternKind::LoadImbalance, "LoadImbalance", "Load imbalance"},
    {PatternKind::OlcBandwidthSaturation, "OlcBandwidthSaturation", "Bandwidth saturation (outer-level cache)"},
    {PatternKind::MemoryBandwidthSaturation, "MemoryBandwidthSaturation", "Bandwidth saturation (memory)"},
    {PatternKind::StridedErraticAccess, "StridedErraticAccess", "Strided or erratic data access"},
    {PatternKind::BadInstructionMix, "BadInstructionMix", "Bad instruction mix"},
    {PatternKind::LimitedInstructionThroughput, "LimitedInstructionThroughput", "Limited instruction throughput"},
    {PatternKind::MicroarchAnomaly, "MicroarchAnomaly", "Microarchitectural anomaly"},
    {PatternKind::SynchronizationOverhead, "SynchronizationOverhead", "Synchronization overhead"},
    {PatternKind::FalseCachelineSharing, "FalseCachelineSharing", "False cache line sharing"},
    {PatternKind::BadNumaPlacement, "BadNumaPlacement", "Bad page placement on ccNUMA"},
}};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

const Thresholds& thr(const PreparedInput& p) { return p.input->thresholds; }

double require(const MetricValue& v, std::string_view what) {
  if (!v.ok()) throw NotComputable(std::string(what) + " " + v.describe());
  return v.value();
}

Finding make_finding(PatternKind kind) {
  Finding f;
  f.pattern = kind;
  return f;
}

void fire(Finding& f, double severity) {
  f.fired = true;
  f.severity = clamp01(severity);
}

bool has_event_everywhere(const RegionMeasurement& region, std::string_view event) {
  return !region.cores.empty() && region.has_event(event);
}

// Per-core sum over the listed events that the region reports; empty when
// none is present.
std::vector<double> per_core_sum(const RegionMeasurement& region, std::initializer_list<std::string_view> events,
                                 std::string& label) {
  std::vector<double> values;
  label.clear();
  for (auto ev : events) {
    if (!has_event_everywhere(region, ev)) continue;
    const auto stats = aggregate_counts(region, ev);
    if (values.empty()) values.assign(stats.per_core.size(), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += static_cast<double>(stats.per_core[i]);
    label += label.empty() ? std::string(ev) : "+" + std::string(ev);
  }
  return values;
}

double total(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// ---------------------------------------------------------------------------

Finding load_imbalance(const PreparedInput& p) {
  auto f = make_finding(PatternKind::LoadImbalance);
  const auto& region = *p.region;

  // Packed FP ops, then all FP ops, then instructions retired.
  std::string label;
  auto values = per_core_sum(region, {"FP_OPS_PACKED_DP", "FP_OPS_PACKED_SP"}, label);
  if (total(values) <= 0.0) {
    values = per_core_sum(region, {"FP_OPS_PACKED_DP", "FP_OPS_PACKED_SP", "FP_OPS_SCALAR_DP", "FP_OPS_SCALAR_SP"},
                          label);
  }
  if (total(values) <= 0.0) values = per_core_sum(region, {"INSTR_RETIRED"}, label);
  if (values.empty()) {
    throw NotComputable("no per-core FP-operation or instructions-retired event");
  }

  const auto report = imbalance_of(label, values);
  const double limit = thr(p).get("imb_threshold");
  const bool hit = report.index >= limit;
  f.evidence.push_back({"work imbalance 1 - min/max over cores", "imbalance_index(" + label + ")", report.index,
                        limit, hit ? Relation::ge : Relation::le, EvidenceSource::hpm});
  f.evidence.push_back({"busiest core relative to the mean", "max_over_mean(" + label + ")", report.max_over_mean,
                        std::nullopt, Relation::ge, EvidenceSource::hpm});
  if (hit) fire(f, report.index);

  const auto& nonfp = p.metrics.aggregate.nonfp_fraction;
  if (nonfp.ok() && nonfp.value() >= thr(p).get("spin_caveat_nonfp")) {
    f.caveats.push_back("non-FP instruction share is high; spin-waiting loops can hide or mimic imbalance");
  }
  return f;
}

Finding bw_saturation(const PreparedInput& p, bool olc) {
  auto f = make_finding(olc ? PatternKind::OlcBandwidthSaturation : PatternKind::MemoryBandwidthSaturation);
  const auto& bw = olc ? p.metrics.aggregate.olc_bw_MBs : p.metrics.aggregate.mem_bw_MBs;
  const double measured = require(bw, olc ? "L3 bandwidth" : "memory bandwidth");
  const double reference = olc ? p.olc_reference_MBs : p.mem_reference_MBs;
  const double util = bandwidth_utilization(measured, reference);
  const double limit = thr(p).get("sat_threshold");
  const bool hit = util >= limit;

  const std::string metric = olc ? "olc_bw_MBs" : "mem_bw_MBs";
  f.evidence.push_back({"measured bandwidth against the baseline", metric, measured, reference,
                        hit ? Relation::approx : Relation::le, EvidenceSource::hpm});
  f.evidence.push_back({"bandwidth utilization", olc ? "olc_bw_utilization" : "mem_bw_utilization", util, limit,
                        hit ? Relation::ge : Relation::le, EvidenceSource::baseline});

  bool shape_ok = true;
  if (p.input->series) {
    if (p.scaling) {
      shape_ok = p.scaling->shape == ScalingShape::saturating;
      f.evidence.push_back({"scaling shape is " + std::string(to_string(p.scaling->shape)), "speedup_shape",
                            p.scaling->speedups.back(), std::nullopt,
                            shape_ok ? Relation::approx : Relation::mismatch, EvidenceSource::scaling});
    } else {
      f.caveats.push_back("scaling series unusable: " + p.scaling_error);
    }
  }
  if (hit && shape_ok) fire(f, util);
  return f;
}

Finding strided_access(const PreparedInput& p) {
  auto f = make_finding(PatternKind::StridedErraticAccess);
  const auto& m = p.metrics.aggregate;
  const double ldst = require(m.ldst_fraction, "load/store share");
  const bool have_bw = m.mem_bw_MBs.ok();
  const bool have_hit = m.cache_hit_ratio.ok();
  if (!have_bw && !have_hit) throw NotComputable("neither memory bandwidth nor cache hit ratio is available");

  const double ldst_limit = thr(p).get("ldst_threshold");
  const bool ldst_hit = ldst >= ldst_limit;
  f.evidence.push_back({"load/store share of instructions", "ldst_fraction", ldst, ldst_limit,
                        ldst_hit ? Relation::ge : Relation::le, EvidenceSource::hpm});

  bool low = false;
  double shortfall = 0.0;
  if (have_bw) {
    const double util = bandwidth_utilization(m.mem_bw_MBs.value(), p.mem_reference_MBs);
    const double limit = thr(p).get("low_bw_threshold");
    low = low || util <= limit;
    shortfall = std::max(shortfall, 1.0 - util);
    f.evidence.push_back({"memory bandwidth utilization", "mem_bw_utilization", util, limit,
                          util <= limit ? Relation::le : Relation::ge, EvidenceSource::baseline});
  }
  if (have_hit) {
    const double hit = m.cache_hit_ratio.value();
    const double limit = thr(p).get("hit_threshold");
    low = low || hit <= limit;
    shortfall = std::max(shortfall, 1.0 - hit);
    f.evidence.push_back({"cache hit ratio", "cache_hit_ratio", hit, limit,
                          hit <= limit ? Relation::le : Relation::ge, EvidenceSource::hpm});
  }
  if (ldst_hit && low) {
    fire(f, thr(p).get("strided_w_bw") * clamp01(shortfall) + thr(p).get("strided_w_ldst") * clamp01(ldst));
  }
  return f;
}

Finding instruction_mix(const PreparedInput& p) {
  auto f = make_finding(PatternKind::BadInstructionMix);
  const auto& in = *p.input;
  if (!in.useful_work_fp && !in.data_parallel) {
    throw NotComputable("needs --useful-work fp or --data-parallel to say what the useful work is");
  }
  const auto& m = p.metrics.aggregate;
  double severity = 0.0;
  bool hit = false;
  bool any = false;

  if (in.useful_work_fp && m.instr_per_flop.ok()) {
    any = true;
    const double ipf = m.instr_per_flop.value();
    const double limit = thr(p).get("mix_threshold");
    const bool clause = ipf >= limit;
    f.evidence.push_back({"instructions retired per floating-point operation", "instr_per_flop", ipf, limit,
                          clause ? Relation::ge : Relation::le, EvidenceSource::hpm});
    if (clause) {
      hit = true;
      const double span = std::log(thr(p).get("mix_severity_span"));
      const double ratio = limit > 0.0 ? std::log(ipf / limit) / span : 1.0;
      severity = std::max(severity, 0.25 + 0.75 * clamp01(ratio));
    }
  }
  if (in.data_parallel && m.simd_fraction.ok()) {
    any = true;
    const double simd = m.simd_fraction.value();
    const double limit = thr(p).get("simd_threshold");
    const bool clause = simd <= limit;
    f.evidence.push_back({"packed share of FP instructions", "simd_fraction", simd, limit,
                          clause ? Relation::le : Relation::ge, EvidenceSource::hpm});
    if (clause) {
      hit = true;
      const double gap = limit > 0.0 ? (limit - simd) / limit : 1.0;
      severity = std::max(severity, 0.25 + 0.75 * clamp01(gap));
    }
  }
  if (!any) {
    throw NotComputable("instruction mix metrics unavailable: instr_per_flop " + m.instr_per_flop.describe() +
                        ", simd_fraction " + m.simd_fraction.describe());
  }
  if (hit) fire(f, severity);
  return f;
}

Finding limited_throughput(const PreparedInput& p, bool exclude_saturation) {
  auto f = make_finding(PatternKind::LimitedInstructionThroughput);
  const double cpi = require(p.metrics.aggregate.cpi, "CPI");
  const double iw = p.input->machine.baselines.issue_width;
  const double cutoff = thr(p).get("cpi_limit_factor") / iw;
  const bool low = cpi <= cutoff;
  f.evidence.push_back({"CPI against the issue-width limit", "cpi", cpi, cutoff, low ? Relation::le : Relation::ge,
                        EvidenceSource::hpm});

  bool saturated = false;
  for (bool olc : {false, true}) {
    if (!exclude_saturation) break;
    try {
      saturated = saturated || bw_saturation(p, olc).fired;
    } catch (const NotComputable&) {
    }
  }
  if (saturated) f.caveats.push_back("bandwidth saturation fired; low CPI is not attributed to instruction throughput");

  if (const auto& stat = p.input->static_cycles_per_iter) {
    const auto& region = *p.region;
    if (!p.input->iterations || *p.input->iterations <= 0.0) {
      f.caveats.push_back("static cycles per iteration given without an iteration count; not compared");
    } else if (!has_event_everywhere(region, "CPU_CLK_UNHALTED")) {
      f.caveats.push_back("static prediction not compared: CPU_CLK_UNHALTED missing");
    } else {
      const double cycles = static_cast<double>(aggregate_counts(region, "CPU_CLK_UNHALTED").sum);
      const double measured = cycles / *p.input->iterations;
      const bool agree = std::fabs(measured - *stat) <= thr(p).get("static_agreement") * *stat;
      f.evidence.push_back({"measured cycles per iteration against static code analysis", "cycles_per_iter", measured,
                            *stat, agree ? Relation::approx : Relation::mismatch, EvidenceSource::static_analysis});
      if (!agree) f.caveats.push_back("measured cycles per iteration disagree with the static prediction");
    }
  }
  if (low && !saturated) fire(f, (1.0 / iw) / cpi);
  return f;
}

Finding sync_overhead(const PreparedInput& p) {
  auto f = make_finding(PatternKind::SynchronizationOverhead);
  const double nonfp = require(p.metrics.aggregate.nonfp_fraction, "non-FP instruction share");
  const double limit = thr(p).get("nonfp_threshold");
  const bool high = nonfp >= limit;
  f.evidence.push_back({"non-FP share of instructions retired", "nonfp_fraction", nonfp, limit,
                        high ? Relation::ge : Relation::le, EvidenceSource::hpm});
  if (!p.input->useful_work_fp) f.caveats.push_back("workload not declared FP; non-FP share may be useful work");

  std::optional<double> exponent;
  if (p.input->series) exponent = instruction_growth_exponent(*p.input->series);
  if (exponent) {
    const double g = thr(p).get("sync_growth_exponent");
    const bool grows = *exponent > g;
    f.evidence.push_back({"instruction growth exponent over thread count", "instr_growth_exponent", *exponent, g,
                          grows ? Relation::ge : Relation::le, EvidenceSource::scaling});
    if (p.scaling && p.scaling->shape == ScalingShape::degrading) {
      f.evidence.push_back({"speedup going down as more cores are added", "speedup_shape",
                            p.scaling->speedups.back(), std::nullopt, Relation::approx, EvidenceSource::scaling});
    }
    if (high && grows) fire(f, nonfp);
    return f;
  }

  f.caveats.push_back("scaling data absent");
  // One thread has nobody to wait for.
  if (high && p.region->cores.size() > 1) fire(f, thr(p).get("sync_weak_factor") * nonfp);
  return f;
}

Finding false_sharing(const PreparedInput& p) {
  auto f = make_finding(PatternKind::FalseCachelineSharing);
  if (!p.input->series) throw NotComputable("needs a scaling series");
  if (!p.scaling) throw NotComputable("scaling series unusable: " + p.scaling_error);
  const auto& sc = *p.scaling;

  const double s2_limit = thr(p).get("fs_speedup2");
  const double max_threads = thr(p).get("fs_max_threads");
  bool behavior = false;
  for (std::size_t i = 1; i < sc.threads.size(); ++i) {
    if (sc.threads[i] == 2 * sc.threads.front() && sc.speedups[i] <= s2_limit) {
      behavior = true;
      f.evidence.push_back({"speedup when doubling the thread count", "speedup(" + std::to_string(sc.threads[i]) + ")",
                            sc.speedups[i], s2_limit, Relation::le, EvidenceSource::scaling});
    }
    if (sc.threads[i] <= max_threads && sc.speedups[i] < 1.0) {
      behavior = true;
      f.evidence.push_back({"slowdown at a small core count", "speedup(" + std::to_string(sc.threads[i]) + ")",
                            sc.speedups[i], 1.0, Relation::le, EvidenceSource::scaling});
    }
  }
  if (!behavior) {
    f.evidence.push_back({"speedup at the second point", "speedup(" + std::to_string(sc.threads[1]) + ")",
                          sc.speedups[1], s2_limit, Relation::ge, EvidenceSource::scaling});
  }

  const auto& evict = p.metrics.aggregate.evicts_per_instr;
  const double ev_limit = thr(p).get("evict_threshold");
  bool hpm = false;
  if (evict.ok()) {
    hpm = evict.value() >= ev_limit;
    f.evidence.push_back({"cache line evictions per instruction", "evicts_per_instr", evict.value(), ev_limit,
                          hpm ? Relation::ge : Relation::le, EvidenceSource::hpm});
  }
  if (!behavior) return f;

  if (hpm) {
    fire(f, 0.6 + 0.4 * clamp01(evict.value() / (2.0 * ev_limit)));
  } else {
    f.caveats.push_back(evict.ok() ? "eviction rate below threshold" : "HPM evidence missing");
    fire(f, thr(p).get("fs_weak_factor") * 0.6);
  }
  return f;
}

Finding numa_placement(const PreparedInput& p) {
  auto f = make_finding(PatternKind::BadNumaPlacement);
  if (p.input->machine.topology.locality_domain_count() < 2) {
    throw NotComputable("machine has a single NUMA domain; placement cannot be unbalanced");
  }
  if (p.metrics.domains.size() < 2) throw NotComputable("region uses cores of a single NUMA domain");

  std::vector<double> bw;
  for (const auto& d : p.metrics.domains) bw.push_back(require(d.mem_bw_MBs, "domain bandwidth"));
  const auto report = imbalance_of("domain_mem_bw", bw);
  const double imb_limit = thr(p).get("numa_imb_threshold");
  const bool imb = report.index >= imb_limit;
  f.evidence.push_back({"bandwidth imbalance across memory interfaces", "numa_bw_imbalance", report.index, imb_limit,
                        imb ? Relation::ge : Relation::le, EvidenceSource::hpm});

  double severity = imb ? report.index : 0.0;
  bool remote = false;
  const auto& rf = p.metrics.aggregate.remote_fraction;
  if (rf.ok()) {
    const double limit = thr(p).get("remote_threshold");
    remote = rf.value() >= limit;
    f.evidence.push_back({"remote share of memory traffic", "remote_fraction", rf.value(), limit,
                          remote ? Relation::ge : Relation::le, EvidenceSource::hpm});
    if (remote) severity = std::max(severity, rf.value());
  }
  if (imb || remote) fire(f, severity);
  return f;
}

Finding microarch_raw(const PreparedInput& p) {
  auto f = make_finding(PatternKind::MicroarchAnomaly);
  f.caveats.push_back("code review required, with architectural features in mind");
  if (!p.input->model_mflops) throw NotComputable("no performance-model prediction supplied");
  const double model = *p.input->model_mflops;
  if (!(model > 0.0)) throw NotComputable("model prediction must be > 0");
  const double measured = require(p.metrics.aggregate.mflops, "MFlop/s");
  const double limit = thr(p).get("anomaly_fraction");
  const bool low = measured <= limit * model;
  f.evidence.push_back({"measured performance against the model prediction", "mflops", measured, model,
                        low ? Relation::mismatch : Relation::approx, EvidenceSource::hpm});
  f.evidence.push_back({"unexplained residual 1 - measured/model", "model_residual", 1.0 - measured / model,
                        1.0 - limit, low ? Relation::ge : Relation::le, EvidenceSource::baseline});
  if (low) fire(f, 1.0 - measured / model);
  return f;
}

Finding run_detector(PatternKind kind, const PreparedInput& p, bool cross_rules = true) {
  switch (kind) {
    case PatternKind::LoadImbalance: return load_imbalance(p);
    case PatternKind::OlcBandwidthSaturation: return bw_saturation(p, true);
    case PatternKind::MemoryBandwidthSaturation: return bw_saturation(p, false);
    case PatternKind::StridedErraticAccess: return strided_access(p);
    case PatternKind::BadInstructionMix: return instruction_mix(p);
    case PatternKind::LimitedInstructionThroughput: return limited_throughput(p, cross_rules);
    case PatternKind::MicroarchAnomaly: return microarch_raw(p);
    case PatternKind::SynchronizationOverhead: return sync_overhead(p);
    case PatternKind::FalseCachelineSharing: return false_sharing(p);
    case PatternKind::BadNumaPlacement: return numa_placement(p);
  }
  throw Error("unknown pattern");
}

Finding safe_detect(PatternKind kind, const PreparedInput& p) {
  try {
    return run_detector(kind, p);
  } catch (const NotComputable& e) {
    auto f = make_finding(kind);
    f.computable = false;
    if (kind == PatternKind::MicroarchAnomaly) f.caveats.push_back("code review required, with architectural features in mind");
    f.caveats.push_back(std::string("not computable: ") + e.what());
    return f;
  }
}

// The residual rule: an anomaly is only reported when nothing else explains it.
void apply_residual_rule(Finding& anomaly, const std::vector<Finding>& others) {
  if (!anomaly.fired) return;
  for (const auto& o : others) {
    if (o.pattern != PatternKind::MicroarchAnomaly && o.fired) {
      anomaly.fired = false;
      anomaly.severity = 0.0;
      anomaly.caveats.push_back("residual explained by " + std::string(to_string(o.pattern)));
      return;
    }
  }
}

}  // namespace

std::string_view to_string(PatternKind kind) {
  for (const auto& n : kNames) {
    if (n.kind == kind) return n.id;
  }
  return "?";
}

std::string_view display_name(PatternKind kind) {
  for (const auto& n : kNames) {
    if (n.kind == kind) return n.display;
  }
  return "?";
}

std::optional<PatternKind> parse_pattern_kind(std::string_view name) {
  for (const auto& n : kNames) {
    if (n.id == name) return n.kind;
  }
  return std::nullopt;
}

std::string_view to_string(Relation relation) {
  switch (relation) {
    case Relation::ge: return ">=";
    case Relation::le: return "<=";
    case Relation::approx: return "~";
    case Relation::mismatch: return "mismatch";
  }
  return "?";
}

std::string_view to_string(EvidenceSource source) {
  switch (source) {
    case EvidenceSource::hpm: return "HPM";
    case EvidenceSource::scaling: return "scaling behavior";
    case EvidenceSource::static_analysis: return "static analysis input";
    case EvidenceSource::baseline: return "baseline";
  }
  return "?";
}

PreparedInput prepare(const DiagnosisInput& input) {
  PreparedInput p;
  p.input = &input;
  const auto& session = input.session;
  const auto& topo = input.machine.topology;

  if (session.regions.empty()) throw ValidationError("session '" + session.session_id + "' has no regions");
  if (input.region.empty()) {
    p.region = &session.regions.front();
  } else {
    p.region = session.find_region(input.region);
    if (p.region == nullptr) throw ValidationError("no region named '" + input.region + "'");
  }
  auto cores_seen = session.core_set;
  for (const auto& r : session.regions) {
    for (int c : r.core_ids()) cores_seen.push_back(c);
  }
  for (int c : cores_seen) {
    if (std::find(topo.core_ids.begin(), topo.core_ids.end(), c) == topo.core_ids.end()) {
      throw ValidationError("session core " + std::to_string(c) + " is not part of machine '" +
                            input.machine.name + "'");
    }
  }

  p.metrics = derive_metrics(*p.region, input.machine, input.groups ? *input.groups : builtin_groups());

  const auto cores = p.region->core_ids();
  const auto& b = input.machine.baselines;
  p.mem_reference_MBs = memory_reference_MBs(input.machine, cores);
  p.mem_reference_name = p.mem_reference_MBs == b.stream_bw_core_MBs * static_cast<double>(cores.size())
                             ? "stream_bw_core x threads"
                             : "update_bw_socket x sockets";
  p.olc_reference_MBs = olc_reference_MBs(input.machine, cores);

  if (!input.baseline.empty()) {
    const auto value = baseline_by_name(b, input.baseline);
    if (!value) throw ValidationError("unknown baseline '" + input.baseline + "'");
    if (input.baseline.rfind("olc", 0) == 0) {
      p.olc_reference_MBs = *value;
    } else {
      p.mem_reference_MBs = *value;
      p.mem_reference_name = input.baseline;
    }
  }

  if (input.series) {
    try {
      p.scaling = speedup_curve(*input.series, input.thresholds);
    } catch (const Error& e) {
      p.scaling_error = e.what();
    }
  }
  return p;
}

Finding detect(PatternKind kind, const PreparedInput& prepared) {
  auto f = run_detector(kind, prepared);
  if (kind == PatternKind::MicroarchAnomaly && f.fired) {
    std::vector<Finding> others;
    for (auto k : kAllPatterns) {
      if (k != kind) others.push_back(safe_detect(k, prepared));
    }
    apply_residual_rule(f, others);
  }
  return f;
}

Finding detect_signature(PatternKind kind, const PreparedInput& prepared) {
  return run_detector(kind, prepared, false);
}

Finding detect(PatternKind kind, const DiagnosisInput& input) { return detect(kind, prepare(input)); }

std::vector<Finding> diagnose(const PreparedInput& prepared) {
  std::vector<Finding> findings;
  for (auto k : kAllPatterns) findings.push_back(safe_detect(k, prepared));
  for (auto& f : findings) {
    if (f.pattern == PatternKind::MicroarchAnomaly) apply_residual_rule(f, findings);
  }
  std::stable_sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
    if (a.fired != b.fired) return a.fired;
    if (a.severity != b.severity) return a.severity > b.severity;
    return a.pattern < b.pattern;
  });
  return findings;
}

std::vector<Finding> diagnose(const DiagnosisInput& input) { return diagnose(prepare(input)); }

}  // namespace hpmdiag
