#include "hpmdiag/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hpmdiag/error.hpp"
#include "json_util.hpp"

namespace hpmdiag {

namespace {

// Group results for one region, looked up by metric name.
class GroupResults {
 public:
  GroupResults(const RegionMeasurement& region, const GroupRegistry& groups) : groups_(groups) {
    for (const auto& group : groups.groups()) {
      for (auto& result : evaluate_group(group, region)) {
        results_.push_back({group.group_name, std::move(result)});
      }
    }
  }

  // Aggregate (core < 0) or per-core value of `group.metric`.
  MetricValue get(std::string_view group, std::string_view metric, int core_index) const {
    for (const auto& [g, r] : results_) {
      if (g != group || r.metric_name != metric) continue;
      return core_index < 0 ? r.aggregate : r.per_core.at(static_cast<std::size_t>(core_index));
    }
    if (groups_.find(group) == nullptr) {
      return MetricValue::not_computable("group " + std::string(group) + " not registered");
    }
    return MetricValue::not_computable("metric " + std::string(metric) + " not defined in group " +
                                       std::string(group));
  }

 private:
  const GroupRegistry& groups_;
  std::vector<std::pair<std::string, MetricResult>> results_;
};

const MetricValue* first_failure(std::initializer_list<const MetricValue*> values) {
  for (const auto* v : values) {
    if (v->state() == MetricValue::State::not_computable) return v;
  }
  for (const auto* v : values) {
    if (!v->ok()) return v;
  }
  return nullptr;
}

MetricValue ratio(const MetricValue& num, const MetricValue& den) {
  if (const auto* f = first_failure({&num, &den})) return *f;
  if (den.value() == 0.0) return MetricValue::undefined();
  return MetricValue::of(num.value() / den.value());
}

struct FpRates {
  MetricValue packed;  // packed FP instructions per second (1e6)
  MetricValue scalar;
  MetricValue mflops;
};

// Sums the precisions whose packed and scalar rates are both known.
FpRates fp_rates(const GroupResults& r, int core) {
  struct Precision {
    MetricValue packed, scalar, mflops;
  };
  const Precision precisions[] = {
      {r.get("FLOPS_DP", "PACKED_DP_MUOPS", core), r.get("FLOPS_DP", "SCALAR_DP_MUOPS", core),
       r.get("FLOPS_DP", "DP_MFLOPS", core)},
      {r.get("FLOPS_SP", "PACKED_SP_MUOPS", core), r.get("FLOPS_SP", "SCALAR_SP_MUOPS", core),
       r.get("FLOPS_SP", "SP_MFLOPS", core)},
  };
  double packed = 0.0;
  double scalar = 0.0;
  double mflops = 0.0;
  bool any = false;
  std::string reasons;
  for (const auto& p : precisions) {
    if (const auto* f = first_failure({&p.packed, &p.scalar, &p.mflops})) {
      if (f->state() == MetricValue::State::undefined) return {*f, *f, *f};
      if (!reasons.empty()) reasons += "; ";
      reasons += f->reason();
      continue;
    }
    any = true;
    packed += p.packed.value();
    scalar += p.scalar.value();
    mflops += p.mflops.value();
  }
  if (!any) {
    const auto nc = MetricValue::not_computable(reasons);
    return {nc, nc, nc};
  }
  return {MetricValue::of(packed), MetricValue::of(scalar), MetricValue::of(mflops)};
}

MetricSet metric_set(const GroupResults& r, int core) {
  MetricSet m;
  m.cpi = r.get("CPI", "CPI", core);
  m.mem_bw_MBs = r.get("MEM", "MEM_BW", core);
  m.olc_bw_MBs = r.get("L3", "L3_BW", core);
  m.remote_fraction = r.get("MEM", "REMOTE_FRACTION", core);
  m.ldst_fraction = r.get("DATA", "LDST_FRACTION", core);
  m.cache_hit_ratio = r.get("CACHE", "CACHE_HIT_RATIO", core);
  m.evicts_per_instr = r.get("CACHE", "EVICTS_PER_INSTR", core);

  const auto fp = fp_rates(r, core);
  const auto mips = r.get("CPI", "MIPS", core);
  m.mflops = fp.mflops;
  if (const auto* f = first_failure({&fp.packed, &fp.scalar})) {
    m.simd_fraction = *f;
  } else {
    m.simd_fraction = ratio(fp.packed, MetricValue::of(fp.packed.value() + fp.scalar.value()));
  }
  m.instr_per_flop = ratio(mips, fp.mflops);
  if (const auto* f = first_failure({&fp.packed, &fp.scalar, &mips})) {
    m.nonfp_fraction = *f;
  } else {
    const auto share = ratio(MetricValue::of(fp.packed.value() + fp.scalar.value()), mips);
    m.nonfp_fraction = share.ok() ? MetricValue::of(std::max(0.0, 1.0 - share.value())) : share;
  }
  return m;
}

}  // namespace

DerivedMetrics derive_metrics(const RegionMeasurement& region, const MachineModel& machine,
                              const GroupRegistry& groups) {
  const GroupResults results(region, groups);
  DerivedMetrics out;
  out.aggregate = metric_set(results, -1);
  out.core_ids = region.core_ids();
  for (std::size_t i = 0; i < region.cores.size(); ++i) {
    out.per_core.push_back(metric_set(results, static_cast<int>(i)));
  }

  const auto& domains = machine.topology.numa_domains;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    DomainBandwidth db;
    db.domain = static_cast<int>(d);
    double sum = 0.0;
    const MetricValue* failure = nullptr;
    for (std::size_t i = 0; i < out.core_ids.size(); ++i) {
      if (std::find(domains[d].begin(), domains[d].end(), out.core_ids[i]) == domains[d].end()) continue;
      db.core_ids.push_back(out.core_ids[i]);
      const auto& bw = out.per_core[i].mem_bw_MBs;
      if (!bw.ok()) {
        failure = &bw;
      } else {
        sum += bw.value();
      }
    }
    if (db.core_ids.empty()) continue;
    db.mem_bw_MBs = failure ? *failure : MetricValue::of(sum);
    out.domains.push_back(std::move(db));
  }
  return out;
}

std::vector<std::pair<std::string, MetricValue>> metric_fields(const MetricSet& m) {
  return {
      {"cpi", m.cpi},
      {"mem_bw_MBs", m.mem_bw_MBs},
      {"olc_bw_MBs", m.olc_bw_MBs},
      {"mflops", m.mflops},
      {"simd_fraction", m.simd_fraction},
      {"instr_per_flop", m.instr_per_flop},
      {"ldst_fraction", m.ldst_fraction},
      {"nonfp_fraction", m.nonfp_fraction},
      {"cache_hit_ratio", m.cache_hit_ratio},
      {"evicts_per_instr", m.evicts_per_instr},
      {"remote_fraction", m.remote_fraction},
  };
}

// ---------------------------------------------------------------------------
// Imbalance
// ---------------------------------------------------------------------------

ImbalanceReport imbalance_of(std::string label, std::vector<double> values) {
  ImbalanceReport report;
  report.event_name = std::move(label);
  report.per_core = std::move(values);
  if (report.per_core.empty()) return report;
  const auto [lo, hi] = std::minmax_element(report.per_core.begin(), report.per_core.end());
  if (*hi <= 0.0) return report;  // all zero: index 0 by definition
  const double mean =
      std::accumulate(report.per_core.begin(), report.per_core.end(), 0.0) / static_cast<double>(report.per_core.size());
  report.index = 1.0 - *lo / *hi;
  report.max_over_mean = *hi / mean;
  return report;
}

ImbalanceReport imbalance_index(const RegionMeasurement& region, std::string_view event) {
  const auto stats = aggregate_counts(region, event);
  std::vector<double> values(stats.per_core.begin(), stats.per_core.end());
  return imbalance_of(std::string(event), std::move(values));
}

double balance_work_conservation(const RegionMeasurement& before, const RegionMeasurement& after,
                                 std::string_view event) {
  const double b = static_cast<double>(aggregate_counts(before, event).sum);
  const double a = static_cast<double>(aggregate_counts(after, event).sum);
  if (b == 0.0) return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::fabs(b - a) / b;
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

std::string_view to_string(ScalingShape shape) {
  switch (shape) {
    case ScalingShape::linear: return "linear";
    case ScalingShape::saturating: return "saturating";
    case ScalingShape::degrading: return "degrading";
    case ScalingShape::irregular: return "irregular";
  }
  return "irregular";
}

std::vector<std::string> validate_series(const ScalingSeries& series) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    if (p.threads < 1) out.push_back("ScalingSeries.points: thread_count must be >= 1");
    if (i > 0 && p.threads <= series.points[i - 1].threads) {
      out.push_back("ScalingSeries.points: thread counts must be strictly increasing");
    }
    if (!(p.value > 0.0) || !std::isfinite(p.value)) {
      out.push_back(std::string("ScalingSeries.points: ") +
                    (series.kind == SeriesKind::runtime ? "runtimes" : "performance values") + " must be > 0");
    }
  }
  return out;
}

ScalingClassification speedup_curve(const ScalingSeries& series, const Thresholds& thresholds) {
  if (series.points.size() < 2) {
    throw TooFewPoints("scaling analysis needs at least 2 points, got " + std::to_string(series.points.size()));
  }
  if (const auto v = validate_series(series); !v.empty()) throw ValidationError(v.front());

  const double eps = thresholds.get("scaling_epsilon");
  const double sat_slope = thresholds.get("sat_slope");
  const double lin_frac = thresholds.get("lin_frac");

  ScalingClassification c;
  const auto& first = series.points.front();
  for (const auto& p : series.points) {
    c.threads.push_back(p.threads);
    c.speedups.push_back(series.kind == SeriesKind::runtime ? first.value / p.value : p.value / first.value);
  }

  const std::size_t n = c.speedups.size();
  std::vector<double> slopes;
  for (std::size_t i = 1; i < n; ++i) {
    slopes.push_back((c.speedups[i] - c.speedups[i - 1]) / static_cast<double>(c.threads[i] - c.threads[i - 1]));
  }

  bool degrading = false;
  for (std::size_t i = 1; i < n; ++i) {
    if (c.speedups[i] < c.speedups[i - 1] - eps) degrading = true;
  }
  const double thread_ratio = static_cast<double>(c.threads.back()) / static_cast<double>(c.threads.front());

  if (degrading) {
    c.shape = ScalingShape::degrading;
  } else if (slopes.back() < sat_slope) {
    c.shape = ScalingShape::saturating;
    // Smallest thread count after which every marginal gain stays flat.
    std::size_t k = n - 1;
    while (k > 0 && slopes[k - 1] < sat_slope) --k;
    c.saturation_point = c.threads[k];
  } else if (c.speedups.back() >= lin_frac * thread_ratio) {
    c.shape = ScalingShape::linear;
  } else {
    c.shape = ScalingShape::irregular;
  }
  return c;
}

std::optional<double> instruction_growth_exponent(const ScalingSeries& series) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : series.points) {
    if (p.instructions && *p.instructions > 0.0 && p.threads >= 1) {
      xy.emplace_back(std::log(static_cast<double>(p.threads)), std::log(*p.instructions));
    }
  }
  if (xy.size() < 2) return std::nullopt;
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(xy.size());
  my /= static_cast<double>(xy.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

std::optional<double> total_instructions(const MeasurementSession& session) {
  double total = 0.0;
  for (const auto& region : session.regions) {
    if (!region.has_event("INSTR_RETIRED")) return std::nullopt;
    total += static_cast<double>(aggregate_counts(region, "INSTR_RETIRED").sum);
  }
  if (session.regions.empty()) return std::nullopt;
  return total;
}

// ---------------------------------------------------------------------------
// Series files
// ---------------------------------------------------------------------------

ScalingSeries parse_series_json(std::string_view text) {
  const auto root = detail::parse_json_text(text, "series");
  detail::ObjectReader top(root, "");
  ScalingSeries s;
  if (const auto* v = top.optional("label")) s.label = detail::as_text(*v, "label");
  if (const auto* v = top.optional("unit")) s.unit = detail::as_text(*v, "unit");
  const auto& points = top.required("points");
  if (!points.is_array()) throw ParseError("points", "expected an array");
  bool any_runtime = false;
  bool any_perf = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    detail::ObjectReader r(points[i], "points[" + std::to_string(i) + "]");
    ScalingPoint p;
    p.threads = r.integer("threads");
    const auto* rt = r.optional("runtime_s");
    const auto* perf = r.optional("performance");
    if ((rt == nullptr) == (perf == nullptr)) {
      throw ParseError(r.path(), "expected exactly one of runtime_s, performance");
    }
    if (rt) {
      any_runtime = true;
      p.value = detail::as_number(*rt, r.child("runtime_s"));
    } else {
      any_perf = true;
      p.value = detail::as_number(*perf, r.child("performance"));
    }
    if (const auto* v = r.optional("instructions")) p.instructions = detail::as_number(*v, r.child("instructions"));
    if (const auto* v = r.optional("label")) p.label = detail::as_text(*v, r.child("label"));
    if (const auto* v = r.optional("session")) p.session_ref = detail::as_text(*v, r.child("session"));
    r.finish();
    s.points.push_back(std::move(p));
  }
  top.finish();
  if (any_runtime && any_perf) throw ParseError("points", "cannot mix runtime_s and performance points");
  s.kind = any_perf ? SeriesKind::performance : SeriesKind::runtime;
  if (s.kind == SeriesKind::runtime) s.unit = "s";
  if (const auto v = validate_series(s); !v.empty()) throw ValidationError(v.front());
  return s;
}

ScalingSeries load_series(const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return parse_series_json(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.context(), e.message());
  }
}

std::string write_series_json(const ScalingSeries& series) {
  nlohmann::ordered_json root;
  root["label"] = series.label;
  if (series.kind == SeriesKind::performance) root["unit"] = series.unit;
  auto points = nlohmann::ordered_json::array();
  for (const auto& p : series.points) {
    nlohmann::ordered_json j;
    j["threads"] = p.threads;
    j[series.kind == SeriesKind::runtime ? "runtime_s" : "performance"] = p.value;
    if (p.instructions) j["instructions"] = *p.instructions;
    if (!p.label.empty()) j["label"] = p.label;
    if (!p.session_ref.empty()) j["session"] = p.session_ref;
    points.push_back(std::move(j));
  }
  root["points"] = std::move(points);
  return root.dump(2) + "\n";
}

}  // namespace hpmdiag
