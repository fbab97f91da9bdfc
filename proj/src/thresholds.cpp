#include "hpmdiag/thresholds.hpp"

#include <array>
#include <cmath>

#include "hpmdiag/error.hpp"
#include "json_util.hpp"

namespace hpmdiag {

namespace {

// clang-format off
constexpr std::array<ThresholdSpec, 26> kSpecs{{
  // name                   default  permissive restrictive
  {"imb_threshold",          0.15,   0.0,   1.01,  "LoadImbalance fires when 1 - min/max >= this"},
  {"sat_threshold",          0.75,   0.0,   10.0,  "bandwidth saturation fires when measured/baseline >= this"},
  {"ldst_threshold",         0.40,   0.0,   1.01,  "strided access needs load+store share of instructions >= this"},
  {"low_bw_threshold",       0.30,   10.0,  -1.0,  "strided access: bandwidth utilization <= this"},
  {"hit_threshold",          0.90,   1.01,  -1.0,  "strided access: cache hit ratio <= this"},
  {"strided_w_bw",           0.80,   0.80,  0.80,  "strided severity weight of the bandwidth/hit shortfall"},
  {"strided_w_ldst",         0.20,   0.20,  0.20,  "strided severity weight of the load/store share"},
  {"mix_threshold",          2.00,   0.0,   1e300, "bad instruction mix: instructions per flop >= this"},
  {"simd_threshold",         0.50,   1.01,  -1.0,  "bad instruction mix: packed share of FP instructions <= this"},
  {"mix_severity_span",      4.00,   4.00,  4.00,  "ratio / mix_threshold at which the ratio clause reaches severity 1"},
  {"cpi_limit_factor",       1.30,   1e300, 0.0,   "limited throughput: CPI <= factor / issue_width"},
  {"static_agreement",       0.15,   0.15,  0.15,  "relative agreement between measured and static cycles per iteration"},
  {"nonfp_threshold",        0.80,   0.0,   1.01,  "synchronization: non-FP instruction share >= this"},
  {"sync_growth_exponent",   1.10,   -1e300, 1e300, "synchronization: instruction growth exponent over thread count > this"},
  {"sync_weak_factor",       0.50,   0.50,  0.50,  "severity factor for synchronization without scaling data"},
  {"fs_speedup2",            1.05,   1e300, -1.0,  "false sharing: speedup at two threads <= this"},
  {"fs_max_threads",         4.00,   1e300, 0.0,   "false sharing: slowdown checked up to this many threads"},
  {"evict_threshold",        0.01,   0.0,   1e300, "false sharing: evictions per instruction >= this"},
  {"fs_weak_factor",         0.50,   0.50,  0.50,  "severity factor when only the speedup clause holds"},
  {"numa_imb_threshold",     0.50,   0.0,   1.01,  "ccNUMA: imbalance index over locality-domain bandwidth >= this"},
  {"remote_threshold",       0.30,   0.0,   1e300, "ccNUMA: remote traffic fraction >= this"},
  {"anomaly_fraction",       0.50,   1e300, -1.0,  "microarchitectural anomaly: measured <= fraction * model"},
  {"spin_caveat_nonfp",      0.80,   0.80,  0.80,  "load imbalance: non-FP share that triggers the spin-wait caveat"},
  {"scaling_epsilon",        0.05,   0.05,  0.05,  "speedup drop that counts as degrading"},
  {"sat_slope",              0.10,   0.10,  0.10,  "final marginal speedup per thread below which a curve saturates"},
  {"lin_frac",               0.80,   0.80,  0.80,  "fraction of ideal speedup that counts as linear"},
}};
// clang-format on

}  // namespace

std::span<const ThresholdSpec> threshold_specs() { return kSpecs; }

Thresholds::Thresholds() {
  for (const auto& s : kSpecs) values_.emplace(std::string(s.name), s.default_value);
}

double Thresholds::get(std::string_view name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw ValidationError("unknown threshold '" + std::string(name) + "'");
  return it->second;
}

void Thresholds::set(std::string_view name, double value) {
  const auto it = values_.find(name);
  if (it == values_.end()) throw ValidationError("unknown threshold '" + std::string(name) + "'");
  if (std::isnan(value)) throw ValidationError("threshold '" + std::string(name) + "' is NaN");
  it->second = value;
}

Thresholds Thresholds::most_permissive() {
  Thresholds t;
  for (const auto& s : kSpecs) t.set(s.name, s.permissive);
  return t;
}

Thresholds Thresholds::most_restrictive() {
  Thresholds t;
  for (const auto& s : kSpecs) t.set(s.name, s.restrictive);
  return t;
}

Thresholds parse_thresholds_json(std::string_view text) {
  const auto root = detail::parse_json_text(text, "thresholds");
  if (!root.is_object()) throw ParseError("thresholds", "expected an object");
  Thresholds t;
  for (const auto& [name, value] : root.items()) t.set(name, detail::as_number(value, name));
  return t;
}

Thresholds load_thresholds(const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return parse_thresholds_json(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.context(), e.message());
  }
}

std::string write_thresholds_json(const Thresholds& thresholds) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [name, value] : thresholds.values()) out[name] = value;
  return out.dump(2) + "\n";
}

}  // namespace hpmdiag
