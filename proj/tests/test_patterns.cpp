#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "hpmdiag/error.hpp"
#include "hpmdiag/patterns.hpp"
#include "hpmdiag/synth.hpp"

using namespace hpmdiag;

namespace {

DiagnosisInput matmul_input(const std::string& name) {
  auto in = fixtures::input_for(fixtures::matmul_session(fixtures::matmul_row(name)), fixtures::westmere_1s());
  in.useful_work_fp = true;
  return in;
}

ScalingSeries series_of(std::vector<std::pair<int, double>> pts) {
  ScalingSeries s;
  for (auto [t, r] : pts) s.points.push_back({t, r, std::nullopt, "", ""});
  return s;
}

const Finding& find(const std::vector<Finding>& fs, PatternKind k) {
  return *std::find_if(fs.begin(), fs.end(), [&](const Finding& f) { return f.pattern == k; });
}

bool has_caveat(const Finding& f, const std::string& text) {
  return std::any_of(f.caveats.begin(), f.caveats.end(),
                     [&](const std::string& c) { return c.find(text) != std::string::npos; });
}

}  // namespace

TEST(PatternNames, RoundTrip) {
  for (auto k : kAllPatterns) EXPECT_EQ(parse_pattern_kind(to_string(k)), k);
  EXPECT_EQ(display_name(PatternKind::LoadImbalance), "Load imbalance");
  EXPECT_FALSE(parse_pattern_kind("Nope"));
}

TEST(LoadImbalance, FiresOnSkewedPackedCounts) {
  const auto in = fixtures::input_for(fixtures::packed_counts_session("t3", fixtures::kImbalancedCounts, 61.72),
                                      fixtures::westmere_1s());
  const auto f = detect(PatternKind::LoadImbalance, in);
  EXPECT_TRUE(f.fired);
  EXPECT_NEAR(f.severity, 0.7082, 1e-4);
  ASSERT_FALSE(f.evidence.empty());
  EXPECT_EQ(f.evidence[0].metric_name, "imbalance_index(FP_OPS_PACKED_SP)");
  EXPECT_EQ(f.evidence[0].relation, Relation::ge);
}

TEST(LoadImbalance, QuietAfterTheFix) {
  const auto in = fixtures::input_for(fixtures::packed_counts_session("t4", fixtures::kBalancedCounts, 43.9),
                                      fixtures::westmere_1s());
  const auto f = detect(PatternKind::LoadImbalance, in);
  EXPECT_FALSE(f.fired);
  EXPECT_EQ(f.severity, 0.0);
}

TEST(LoadImbalance, FirstInDiagnosis) {
  const auto in = fixtures::input_for(fixtures::packed_counts_session("t3", fixtures::kImbalancedCounts, 61.72),
                                      fixtures::westmere_1s());
  const auto fs = diagnose(in);
  ASSERT_EQ(fs.size(), kAllPatterns.size());
  EXPECT_EQ(fs[0].pattern, PatternKind::LoadImbalance);
  EXPECT_TRUE(fs[0].fired);
}

TEST(MemoryBandwidth, SaturatedSocket) {
  const auto f = detect(PatternKind::MemoryBandwidthSaturation,
                        fixtures::input_for(fixtures::bandwidth_session(19000.0), fixtures::westmere_1s()));
  EXPECT_TRUE(f.fired);
  EXPECT_NEAR(f.severity, 19000.0 / 20300.0, 1e-3);
}

TEST(MemoryBandwidth, HalfLoadedSocket) {
  const auto f = detect(PatternKind::MemoryBandwidthSaturation,
                        fixtures::input_for(fixtures::bandwidth_session(10000.0), fixtures::westmere_1s()));
  EXPECT_FALSE(f.fired);
  ASSERT_FALSE(f.evidence.empty());
  EXPECT_NEAR(f.evidence[0].observed / *f.evidence[0].reference, 0.4926, 1e-3);
}

TEST(MemoryBandwidth, LinearScalingVetoes) {
  auto in = fixtures::input_for(fixtures::bandwidth_session(19000.0), fixtures::westmere_1s());
  in.series = series_of({{1, 60}, {2, 30}, {4, 15}, {6, 10.1}});
  EXPECT_FALSE(detect(PatternKind::MemoryBandwidthSaturation, in).fired);
  in.series = series_of({{1, 60}, {2, 32}, {4, 25}, {6, 24.8}});
  EXPECT_TRUE(detect(PatternKind::MemoryBandwidthSaturation, in).fired);
}

TEST(MemoryBandwidth, BaselineOverride) {
  auto in = fixtures::input_for(fixtures::bandwidth_session(19000.0), fixtures::westmere_1s());
  in.baseline = "stream_bw_core";
  const auto p = prepare(in);
  EXPECT_DOUBLE_EQ(p.mem_reference_MBs, 11814.0);
  EXPECT_EQ(p.mem_reference_name, "stream_bw_core");
  in.baseline = "bogus";
  EXPECT_THROW(prepare(in), ValidationError);
}

TEST(Strided, UblasFires) {
  const auto f = detect(PatternKind::StridedErraticAccess, matmul_input("uBLAS"));
  EXPECT_TRUE(f.fired);
  EXPECT_NEAR(f.severity, 0.8 * (1.0 - 630.0 / 11814.0) + 0.2 * 0.5, 1e-3);
}

TEST(Strided, ClassicDoesNot) {
  EXPECT_FALSE(detect(PatternKind::StridedErraticAccess, matmul_input("Classic")).fired);
}

TEST(InstructionMix, ClassicScalarCode) {
  const auto f = detect(PatternKind::BadInstructionMix, matmul_input("Classic"));
  EXPECT_TRUE(f.fired);
  EXPECT_NEAR(f.severity, 0.747, 1e-3);
  EXPECT_NEAR(f.evidence[0].observed, 5.0168, 1e-4);
}

TEST(InstructionMix, VectorizedLibraryIsClean) {
  EXPECT_FALSE(detect(PatternKind::BadInstructionMix, matmul_input("MKL")).fired);
  EXPECT_FALSE(detect(PatternKind::BadInstructionMix, matmul_input("Eigen3")).fired);
}

TEST(InstructionMix, NeedsWorkloadDeclaration) {
  auto in = matmul_input("Classic");
  in.useful_work_fp = false;
  EXPECT_THROW(detect(PatternKind::BadInstructionMix, in), NotComputable);
  const auto f = find(diagnose(in), PatternKind::BadInstructionMix);
  EXPECT_FALSE(f.computable);
  EXPECT_FALSE(f.fired);
  EXPECT_TRUE(has_caveat(f, "not computable"));
}

TEST(InstructionThroughput, LowCpiFires) {
  const auto f = detect(PatternKind::LimitedInstructionThroughput, matmul_input("MKL"));
  EXPECT_TRUE(f.fired);
  EXPECT_NEAR(f.severity, 0.25 / 0.321115, 1e-4);
  EXPECT_FALSE(detect(PatternKind::LimitedInstructionThroughput, matmul_input("uBLAS")).fired);
}

TEST(InstructionThroughput, StaticPredictionComparison) {
  auto in = matmul_input("MKL");
  const double cycles = 0.321115 * 2.03448e11;
  in.iterations = 1e9;
  in.static_cycles_per_iter = cycles / 1e9 * 1.05;
  auto f = detect(PatternKind::LimitedInstructionThroughput, in);
  auto it = std::find_if(f.evidence.begin(), f.evidence.end(),
                         [](const Evidence& e) { return e.source == EvidenceSource::static_analysis; });
  ASSERT_NE(it, f.evidence.end());
  EXPECT_EQ(it->relation, Relation::approx);

  in.static_cycles_per_iter = cycles / 1e9 * 2.0;
  f = detect(PatternKind::LimitedInstructionThroughput, in);
  EXPECT_TRUE(has_caveat(f, "disagree"));

  in.iterations.reset();
  f = detect(PatternKind::LimitedInstructionThroughput, in);
  EXPECT_TRUE(has_caveat(f, "without an iteration count"));
}

TEST(InstructionThroughput, SaturationExcludes) {
  auto in = fixtures::input_for(fixtures::bandwidth_session(19000.0), fixtures::westmere_1s());
  for (auto& c : in.session.regions[0].cores) c.counts["CPU_CLK_UNHALTED"] = 0.2 * c.counts["INSTR_RETIRED"];
  const auto p = prepare(in);
  EXPECT_TRUE(detect_signature(PatternKind::LimitedInstructionThroughput, p).fired);
  const auto f = detect(PatternKind::LimitedInstructionThroughput, p);
  EXPECT_FALSE(f.fired);
  EXPECT_TRUE(has_caveat(f, "bandwidth saturation fired"));
}

TEST(Sync, SingleThreadWithoutScalingStaysQuiet) {
  const auto f = detect(PatternKind::SynchronizationOverhead, matmul_input("Classic"));
  EXPECT_FALSE(f.fired);
  EXPECT_TRUE(has_caveat(f, "scaling data absent"));
}

TEST(Sync, GrowingInstructionsFire) {
  SyntheticSpec spec;
  spec.pattern = PatternKind::SynchronizationOverhead;
  spec.intensity = 0.8;
  spec.seed = 3;
  const auto c = generate_session(spec);
  const auto in = diagnosis_input(c.session, c.label, spec.machine);
  const auto f = detect(PatternKind::SynchronizationOverhead, in);
  EXPECT_TRUE(f.fired);
  EXPECT_TRUE(std::any_of(f.evidence.begin(), f.evidence.end(),
                          [](const Evidence& e) { return e.source == EvidenceSource::scaling; }));

  auto no_series = in;
  no_series.series.reset();
  const auto weak = detect(PatternKind::SynchronizationOverhead, no_series);
  EXPECT_TRUE(weak.fired);
  EXPECT_LT(weak.severity, f.severity);
}

TEST(FalseSharing, NeedsSeries) {
  EXPECT_THROW(detect(PatternKind::FalseCachelineSharing, matmul_input("Classic")), NotComputable);
}

TEST(FalseSharing, FlatSpeedupWithoutEvictionCounts) {
  auto in = fixtures::input_for(fixtures::bandwidth_session(5000.0), fixtures::westmere_1s());
  in.series = series_of({{1, 10}, {2, 9.9}, {4, 10.5}});
  const auto f = detect(PatternKind::FalseCachelineSharing, in);
  EXPECT_TRUE(f.fired);
  EXPECT_NEAR(f.severity, 0.3, 1e-12);
  EXPECT_TRUE(has_caveat(f, "HPM evidence missing"));
}

TEST(FalseSharing, GoodScalingIsQuiet) {
  auto in = fixtures::input_for(fixtures::bandwidth_session(5000.0), fixtures::westmere_1s());
  in.series = series_of({{1, 10}, {2, 5.1}, {4, 2.6}});
  EXPECT_FALSE(detect(PatternKind::FalseCachelineSharing, in).fired);
}

TEST(Numa, SingleDomainMachineNotComputable) {
  EXPECT_THROW(detect(PatternKind::BadNumaPlacement,
                      fixtures::input_for(fixtures::bandwidth_session(5000.0), fixtures::westmere_1s())),
               NotComputable);
}

TEST(Numa, RegionOnOneDomainNotComputable) {
  EXPECT_THROW(detect(PatternKind::BadNumaPlacement,
                      fixtures::input_for(fixtures::bandwidth_session(5000.0), fixtures::westmere_2s())),
               NotComputable);
}

TEST(Numa, SkewedDomainsFire) {
  SyntheticSpec spec;
  spec.pattern = PatternKind::BadNumaPlacement;
  spec.intensity = 0.8;
  const auto c = generate_session(spec);
  const auto f = detect(PatternKind::BadNumaPlacement, diagnosis_input(c.session, c.label, spec.machine));
  EXPECT_TRUE(f.fired);
  EXPECT_GT(f.severity, 0.5);
}

TEST(Microarch, NeedsModel) {
  auto in = matmul_input("MKL");
  EXPECT_THROW(detect(PatternKind::MicroarchAnomaly, in), NotComputable);
  const auto f = find(diagnose(in), PatternKind::MicroarchAnomaly);
  EXPECT_TRUE(has_caveat(f, "code review required"));
}

TEST(Microarch, ResidualOnly) {
  auto in = matmul_input("Eigen3");
  in.useful_work_fp = false;
  in.model_mflops = 4.0 * 8555.0;
  const auto p = prepare(in);
  const auto sig = detect_signature(PatternKind::MicroarchAnomaly, p);
  EXPECT_TRUE(sig.fired);
  EXPECT_NEAR(sig.severity, 0.75, 1e-3);

  auto with_other = matmul_input("uBLAS");
  with_other.model_mflops = 10000.0;
  const auto f = detect(PatternKind::MicroarchAnomaly, with_other);
  EXPECT_FALSE(f.fired);
  EXPECT_TRUE(has_caveat(f, "residual explained by"));
}

TEST(Diagnose, OrderingAndValidation) {
  const auto fs = diagnose(matmul_input("uBLAS"));
  bool seen_unfired = false;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (!fs[i].fired) seen_unfired = true;
    if (seen_unfired) EXPECT_FALSE(fs[i].fired);
    if (i > 0 && fs[i].fired) EXPECT_GE(fs[i - 1].severity, fs[i].severity);
  }
  EXPECT_EQ(fs[0].pattern, PatternKind::StridedErraticAccess);

  auto bad = matmul_input("uBLAS");
  bad.region = "nope";
  EXPECT_THROW(diagnose(bad), ValidationError);
  bad = matmul_input("uBLAS");
  bad.session.regions[0].cores[0].core_id = 99;
  EXPECT_THROW(diagnose(bad), ValidationError);
}

TEST(Diagnose, Deterministic) {
  const auto in = matmul_input("Classic");
  EXPECT_EQ(diagnose(in), diagnose(in));
}
