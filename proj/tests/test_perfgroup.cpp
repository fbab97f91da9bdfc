#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "hpmdiag/error.hpp"
#include "hpmdiag/perfgroup.hpp"

using namespace hpmdiag;

namespace {

const char* kCpiGroup =
    "SHORT cycles per instruction\n"
    "EVENTSET\n"
    "FIXC0 INSTR_RETIRED\n"
    "FIXC1 CPU_CLK_UNHALTED\n"
    "METRICS\n"
    "CPI FIXC1/FIXC0\n";

RegionMeasurement region_with(std::vector<EventCounts> per_core, double wall = 1.0) {
  RegionMeasurement r;
  r.region_name = "r";
  r.wall_time_s = wall;
  for (std::size_t i = 0; i < per_core.size(); ++i) r.cores.push_back({static_cast<int>(i), per_core[i]});
  return r;
}

}  // namespace

TEST(ParseGroup, MinimalGroup) {
  const auto g = parse_group_file(kCpiGroup, "CPI");
  EXPECT_EQ(g.short_description, "cycles per instruction");
  ASSERT_EQ(g.event_set.size(), 2u);
  ASSERT_EQ(g.metrics.size(), 1u);
  EXPECT_EQ(g.metrics[0].metric_name, "CPI");
  EXPECT_TRUE(structurally_equal(*g.metrics[0].expression,
                                 *make_binary(BinaryOp::div, make_slot("FIXC1"), make_slot("FIXC0"))));
}

TEST(ParseGroup, FlopsFormulaShape) {
  const auto g = parse_group_file(
      "SHORT dp\nEVENTSET\nPMC0 FP_OPS_PACKED_DP\nPMC1 FP_OPS_SCALAR_DP\nMETRICS\n"
      "DP_MFLOPS 1.0E-06*(PMC0*2.0+PMC1)/time\n",
      "FLOPS_DP");
  const auto expected = make_binary(
      BinaryOp::div,
      make_binary(BinaryOp::mul, make_number(1.0e-6),
                  make_binary(BinaryOp::add, make_binary(BinaryOp::mul, make_slot("PMC0"), make_number(2.0)),
                              make_slot("PMC1"))),
      make_time());
  EXPECT_TRUE(structurally_equal(*g.metrics[0].expression, *expected));
  EXPECT_EQ(referenced_slots(*expected), (std::vector<std::string>{"PMC0", "PMC1"}));
  EXPECT_TRUE(references_time(*expected));
}

TEST(ParseGroup, UnknownSlot) {
  try {
    parse_group_file("SHORT x\nEVENTSET\nPMC0 A\nMETRICS\nM PMC0/PMC9\n", "X");
    FAIL();
  } catch (const UnknownSlotError& e) {
    EXPECT_EQ(e.slot(), "PMC9");
    EXPECT_EQ(e.context().rfind("5:", 0), 0u) << e.context();
  }
}

TEST(ParseGroup, SyntaxErrorsCarryPositions) {
  try {
    parse_group_file("SHORT x\nEVENTSET\nPMC0 A\nMETRICS\nM PMC0*\n", "X");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 5);
    EXPECT_GT(e.column(), 1);
  }
  EXPECT_THROW(parse_group_file("EVENTSET\nPMC0 A\nMETRICS\nM PMC0\n", "X"), SyntaxError);
  EXPECT_THROW(parse_group_file("SHORT x\nEVENTSET\nPMC0 A\nPMC0 B\nMETRICS\nM PMC0\n", "X"), SyntaxError);
  EXPECT_THROW(parse_group_file("SHORT x\nEVENTSET\nPMC0 A\nMETRICS\n", "X"), SyntaxError);
  EXPECT_THROW(parse_group_file("SHORT x\nEVENTSET\nPMC0 lower\nMETRICS\nM PMC0\n", "X"), SyntaxError);
}

TEST(ParseGroup, CommentsUnitsAndBlankLines) {
  const auto g = parse_group_file(
      "# header comment\nSHORT bw   # trailing\n\nEVENTSET\nPMC0 L3_LINES_IN\n\nMETRICS\n"
      "L3_BW [MByte/s] 1.0E-06*PMC0*64.0/time\n",
      "L3X");
  EXPECT_EQ(g.metrics[0].unit, "MByte/s");
}

TEST(ParseExpr, PrecedenceAndUnaryMinus) {
  const auto e = parse_expr("-A+B*C/2-(D-E)");
  EXPECT_DOUBLE_EQ(evaluate_formula(*e, {{"A", 1}, {"B", 4}, {"C", 3}, {"D", 10}, {"E", 4}}, 1.0).value(),
                   -1 + 4.0 * 3 / 2 - 6);
  EXPECT_EQ(print_expr(*parse_expr("A-(B-C)")), "A - (B - C)");
  EXPECT_EQ(print_expr(*parse_expr("(A-B)-C")), "A - B - C");
  EXPECT_EQ(print_expr(*parse_expr("A/(B*C)")), "A / (B * C)");
}

TEST(ParseExpr, Numbers) {
  EXPECT_DOUBLE_EQ(evaluate_formula(*parse_expr("1.0E-06"), {}, 1.0).value(), 1e-6);
  EXPECT_DOUBLE_EQ(evaluate_formula(*parse_expr("2.5e3"), {}, 1.0).value(), 2500.0);
  EXPECT_DOUBLE_EQ(evaluate_formula(*parse_expr(".5"), {}, 1.0).value(), 0.5);
  EXPECT_THROW(parse_expr("1e"), SyntaxError);
  EXPECT_THROW(parse_expr("1e999"), SyntaxError);
}

TEST(EvaluateFormula, CpiFromPublishedRow) {
  const auto g = parse_group_file(kCpiGroup, "CPI");
  const double instr = 1.25420e12;
  const double cycles = 0.440861 * instr;
  const auto v = evaluate_formula(g.metrics[0], {{"FIXC0", instr}, {"FIXC1", cycles}}, 1.0);
  ASSERT_TRUE(v.ok());
  EXPECT_NEAR(v.value(), 0.440861, 0.440861 * 1e-6);
}

TEST(EvaluateFormula, ZeroFlops) {
  const auto e = parse_expr("1.0E-06*(PMC0*2.0+PMC1)/time");
  EXPECT_EQ(evaluate_formula(*e, {{"PMC0", 0}, {"PMC1", 0}}, 3.7).value(), 0.0);
}

TEST(EvaluateFormula, DivisionByZeroIsUndefined) {
  const auto v = evaluate_formula(*parse_expr("A/B"), {{"A", 1}, {"B", 0}}, 1.0);
  EXPECT_EQ(v.state(), MetricValue::State::undefined);
  EXPECT_EQ(v.describe(), "undefined");
  EXPECT_EQ(evaluate_formula(*parse_expr("A/B"), {{"A", 0}, {"B", 0}}, 1.0).state(), MetricValue::State::undefined);
}

TEST(EvaluateFormula, Preconditions) {
  EXPECT_THROW(evaluate_formula(*parse_expr("A/B"), {{"A", 1}}, 1.0), PreconditionError);
  EXPECT_THROW(evaluate_formula(*parse_expr("A/time"), {{"A", 1}}, 0.0), PreconditionError);
  EXPECT_NO_THROW(evaluate_formula(*parse_expr("A"), {{"A", 1}}, 0.0));
}

TEST(EvaluateGroup, CpiOnOneCore) {
  const auto g = parse_group_file(kCpiGroup, "CPI");
  const auto r = region_with({{{"CPU_CLK_UNHALTED", 200}, {"INSTR_RETIRED", 100}}});
  const auto res = evaluate_group(g, r);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_DOUBLE_EQ(res[0].per_core[0].value(), 2.0);
  EXPECT_DOUBLE_EQ(res[0].aggregate.value(), 2.0);
}

TEST(EvaluateGroup, AggregateUsesSummedBindings) {
  const auto g = parse_group_file(kCpiGroup, "CPI");
  const auto r = region_with({{{"CPU_CLK_UNHALTED", 100}, {"INSTR_RETIRED", 100}},
                              {{"CPU_CLK_UNHALTED", 900}, {"INSTR_RETIRED", 300}}});
  const auto res = evaluate_group(g, r)[0];
  const double mean_of_cores = (res.per_core[0].value() + res.per_core[1].value()) / 2.0;
  EXPECT_DOUBLE_EQ(res.aggregate.value(), 1000.0 / 400.0);
  EXPECT_NE(res.aggregate.value(), mean_of_cores);
}

TEST(EvaluateGroup, PackedOnlyRegionLeavesTotalFlopsNotComputable) {
  const auto s = fixtures::packed_counts_session("t3", fixtures::kImbalancedCounts, 61.72);
  const auto* g = builtin_groups().find("FLOPS_SP");
  ASSERT_NE(g, nullptr);
  for (const auto& m : evaluate_group(*g, s.regions[0])) {
    if (m.metric_name == "PACKED_SP_MUOPS") {
      EXPECT_TRUE(m.aggregate.ok());
    }
    if (m.metric_name == "SP_MFLOPS") {
      EXPECT_EQ(m.aggregate.state(), MetricValue::State::not_computable);
      EXPECT_NE(m.aggregate.describe().find("missing FP_OPS_SCALAR"), std::string::npos) << m.aggregate.describe();
      EXPECT_EQ(m.missing_events, std::vector<std::string>{"FP_OPS_SCALAR_SP"});
    }
  }
}

TEST(EvaluateGroup, MemGroupWithoutMemoryEvents) {
  const auto r = region_with({{{"INSTR_RETIRED", 1}}});
  for (const auto& m : evaluate_group(*builtin_groups().find("MEM"), r)) {
    EXPECT_EQ(m.aggregate.state(), MetricValue::State::not_computable) << m.metric_name;
    for (const auto& v : m.per_core) EXPECT_FALSE(v.ok());
  }
}

TEST(Builtins, RegistryContents) {
  const auto& reg = builtin_groups();
  EXPECT_EQ(reg.size(), 7u);
  for (const char* name : {"FLOPS_DP", "FLOPS_SP", "L3", "MEM", "CACHE", "DATA", "CPI"}) {
    EXPECT_NE(reg.find(name), nullptr) << name;
    EXPECT_FALSE(builtin_group_source(name).empty());
  }
  EXPECT_EQ(reg.find("NOPE"), nullptr);
  EXPECT_TRUE(builtin_group_source("NOPE").empty());
}

TEST(Builtins, CpiGroupComputesCyclesOverInstructions) {
  const auto* g = builtin_groups().find("CPI");
  const auto* cpi = g->find_metric("CPI");
  ASSERT_NE(cpi, nullptr);
  const auto slot_of = [&](const char* ev) {
    for (const auto& e : g->event_set) {
      if (e.event_name == ev) return e.counter_slot;
    }
    return std::string();
  };
  SlotBindings b{{slot_of("CPU_CLK_UNHALTED"), 300.0}, {slot_of("INSTR_RETIRED"), 100.0}};
  EXPECT_DOUBLE_EQ(evaluate_formula(*cpi, b, 1.0).value(), 3.0);
}

TEST(Builtins, MemBandwidthFromLinesTimesLineSize) {
  const auto r = region_with({{{"MEM_LINES_READ", 1'000'000}, {"MEM_LINES_WRITE", 500'000}, {"MEM_LINES_REMOTE", 0}}},
                             2.0);
  for (const auto& m : evaluate_group(*builtin_groups().find("MEM"), r)) {
    if (m.metric_name == "MEM_BW") {
      EXPECT_DOUBLE_EQ(m.aggregate.value(), 1.5e6 * 64.0 / 2.0 / 1e6);
    }
  }
}

TEST(Builtins, CpiIsHomogeneousOfDegreeZero) {
  const auto* g = builtin_groups().find("CPI");
  const auto* cpi = g->find_metric("CPI");
  const SlotBindings base{{"FIXC0", 12345.0}, {"FIXC1", 67890.0}};
  const double v = evaluate_formula(*cpi, base, 1.0).value();
  for (double k : {1e-3, 0.5, 3.0, 1e6}) {
    SlotBindings scaled{{"FIXC0", 12345.0 * k}, {"FIXC1", 67890.0 * k}};
    EXPECT_NEAR(evaluate_formula(*cpi, scaled, 1.0).value(), v, v * 1e-15);
  }
}

TEST(Builtins, PrintParseRoundTrip) {
  for (const auto& g : builtin_groups().groups()) {
    const auto again = parse_group_file(print_group(g), g.group_name);
    ASSERT_EQ(again.metrics.size(), g.metrics.size());
    for (std::size_t i = 0; i < g.metrics.size(); ++i) {
      EXPECT_TRUE(structurally_equal(*g.metrics[i].expression, *again.metrics[i].expression))
          << g.group_name << "." << g.metrics[i].metric_name;
      EXPECT_EQ(g.metrics[i].unit, again.metrics[i].unit);
    }
  }
}

TEST(Registry, AddReplacesAndFindsMetrics) {
  GroupRegistry reg = builtin_groups();
  reg.add(parse_group_file("SHORT custom\nEVENTSET\nPMC0 FOO\nMETRICS\nFOO_RATE PMC0/time\n", "CPI"));
  EXPECT_EQ(reg.size(), 7u);
  EXPECT_EQ(reg.find("CPI")->short_description, "custom");
  const auto found = reg.find_metric("FOO_RATE");
  ASSERT_TRUE(found);
  EXPECT_EQ(found->first->group_name, "CPI");
  EXPECT_FALSE(reg.find_metric("NOPE"));
}

TEST(LoadGroupFile, NameFromStemAndPathInErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "hpmdiag_groups_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "MYGROUP.txt") << kCpiGroup;
  EXPECT_EQ(load_group_file(dir / "MYGROUP.txt").group_name, "MYGROUP");
  std::ofstream(dir / "BROKEN.txt") << "SHORT x\nEVENTSET\n";
  try {
    load_group_file(dir / "BROKEN.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("BROKEN.txt"), std::string::npos);
  }
}
