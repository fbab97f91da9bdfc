#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hpmdiag/report.hpp"
#include "json.hpp"

using namespace hpmdiag;

namespace {

struct Rendered {
  DiagnosisInput input;
  PreparedInput prepared;
  std::vector<Finding> findings;
};

std::unique_ptr<Rendered> run(DiagnosisInput in) {
  auto r = std::make_unique<Rendered>();
  r->input = std::move(in);
  r->prepared = prepare(r->input);
  r->findings = diagnose(r->prepared);
  return r;
}

}  // namespace

TEST(FormatNumber, SixSignificantDigits) {
  EXPECT_EQ(format_number(0.70820021), "0.7082");
  EXPECT_EQ(format_number(20300.0), "20300");
  EXPECT_EQ(format_number(1.25420e12), "1.2542e+12");
}

TEST(TextReport, ImbalanceLeadsFindings) {
  const auto r = run(fixtures::input_for(fixtures::packed_counts_session("t3", fixtures::kImbalancedCounts, 61.72),
                                         fixtures::westmere_1s()));
  const auto text = render_text_report(r->prepared, r->findings, {false});
  EXPECT_NE(text.find("Session t3  region backprojection"), std::string::npos) << text;
  EXPECT_NE(text.find("\nFindings\n  1. Load imbalance  severity 0.7082"), std::string::npos) << text;
  EXPECT_EQ(text.find("generated"), std::string::npos);
  EXPECT_NE(render_text_report(r->prepared, r->findings, {true}).find("generated"), std::string::npos);
}

TEST(TextReport, NothingFired) {
  const auto r = run(fixtures::input_for(fixtures::packed_counts_session("t4", fixtures::kBalancedCounts, 43.9),
                                         fixtures::westmere_1s()));
  const auto text = render_text_report(r->prepared, r->findings, {false});
  EXPECT_NE(text.find("  no patterns detected"), std::string::npos) << text;
  EXPECT_NE(text.find("not computable"), std::string::npos);
}

TEST(JsonReport, ShapeAndMarkers) {
  auto in = fixtures::input_for(fixtures::matmul_session(fixtures::matmul_row("uBLAS")), fixtures::westmere_1s());
  in.useful_work_fp = true;
  const auto r = run(in);
  const auto j = nlohmann::json::parse(render_json_report(r->prepared, r->findings, {false}));
  EXPECT_FALSE(j.contains("generated_at"));
  EXPECT_EQ(j.at("findings").size(), kAllPatterns.size());
  const auto& first = j.at("findings")[0];
  EXPECT_EQ(first.at("pattern"), "StridedErraticAccess");
  EXPECT_TRUE(first.at("fired").get<bool>());
  for (const auto& e : first.at("evidence")) {
    for (const char* key : {"description", "metric", "observed", "reference", "relation", "source"}) {
      EXPECT_TRUE(e.contains(key)) << key;
    }
  }
  EXPECT_TRUE(j.at("metrics").at("cache_hit_ratio").is_string());
  EXPECT_TRUE(j.at("metrics").at("cpi").is_number());
  EXPECT_EQ(j.at("metrics").at("per_core").size(), 1u);
  EXPECT_TRUE(j.at("thresholds_used").is_object());
}

TEST(JsonReport, StableWithoutTimestamp) {
  const auto r = run(fixtures::input_for(fixtures::bandwidth_session(19000.0), fixtures::westmere_1s()));
  EXPECT_EQ(render_json_report(r->prepared, r->findings, {false}),
            render_json_report(r->prepared, r->findings, {false}));
  EXPECT_TRUE(nlohmann::json::parse(render_json_report(r->prepared, r->findings, {true})).contains("generated_at"));
}
