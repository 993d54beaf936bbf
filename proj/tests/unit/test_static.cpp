#include <gtest/gtest.h>

#include <filesystem>

#include "auditflow/errors.hpp"
#include "auditflow/static_ingest.hpp"

using namespace auditflow;
using nlohmann::json;

namespace {

const std::filesystem::path kFixtures = AUDITFLOW_FIXTURES_DIR;

json detector(const std::string& check, const std::string& impact, int line) {
  return {{"check", check},
          {"impact", impact},
          {"confidence", "High"},
          {"description", check + " at line " + std::to_string(line)},
          {"elements",
           {{{"type", "node"},
             {"name", "n"},
             {"source_mapping", {{"filename_relative", "A.sol"}, {"lines", {line}}}}}}}};
}

}  // namespace

TEST(StaticReport, ParsesFixtureWithOneWarning) {
  const auto report = load_static_report(kFixtures / "slither_vault.json");
  ASSERT_EQ(report.findings.size(), 2u);
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_NE(report.warnings[0].find("impact"), std::string::npos);
  const auto& f = report.findings[0];
  EXPECT_EQ(f.detector, "reentrancy-eth");
  EXPECT_EQ(f.impact, StaticImpact::High);
  ASSERT_EQ(f.locations.size(), 2u);
  EXPECT_EQ(f.locations[0].start_line, 25);
  EXPECT_EQ(f.locations[0].end_line, 31);
  EXPECT_EQ(f.locations[0].function_name, "withdraw");
}

TEST(StaticReport, HintsOrderByImpactThenDetector) {
  const json dets = {detector("b-low", "Low", 3), detector("z-high", "High", 1),
                     detector("a-high", "High", 2), detector("m-med", "Medium", 4)};
  const auto report = parse_static_report({{"results", {{"detectors", dets}}}});
  const auto hints = to_hints(report.findings);
  const auto a = hints.find("a-high");
  const auto z = hints.find("z-high");
  const auto m = hints.find("m-med");
  const auto b = hints.find("b-low");
  EXPECT_LT(a, z);
  EXPECT_LT(z, m);
  EXPECT_LT(m, b);
  EXPECT_EQ(hints, to_hints(report.findings));
}

TEST(StaticReport, CapsAndCountsOmitted) {
  json dets = json::array();
  for (int i = 0; i < 30; ++i) dets.push_back(detector("d" + std::to_string(100 + i), "Medium", i + 1));
  const auto report = parse_static_report({{"results", {{"detectors", dets}}}});
  ASSERT_EQ(report.findings.size(), 30u);
  const auto hints = to_hints(report.findings);
  EXPECT_NE(hints.find("(10 omitted)"), std::string::npos);
  EXPECT_NE(hints.find("d119"), std::string::npos);
  EXPECT_EQ(hints.find("d120"), std::string::npos);
}

TEST(StaticReport, RespectsCharacterBudget) {
  json dets = json::array();
  for (int i = 0; i < 20; ++i) dets.push_back(detector("detector-" + std::to_string(i), "High", i + 1));
  const auto report = parse_static_report({{"results", {{"detectors", dets}}}});
  HintOptions opts;
  opts.max_chars = 400;
  const auto hints = to_hints(report.findings, opts);
  EXPECT_LE(hints.size(), 400u);
  EXPECT_NE(hints.find("omitted"), std::string::npos);
}

TEST(StaticReport, EmptyAndMalformedInputs) {
  EXPECT_TRUE(parse_static_report({{"success", true}, {"results", json::object()}}).findings.empty());
  EXPECT_NE(to_hints({}).find("no static findings"), std::string::npos);
  EXPECT_THROW(parse_static_report(json::array()), FormatError);
  EXPECT_THROW(parse_static_report({{"results", {{"detectors", 3}}}}), FormatError);
  EXPECT_THROW(parse_static_report({{"results", json::object()}}), FormatError);
  EXPECT_EQ(parse_static_impact(" high "), StaticImpact::High);
  EXPECT_FALSE(parse_static_impact("severe"));
}
