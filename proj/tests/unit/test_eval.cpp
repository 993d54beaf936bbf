#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "auditflow/errors.hpp"
#include "auditflow/eval/evaluator.hpp"
#include "auditflow/llm/mock.hpp"
#include "auditflow/util.hpp"

using namespace auditflow;
using namespace auditflow::eval;

namespace {

Finding produced(const std::string& id, const std::string& type, int start, int end,
                 Severity sev = Severity::High, double conf = 0.9) {
  Finding f;
  f.finding_id = id;
  f.vuln_type = type;
  f.description = type + " issue in the function";
  f.location = CodeLocation{"A.sol", start, end, std::nullopt};
  f.severity = sev;
  f.confidence = conf;
  return f;
}

GroundTruthFinding gold(const std::string& id, const std::string& type, int start, int end) {
  GroundTruthFinding g;
  g.finding_id = id;
  g.vuln_type = type;
  g.description = type + " issue in the function";
  g.location = CodeLocation{"A.sol", start, end, std::nullopt};
  g.severity = Severity::High;
  return g;
}

// Answers from a table keyed by "produced|gold"; unknown pairs are unrelated.
class TableJudge : public MatchJudge {
 public:
  std::map<std::string, MatchDimensions> table;
  Assessment assess(const Finding& p, const GroundTruthFinding& g) override {
    auto it = table.find(p.finding_id + "|" + g.finding_id);
    if (it == table.end()) return {};
    return {it->second, "scripted"};
  }
};

const MatchDimensions kExact{true, 0.9, LocationLevel::ExactLine};
const MatchDimensions kPartial{true, 0.6, LocationLevel::Overlap};

}  // namespace

TEST(Metrics, ReciprocalRank) {
  EXPECT_NEAR(mrr({1, 2, 4}), 0.58333333333, 1e-9);
  EXPECT_DOUBLE_EQ(mrr({1, std::nullopt}), 0.5);
  EXPECT_THROW(mrr({}), EmptyQuerySet);
}

TEST(Metrics, AveragePrecisionModes) {
  EXPECT_NEAR(average_precision({1, 0, 1}), (1.0 + 2.0 / 3.0) / 3.0, 1e-12);
  EXPECT_NEAR(average_precision({1, 0, 1}, ApMode::Standard), (1.0 + 2.0 / 3.0) / 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(average_precision({0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(average_precision({0, 0}, ApMode::Standard), 0.0);
  EXPECT_THROW(average_precision({}), InvalidRequest);
}

TEST(Metrics, TopNCountsGoldWithinCutoff) {
  EXPECT_DOUBLE_EQ(top_n_accuracy({2, 6}, 5), 0.5);
  EXPECT_DOUBLE_EQ(top_n_accuracy({2, 6}, std::nullopt), 1.0);
  EXPECT_DOUBLE_EQ(top_n_accuracy({std::nullopt, 1}, 1), 0.5);
  EXPECT_THROW(top_n_accuracy({}, 1), EmptyQuerySet);
}

TEST(Metrics, TopNMonotoneInN) {
  std::mt19937 rng(17);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::optional<int>> ranks;
    const int n = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < n; ++i) {
      if (rng() % 4 == 0) {
        ranks.push_back(std::nullopt);
      } else {
        ranks.push_back(1 + static_cast<int>(rng() % 12));
      }
    }
    double prev = 0.0;
    for (int cut = 1; cut <= 15; ++cut) {
      const double v = top_n_accuracy(ranks, cut);
      EXPECT_GE(v, prev);
      prev = v;
    }
    EXPECT_LE(prev, top_n_accuracy(ranks, std::nullopt));
  }
}

TEST(Categorize, Rules) {
  EXPECT_EQ(categorize(kExact), MatchCategory::Exact);
  EXPECT_EQ(categorize({true, 0.8, LocationLevel::Function}), MatchCategory::Exact);
  EXPECT_EQ(categorize({true, 0.9, LocationLevel::Overlap}), MatchCategory::Partial);
  EXPECT_EQ(categorize(kPartial), MatchCategory::Partial);
  EXPECT_EQ(categorize({false, 0.85, LocationLevel::ExactLine}), MatchCategory::Partial);
  EXPECT_EQ(categorize({false, 0.85, LocationLevel::Function}), MatchCategory::Incorrect);
  EXPECT_EQ(categorize({true, 0.4, LocationLevel::ExactLine}), MatchCategory::Incorrect);
}

TEST(Locate, Levels) {
  const CodeLocation g{"A.sol", 10, 20, "f"};
  EXPECT_EQ(locate({"A.sol", 10, 20, std::nullopt}, g), LocationLevel::ExactLine);
  EXPECT_EQ(locate({"A.sol", 30, 31, "f"}, g), LocationLevel::Function);
  EXPECT_EQ(locate({"A.sol", 15, 25, std::nullopt}, g), LocationLevel::Overlap);
  EXPECT_EQ(locate({"A.sol", 21, 25, std::nullopt}, g), LocationLevel::None);
  EXPECT_EQ(locate({"B.sol", 10, 20, std::nullopt}, g), LocationLevel::None);
}

TEST(RuleJudgeTest, TypeAndTextComparison) {
  EXPECT_TRUE(same_vuln_type("Access Control", "access-control"));
  EXPECT_FALSE(same_vuln_type("reentrancy", "overflow"));
  EXPECT_DOUBLE_EQ(lexical_similarity("A b c", "c B a"), 1.0);
  EXPECT_DOUBLE_EQ(lexical_similarity("a b", "c d"), 0.0);
  RuleJudge judge;
  const auto a = judge.assess(produced("F1", "reentrancy", 10, 20), gold("G1", "Reentrancy", 10, 20));
  EXPECT_EQ(categorize(a.dimensions), MatchCategory::Exact);
}

TEST(Pairing, ExtraProducedBecomesSpurious) {
  TableJudge judge;
  judge.table["F1|G1"] = kExact;
  const auto matches = pair_findings({produced("F1", "x", 1, 2), produced("F2", "y", 5, 6)},
                                     {gold("G1", "x", 1, 2)}, judge);
  ASSERT_EQ(matches.size(), 2u);
  int exact = 0, spurious = 0;
  for (const auto& m : matches) {
    exact += m.category == MatchCategory::Exact;
    spurious += m.category == MatchCategory::Spurious;
  }
  EXPECT_EQ(exact, 1);
  EXPECT_EQ(spurious, 1);
}

TEST(Pairing, EmptyProducedMissesAllGold) {
  TableJudge judge;
  const auto matches =
      pair_findings({}, {gold("G1", "x", 1, 2), gold("G2", "y", 3, 4), gold("G3", "z", 5, 6)}, judge);
  ASSERT_EQ(matches.size(), 3u);
  for (const auto& m : matches) EXPECT_EQ(m.category, MatchCategory::Missed);
}

TEST(Pairing, OneToOneInRankOrder) {
  TableJudge judge;
  judge.table["F1|G1"] = kPartial;
  judge.table["F2|G1"] = kExact;
  judge.table["F2|G2"] = kPartial;
  const auto matches = pair_findings({produced("F1", "x", 1, 2, Severity::Critical),
                                      produced("F2", "x", 1, 2, Severity::High)},
                                     {gold("G1", "x", 1, 2), gold("G2", "x", 1, 2)}, judge);
  std::map<std::string, std::string> claimed;
  for (const auto& m : matches) {
    if (m.produced_id && m.gold_id) claimed[*m.produced_id] = *m.gold_id;
  }
  EXPECT_EQ(claimed["F1"], "G1");
  EXPECT_EQ(claimed["F2"], "G2");
}

TEST(Evaluate, AggregatesAcrossContracts) {
  TableJudge judge;
  judge.table["F1|G1"] = kExact;
  judge.table["F2|G2"] = kPartial;
  AuditReport a;
  a.contract_id = "A";
  a.findings = {produced("F1", "x", 1, 2, Severity::High), produced("F2", "y", 3, 4, Severity::Low)};
  AuditReport b;
  b.contract_id = "B";
  b.findings = {produced("F9", "z", 1, 2)};
  std::map<std::string, std::vector<GroundTruthFinding>> gt{
      {"A", {gold("G1", "x", 1, 2), gold("G2", "y", 3, 4)}}, {"B", {gold("G3", "z", 9, 9)}}};

  const auto s = evaluate({a, b}, gt, judge);
  EXPECT_EQ(s.tp, 2);
  EXPECT_EQ(s.fp, 1);
  EXPECT_EQ(s.missed, 1);
  EXPECT_NEAR(s.mrr, 0.5, 1e-12);
  EXPECT_NEAR(s.map, (1.0 + 0.0) / 2.0, 1e-12);
  EXPECT_NEAR(s.top_n.at(1), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.top_max, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.avg_outputs, 1.5);

  EvalOptions strict;
  strict.strict = true;
  const auto st = evaluate({a, b}, gt, judge, strict);
  EXPECT_EQ(st.tp, 1);
  EXPECT_NEAR(st.top_max, 1.0 / 3.0, 1e-12);
}

TEST(Evaluate, MissingReportCountsAsMissed) {
  TableJudge judge;
  const auto s = evaluate({}, {{"A", {gold("G1", "x", 1, 2)}}}, judge);
  EXPECT_EQ(s.missed, 1);
  EXPECT_DOUBLE_EQ(s.mrr, 0.0);
  EXPECT_THROW(evaluate({}, {}, judge), EmptyQuerySet);
}

TEST(Evaluate, CsvLayout) {
  TableJudge judge;
  judge.table["F1|G1"] = kExact;
  AuditReport a;
  a.contract_id = "A";
  a.findings = {produced("F1", "x", 1, 2)};
  const auto csv = to_csv(evaluate({a}, {{"A", {gold("G1", "x", 1, 2)}}}, judge));
  const auto lines = split_lines(csv);
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(lines[0], "scope,top_1,top_5,top_max,mrr,map,avg_outputs,tp,fp,missed");
  EXPECT_EQ(lines[1].rfind("all,", 0), 0u);
  EXPECT_EQ(lines[2].rfind("A,", 0), 0u);
}

TEST(GroundTruth, ParsesSingleAndMulti) {
  const auto doc = nlohmann::json::parse(
      read_file(std::filesystem::path(AUDITFLOW_FIXTURES_DIR) / "gold_vault.json"));
  const auto one = parse_ground_truth(doc);
  ASSERT_EQ(one.at("Vault").size(), 3u);
  EXPECT_EQ(one.at("Vault")[1].severity, Severity::Critical);
  const auto many = parse_ground_truth({{"contracts", {doc}}});
  EXPECT_EQ(many.at("Vault").size(), 3u);
  EXPECT_THROW(parse_ground_truth(nlohmann::json::array()), SchemaError);
}

TEST(LlmJudgeTest, ParsesAssessmentAndRetries) {
  auto parsed = parse_assessment(
      "```assessment\ntype_match: yes\ndescription_similarity: 0.7\nlocation: function\n```");
  ASSERT_TRUE(parsed);
  EXPECT_TRUE(parsed->dimensions.type_match);
  EXPECT_EQ(parsed->dimensions.location_level, LocationLevel::Function);
  EXPECT_FALSE(parse_assessment("type_match: maybe"));

  auto mock = std::make_shared<llm::MockProvider>();
  mock->on_match(".*", "unparseable");
  llm::Gateway gw(mock, nullptr);
  LlmJudge judge(gw, "judge");
  EXPECT_THROW(judge.assess(produced("F1", "x", 1, 2), gold("G1", "x", 1, 2)), JudgeParseError);
  EXPECT_EQ(mock->call_count(), 2);
}
