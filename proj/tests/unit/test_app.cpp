#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "auditflow/app/artifacts.hpp"
#include "auditflow/app/cli.hpp"
#include "auditflow/app/config.hpp"
#include "auditflow/app/render.hpp"
#include "auditflow/errors.hpp"
#include "auditflow/util.hpp"

using namespace auditflow;
using namespace auditflow::app;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtures = AUDITFLOW_FIXTURES_DIR;

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() /
           ("auditflow-app-" + name + "-" + std::to_string(std::random_device{}()));
  fs::create_directories(p);
  return p;
}

Finding finding(const std::string& id, Severity sev) {
  Finding f;
  f.finding_id = id;
  f.vuln_type = "type " + id;
  f.description = "description " + id;
  f.location = CodeLocation{"A.sol", 1, 2, std::nullopt};
  f.severity = sev;
  f.confidence = 0.8;
  return f;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(AppConfig, DefaultsFillMissingBlocks) {
  const auto c = parse_config({{"provider", {{"kind", "mock"}}}, {"optimizer", json::object()}});
  EXPECT_EQ(c.optimizer.population_size, 20);
  EXPECT_EQ(c.optimizer.elite_count, 10);
  EXPECT_EQ(c.optimizer.max_generations, 10);
  EXPECT_DOUBLE_EQ(c.optimizer.alpha, 0.3);
  EXPECT_DOUBLE_EQ(c.optimizer.lambda, 0.01);
  EXPECT_DOUBLE_EQ(c.workflow.threshold_confidence, 0.7);
  EXPECT_EQ(c.gateway.max_attempts, 3);
  EXPECT_EQ(c.gateway.initial_backoff_ms, 1000);
}

TEST(AppConfig, ErrorsNameTheField) {
  EXPECT_THROW(parse_config(json::object()), ConfigError);
  try {
    parse_config({{"provider", {{"kind", "mock"}}}, {"workflow", {{"threshold_confidence", "high"}}}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("threshold_confidence"), std::string::npos);
  }
  EXPECT_THROW(parse_config({{"provider", {{"kind", "carrier-pigeon"}}}}), ConfigError);
  EXPECT_THROW(load_config(kFixtures / "does-not-exist.json"), ConfigError);
}

TEST(AppConfig, ResolvesRelativePaths) {
  const auto c = load_config(kFixtures / "config_vault.json");
  ASSERT_TRUE(c.provider.mock_script);
  EXPECT_EQ(*c.provider.mock_script, kFixtures / "mock_vault.json");
  EXPECT_EQ(c.kb.chunk_policy.size, 64u);
  const auto round = parse_config(to_json(c));
  EXPECT_EQ(round.optimizer.population_size, c.optimizer.population_size);
}

TEST(Render, SeverityGroupsMostSevereFirst) {
  AuditReport r;
  r.contract_id = "A";
  r.summary = "Summary text.";
  r.findings = {finding("F2", Severity::High), finding("F1", Severity::Low)};
  const auto md = render_report(r);
  const auto high = md.find("High");
  const auto low = md.find("Low");
  ASSERT_NE(high, std::string::npos);
  ASSERT_NE(low, std::string::npos);
  EXPECT_LT(high, low);
  EXPECT_NE(md.find("Summary text."), std::string::npos);
  EXPECT_EQ(md, render_report(r));
}

TEST(Artifacts, RunDirectoryRoundTrip) {
  const auto dir = temp_dir("artifacts");
  const auto run = create_run_dir(dir, "A", "20260101T000000Z");
  const auto again = create_run_dir(dir, "A", "20260101T000000Z");
  EXPECT_NE(run, again);
  AuditReport r;
  r.contract_id = "A";
  r.findings = {finding("F1", Severity::Medium)};
  workflow::RunTrace trace;
  trace.records.push_back({workflow::StageId::A1, std::nullopt, "d", json{{"analysis", "x"}}, 1, {}});
  write_run(run, json{{"k", 1}}, trace, r);
  for (const char* f : {"config.json", "stages.jsonl", "report.json", "report.md"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  EXPECT_EQ(load_report(run / "report.json"), r);
  EXPECT_EQ(split_lines(read_file(run / "stages.jsonl")).size(), 1u);
  EXPECT_EQ(find_reports(dir).size(), 1u);

  write_partial_run(again, json::object(), trace, "boom");
  EXPECT_EQ(read_file(again / "error.txt").find("boom") != std::string::npos, true);
  EXPECT_THROW(load_report(again / "stages.jsonl"), SchemaError);
  fs::remove_all(dir);
}

TEST(Samples, LoadsDirectoryPairs) {
  const auto train = load_samples(kFixtures / "optimize" / "train");
  EXPECT_EQ(train.size(), 2u);
  EXPECT_FALSE(train[0].expected_components.all_empty());
  EXPECT_FALSE(default_seeds().empty());
  EXPECT_GE(load_seeds(kFixtures / "optimize" / "seeds.txt").size(), 1u);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"audit"}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  const auto dir = temp_dir("cli-missing");
  const auto r = cli({"-c", (kFixtures / "config_vault.json").string(), "-o", dir.string(),
                      "evaluate", (dir / "nothing.json").string(), (dir / "gold.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
  fs::remove_all(dir);
}

TEST(Cli, AuditThenEvaluate) {
  const auto dir = temp_dir("cli-audit");
  const std::string cfg = (kFixtures / "config_vault.json").string();
  const auto audit = cli({"-c", cfg, "-o", dir.string(), "audit",
                          (kFixtures / "contracts" / "Vault.sol").string()});
  ASSERT_EQ(audit.code, 0) << audit.err;
  const auto reports = find_reports(dir);
  ASSERT_EQ(reports.size(), 1u);
  const auto report = load_report(reports[0]);
  EXPECT_EQ(report.contract_id, "Vault");
  EXPECT_EQ(report.findings.size(), 2u);

  const auto eval = cli({"-c", cfg, "-o", dir.string(), "evaluate", reports[0].string(),
                         (kFixtures / "gold_vault.json").string(), "--out", (dir / "eval").string()});
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto summary = json::parse(read_file(dir / "eval" / "eval.json"));
  EXPECT_DOUBLE_EQ(summary["summary"]["mrr"].get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(dir / "eval" / "eval.csv"));
  fs::remove_all(dir);
}

TEST(Cli, KbIngestAndQuery) {
  const auto dir = temp_dir("cli-kb");
  const std::string cfg = (kFixtures / "config_vault.json").string();
  const auto index = (dir / "index").string();
  const auto ingest = cli({"-c", cfg, "kb", "ingest", (kFixtures / "kb_docs").string(), "--index", index});
  ASSERT_EQ(ingest.code, 0) << ingest.err;
  const auto query = cli({"-c", cfg, "kb", "query", "reentrancy withdraw", "-k", "2", "--index", index});
  ASSERT_EQ(query.code, 0) << query.err;
  const auto hits = json::parse(query.out)["results"];
  ASSERT_TRUE(hits.is_array());
  EXPECT_LE(hits.size(), 2u);
  fs::remove_all(dir);
}
