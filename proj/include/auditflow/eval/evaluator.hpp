#pragma once

// Pairs produced findings with expert ground truth and computes ranking
// metrics over the pairing.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auditflow/domain.hpp"
#include "auditflow/eval/metrics.hpp"
#include "auditflow/llm/gateway.hpp"

namespace auditflow::eval {

enum class MatchCategory { Exact, Partial, Incorrect, Missed, Spurious };
enum class LocationLevel { ExactLine, Function, Overlap, None };

std::string_view to_string(MatchCategory c);
std::string_view to_string(LocationLevel l);
std::optional<LocationLevel> parse_location_level(std::string_view text);

struct MatchDimensions {
  bool type_match = false;
  double description_similarity = 0.0;
  LocationLevel location_level = LocationLevel::None;
};

// Exact: type match, similarity >= 0.8, exact line or function.
// Partial: type match, similarity >= 0.5, any location; or type mismatch
// with similarity >= 0.8 on the exact line. Otherwise Incorrect.
MatchCategory categorize(const MatchDimensions& dim);

struct MatchResult {
  std::optional<std::string> produced_id;
  std::optional<std::string> gold_id;
  std::optional<int> produced_rank;  // 1-based position in the ranked report
  MatchCategory category = MatchCategory::Missed;
  MatchDimensions dimensions;
  std::string rationale;
};

void to_json(nlohmann::json& j, const MatchResult& m);

struct Assessment {
  MatchDimensions dimensions;
  std::string rationale;
};

class MatchJudge {
 public:
  virtual ~MatchJudge() = default;
  virtual Assessment assess(const Finding& produced, const GroundTruthFinding& gold) = 0;
};

using TextSimilarity = std::function<double(const std::string&, const std::string&)>;

// Jaccard overlap of lowercased word sets.
double lexical_similarity(const std::string& a, const std::string& b);
// Category tag comparison ignoring case and punctuation.
bool same_vuln_type(std::string_view a, std::string_view b);
// Exact line range, then same function, then overlapping lines. Files are
// compared by name when both are set.
LocationLevel locate(const CodeLocation& produced, const CodeLocation& gold);

// Deterministic judge: tag comparison, pluggable description similarity
// (lexical by default), line arithmetic for location.
class RuleJudge : public MatchJudge {
 public:
  explicit RuleJudge(TextSimilarity similarity = lexical_similarity);
  Assessment assess(const Finding& produced, const GroundTruthFinding& gold) override;

 private:
  TextSimilarity similarity_;
};

// Model-graded judge answering with an ```assessment block; one reformat
// retry, then JudgeParseError.
class LlmJudge : public MatchJudge {
 public:
  LlmJudge(llm::Gateway& gateway, std::string model_id);
  Assessment assess(const Finding& produced, const GroundTruthFinding& gold) override;

 private:
  llm::Gateway& gateway_;
  std::string model_id_;
};

std::optional<Assessment> parse_assessment(std::string_view text);

// Greedy one-to-one assignment in rank order: each produced finding claims
// its best unmatched gold candidate when that candidate is Exact or Partial.
// Unclaimed gold become Missed, unmatched produced findings Spurious.
std::vector<MatchResult> pair_findings(const std::vector<Finding>& produced,
                                       const std::vector<GroundTruthFinding>& gold,
                                       MatchJudge& judge);

struct EvalOptions {
  bool strict = false;  // only Exact counts as a true positive
  ApMode ap_mode = ApMode::ListLength;
  std::vector<int> top_ns{1, 5};
};

struct ContractEval {
  std::string contract_id;
  std::vector<MatchResult> matches;
  int produced = 0;
  int gold = 0;
  std::optional<int> first_tp_rank;
  double average_precision = 0.0;
  int tp = 0;
  int fp = 0;
  int missed = 0;
};

struct EvalSummary {
  std::vector<ContractEval> contracts;
  std::map<int, double> top_n;
  double top_max = 0.0;
  double mrr = 0.0;
  double map = 0.0;
  double avg_outputs = 0.0;
  int tp = 0;
  int fp = 0;
  int missed = 0;
  EvalOptions options;
};

void to_json(nlohmann::json& j, const EvalSummary& s);
// Header plus one "all" row and one row per contract.
std::string to_csv(const EvalSummary& s);

bool is_true_positive(MatchCategory c, bool strict);

// Ground truth keyed by contract id. Contracts with gold but no report count
// as fully missed; reports without gold contribute only false positives.
EvalSummary evaluate(const std::vector<AuditReport>& reports,
                     const std::map<std::string, std::vector<GroundTruthFinding>>& gold,
                     MatchJudge& judge, const EvalOptions& options = {});

// {"contract_id": ..., "findings": [...]} or {"contracts": [ ...those... ]}.
std::map<std::string, std::vector<GroundTruthFinding>> parse_ground_truth(const nlohmann::json& doc);

}  // namespace auditflow::eval
