#pragma once

// Staged audit pipeline: initial analysis, planning, per-sub-task review and
// calibration behind a confidence gate, synthesis, report assembly.

#include <atomic>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auditflow/domain.hpp"
#include "auditflow/kb/index.hpp"
#include "auditflow/kb/query.hpp"
#include "auditflow/llm/gateway.hpp"
#include "auditflow/static_ingest.hpp"
#include "auditflow/workflow/prompts.hpp"

namespace auditflow::workflow {

enum class StageId { A1, A2, A3, A4, A5 };
std::string_view to_string(StageId s);

struct StageRecord {
  StageId stage = StageId::A1;
  std::optional<int> subtask;  // A3 only
  std::string input_digest;
  nlohmann::json output;
  int llm_steps = 0;
  std::chrono::milliseconds elapsed{0};
};

void to_json(nlohmann::json& j, const StageRecord& r);

struct WorkflowConfig {
  double threshold_confidence = 0.7;
  PromptSet prompts = PromptSet::defaults();
  bool use_static = false;
  bool use_rag = false;
  int retrieval_k = 5;
  std::string model_id = "mock";
  double temperature = 0.0;
  int max_tokens = 2048;
  // 1 runs sub-tasks sequentially in plan order.
  int parallel_workers = 1;
  HintOptions hints;
  kb::QueryOptions query;

  // ConfigError on out-of-range values.
  void validate() const;
  std::string digest() const;
};

// Sub-tasks from the fenced "subtasks" block, renumbered 1..n in stated index
// order and returned by priority then index. Entries without index, target
// or concern are dropped; PlanParseError when none remain, on duplicate
// indexes or when the block is missing.
std::vector<SubTask> extract_subtasks(const std::string& plan_text);

// Outcome of parsing a calibration answer.
struct Calibration {
  bool rejected = false;
  double confidence = 0.0;
  std::optional<Finding> finding;
};

// nullopt with `problem` set when the answer is unusable.
std::optional<Calibration> parse_calibration(const std::string& text, const SubTask& task,
                                             const ContractInput& contract,
                                             std::string* problem = nullptr);

// Same vuln_type, same file and overlapping lines collapse into the
// higher-ranked finding: union of lines, concatenated evidence, maximum
// severity and confidence.
std::vector<Finding> merge_duplicates(std::vector<Finding> findings);

struct AnalysisResult {
  std::string text;
  int llm_steps = 0;
};

struct PlanResult {
  std::string plan_text;
  std::vector<SubTask> tasks;
  int llm_steps = 0;
};

struct SubtaskResult {
  std::optional<Finding> finding;  // set iff it passed the gate
  std::string review;
  std::string calibration;
  double confidence = 0.0;
  bool rejected = false;
  std::vector<std::string> retrieved;  // chunk ids
  int llm_steps = 0;
};

struct SynthesisResult {
  std::string synthesis_text;
  std::string summary;
  std::vector<Finding> findings;  // merged, revised, ranked
  int llm_steps = 0;
};

// Everything recorded so far; still populated when run_audit throws.
struct RunTrace {
  std::vector<StageRecord> records;
  AuditReport partial;
};

class AuditEngine {
 public:
  AuditEngine(llm::Gateway& gateway, WorkflowConfig config,
              const kb::KnowledgeIndex* index = nullptr);

  AnalysisResult stage_a1(const ContractInput& contract, const std::optional<std::string>& hints);
  PlanResult stage_a2(const std::string& analysis, const ContractInput& contract);
  SubtaskResult execute_subtask(const SubTask& task, const ContractInput& contract,
                                const std::string& analysis);
  SynthesisResult stage_a4(std::vector<Finding> findings);

  AuditReport run_audit(const ContractInput& contract, RunTrace* trace = nullptr);

  const WorkflowConfig& config() const { return config_; }

 private:
  llm::CompletionRequest request(std::string system, std::string user) const;
  llm::Completion ask(const llm::CompletionRequest& req, int& steps);
  std::optional<std::string> static_hints(const ContractInput& contract) const;

  llm::Gateway& gateway_;
  WorkflowConfig config_;
  const kb::KnowledgeIndex* index_;
};

// Default file name findings are attributed to: the contract id, with ".sol"
// appended when it carries no extension.
std::string source_file_name(const ContractInput& contract);

}  // namespace auditflow::workflow
