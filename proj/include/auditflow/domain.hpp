#pragma once

// Shared vocabulary of the audit pipeline: contracts, plans, findings,
// reports and expert ground truth. All types are plain values.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace auditflow {

enum class Severity { Informational = 0, Low = 1, Medium = 2, High = 3, Critical = 4 };

inline constexpr Severity kAllSeverities[] = {Severity::Critical, Severity::High,
                                              Severity::Medium, Severity::Low,
                                              Severity::Informational};

int severity_rank(Severity s);
std::string_view to_string(Severity s);
// Case-insensitive; accepts "info" for Informational.
std::optional<Severity> parse_severity(std::string_view text);

struct CodeLocation {
  std::string file;
  int start_line = 1;
  int end_line = 1;
  std::optional<std::string> function_name;

  bool overlaps(const CodeLocation& other) const;
  friend bool operator==(const CodeLocation&, const CodeLocation&) = default;
};

struct ContractInput {
  std::string contract_id;
  std::string source_code;
  std::vector<std::string> context_docs;
  std::optional<std::string> static_report_path;
};

struct SubTask {
  int index = 1;
  std::string title;
  std::string target;
  std::string concern;
  int priority = 1;
  friend bool operator==(const SubTask&, const SubTask&) = default;
};

struct Finding {
  std::string finding_id;
  std::string vuln_type;
  std::string description;
  CodeLocation location;
  Severity severity = Severity::Medium;
  double confidence = 0.0;
  std::vector<std::string> evidence;
  int origin_subtask = 0;
  friend bool operator==(const Finding&, const Finding&) = default;
};

struct GroundTruthFinding {
  std::string finding_id;
  std::string vuln_type;
  std::string description;
  CodeLocation location;
  Severity severity = Severity::Medium;
  std::vector<std::string> evidence;
  std::string expert_id;
  friend bool operator==(const GroundTruthFinding&, const GroundTruthFinding&) = default;
};

struct RunMetadata {
  std::string model_id;
  std::string started_at;
  std::string finished_at;
  int step_count = 0;
  std::string config_hash;
  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct AuditReport {
  std::string contract_id;
  std::string initial_analysis;  // s1
  std::string plan_text;         // s2 as produced by the planner
  std::vector<SubTask> plan;
  std::vector<Finding> findings;  // synthesized and ranked
  std::string summary;
  RunMetadata run_metadata;
  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

// Canonical order: severity desc, confidence desc, finding_id asc (stable).
std::vector<Finding> rank_findings(std::vector<Finding> findings);
bool ranks_before(const Finding& a, const Finding& b);

// Violations of the Finding invariants against `source`; empty when valid.
std::vector<std::string> validate_finding(const Finding& f, std::string_view source);

int count_lines(std::string_view text);

void to_json(nlohmann::json& j, Severity s);
void from_json(const nlohmann::json& j, Severity& s);
void to_json(nlohmann::json& j, const CodeLocation& v);
void from_json(const nlohmann::json& j, CodeLocation& v);
void to_json(nlohmann::json& j, const SubTask& v);
void from_json(const nlohmann::json& j, SubTask& v);
void to_json(nlohmann::json& j, const Finding& v);
void from_json(const nlohmann::json& j, Finding& v);
void to_json(nlohmann::json& j, const GroundTruthFinding& v);
void from_json(const nlohmann::json& j, GroundTruthFinding& v);
void to_json(nlohmann::json& j, const RunMetadata& v);
void from_json(const nlohmann::json& j, RunMetadata& v);
void to_json(nlohmann::json& j, const AuditReport& v);
void from_json(const nlohmann::json& j, AuditReport& v);

}  // namespace auditflow
