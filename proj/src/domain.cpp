#include "auditflow/domain.hpp"

#include <algorithm>
#include <cctype>

#include "auditflow/errors.hpp"

namespace auditflow {

using nlohmann::json;

int severity_rank(Severity s) { return static_cast<int>(s); }

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Critical: return "Critical";
    case Severity::High: return "High";
    case Severity::Medium: return "Medium";
    case Severity::Low: return "Low";
    case Severity::Informational: return "Informational";
  }
  return "Informational";
}

std::optional<Severity> parse_severity(std::string_view text) {
  std::string lower;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (lower == "critical") return Severity::Critical;
  if (lower == "high") return Severity::High;
  if (lower == "medium") return Severity::Medium;
  if (lower == "low") return Severity::Low;
  if (lower == "informational" || lower == "info") return Severity::Informational;
  return std::nullopt;
}

bool CodeLocation::overlaps(const CodeLocation& other) const {
  if (file != other.file) return false;
  return start_line <= other.end_line && other.start_line <= end_line;
}

bool ranks_before(const Finding& a, const Finding& b) {
  if (a.severity != b.severity) return severity_rank(a.severity) > severity_rank(b.severity);
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return a.finding_id < b.finding_id;
}

std::vector<Finding> rank_findings(std::vector<Finding> findings) {
  std::stable_sort(findings.begin(), findings.end(), ranks_before);
  return findings;
}

int count_lines(std::string_view text) {
  if (text.empty()) return 0;
  int lines = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
  if (text.back() != '\n') ++lines;
  return lines;
}

std::vector<std::string> validate_finding(const Finding& f, std::string_view source) {
  std::vector<std::string> violations;
  if (!(f.confidence >= 0.0 && f.confidence <= 1.0)) {
    violations.emplace_back("confidence out of range");
  }
  if (f.location.start_line < 1) violations.emplace_back("start_line < 1");
  if (f.location.start_line > f.location.end_line) {
    violations.emplace_back("start_line > end_line");
  }
  const int lines = count_lines(source);
  if (f.location.end_line > lines || f.location.start_line > lines) {
    violations.emplace_back("location beyond end of source (" + std::to_string(lines) +
                            " lines)");
  }
  const int rank = severity_rank(f.severity);
  if (rank < 0 || rank > 4) violations.emplace_back("severity not in enum");
  return violations;
}

// --- JSON -----------------------------------------------------------------

void to_json(json& j, Severity s) { j = std::string(to_string(s)); }

void from_json(const json& j, Severity& s) {
  auto parsed = parse_severity(j.get<std::string>());
  if (!parsed) throw SchemaError("unknown severity: " + j.get<std::string>());
  s = *parsed;
}

void to_json(json& j, const CodeLocation& v) {
  j = json{{"file", v.file}, {"start_line", v.start_line}, {"end_line", v.end_line}};
  j["function_name"] = v.function_name ? json(*v.function_name) : json(nullptr);
}

void from_json(const json& j, CodeLocation& v) {
  v.file = j.value("file", std::string{});
  v.start_line = j.at("start_line").get<int>();
  v.end_line = j.at("end_line").get<int>();
  if (j.contains("function_name") && !j["function_name"].is_null()) {
    v.function_name = j["function_name"].get<std::string>();
  } else {
    v.function_name.reset();
  }
}

void to_json(json& j, const SubTask& v) {
  j = json{{"index", v.index},   {"title", v.title},       {"target", v.target},
           {"concern", v.concern}, {"priority", v.priority}};
}

void from_json(const json& j, SubTask& v) {
  v.index = j.at("index").get<int>();
  v.title = j.value("title", std::string{});
  v.target = j.value("target", std::string{});
  v.concern = j.at("concern").get<std::string>();
  v.priority = j.value("priority", 1);
}

void to_json(json& j, const Finding& v) {
  j = json{{"finding_id", v.finding_id},
           {"vuln_type", v.vuln_type},
           {"description", v.description},
           {"location", v.location},
           {"severity", v.severity},
           {"confidence", v.confidence},
           {"evidence", v.evidence},
           {"origin_subtask", v.origin_subtask}};
}

void from_json(const json& j, Finding& v) {
  v.finding_id = j.at("finding_id").get<std::string>();
  v.vuln_type = j.at("vuln_type").get<std::string>();
  v.description = j.value("description", std::string{});
  v.location = j.at("location").get<CodeLocation>();
  v.severity = j.at("severity").get<Severity>();
  v.confidence = j.value("confidence", 0.0);
  v.evidence = j.value("evidence", std::vector<std::string>{});
  v.origin_subtask = j.value("origin_subtask", 0);
}

void to_json(json& j, const GroundTruthFinding& v) {
  j = json{{"finding_id", v.finding_id}, {"vuln_type", v.vuln_type},
           {"description", v.description}, {"location", v.location},
           {"severity", v.severity},       {"evidence", v.evidence},
           {"expert_id", v.expert_id}};
}

void from_json(const json& j, GroundTruthFinding& v) {
  v.finding_id = j.at("finding_id").get<std::string>();
  v.vuln_type = j.at("vuln_type").get<std::string>();
  v.description = j.value("description", std::string{});
  if (!j.contains("location") || !j.contains("severity")) {
    throw SchemaError("ground truth finding " + v.finding_id +
                      " requires severity and location");
  }
  v.location = j.at("location").get<CodeLocation>();
  v.severity = j.at("severity").get<Severity>();
  v.evidence = j.value("evidence", std::vector<std::string>{});
  v.expert_id = j.value("expert_id", std::string{});
}

void to_json(json& j, const RunMetadata& v) {
  j = json{{"model_id", v.model_id},     {"started_at", v.started_at},
           {"finished_at", v.finished_at}, {"step_count", v.step_count},
           {"config_hash", v.config_hash}};
}

void from_json(const json& j, RunMetadata& v) {
  v.model_id = j.value("model_id", std::string{});
  v.started_at = j.value("started_at", std::string{});
  v.finished_at = j.value("finished_at", std::string{});
  v.step_count = j.value("step_count", 0);
  v.config_hash = j.value("config_hash", std::string{});
}

void to_json(json& j, const AuditReport& v) {
  j = json{{"contract_id", v.contract_id},
           {"initial_analysis", v.initial_analysis},
           {"plan_text", v.plan_text},
           {"plan", v.plan},
           {"findings", v.findings},
           {"summary", v.summary},
           {"run_metadata", v.run_metadata}};
}

void from_json(const json& j, AuditReport& v) {
  v.contract_id = j.at("contract_id").get<std::string>();
  v.initial_analysis = j.value("initial_analysis", std::string{});
  v.plan_text = j.value("plan_text", std::string{});
  v.plan = j.value("plan", std::vector<SubTask>{});
  v.findings = j.at("findings").get<std::vector<Finding>>();
  v.summary = j.value("summary", std::string{});
  if (j.contains("run_metadata")) v.run_metadata = j["run_metadata"].get<RunMetadata>();
}

}  // namespace auditflow
