#include "auditflow/workflow/prompts.hpp"

#include <cstdio>

#include "auditflow/util.hpp"

namespace auditflow::workflow {

PromptSet PromptSet::defaults() {
  PromptSet p;
  p.analysis =
      "You are an expert smart contract security auditor. Read the contract and describe its "
      "business logic: the roles and their privileges, how assets enter and leave, every "
      "external call, state variables that guard invariants, and the trust assumptions. Refer "
      "to functions and variables by name.";
  p.planning =
      "You are leading a smart contract security audit. From the analysis and the code, draft a "
      "prioritized audit plan of narrowly scoped checks. Each check names one function, "
      "variable or aspect and one vulnerability category. Put the most likely and most severe "
      "issues first.";
  p.review =
      "You are a smart contract security auditor performing one focused check. Examine only the "
      "target and concern of the sub-task. Describe any vulnerability you find with the exact "
      "lines, the vulnerable code path and how it could be exploited. If the code is safe for "
      "this concern, say so.";
  p.calibration =
      "You are a senior auditor validating a candidate {concern} finding. Re-read the code and "
      "keep only assertions the code supports. Rate your confidence that the finding is a real, "
      "exploitable issue between 0 and 1 and assign a severity.";
  p.synthesis =
      "You are finalizing a smart contract audit report. Correlate the validated findings, "
      "consider shared root causes and dependencies, and assign each finding its final "
      "severity. Then summarize the overall security posture in two or three sentences.";
  return p;
}

void to_json(nlohmann::json& j, const PromptSet& p) {
  j = nlohmann::json{{"analysis", p.analysis},
                     {"planning", p.planning},
                     {"review", p.review},
                     {"calibration", p.calibration},
                     {"synthesis", p.synthesis}};
}

void from_json(const nlohmann::json& j, PromptSet& p) {
  p = PromptSet::defaults();
  if (j.contains("analysis")) p.analysis = j["analysis"].get<std::string>();
  if (j.contains("planning")) p.planning = j["planning"].get<std::string>();
  if (j.contains("review")) p.review = j["review"].get<std::string>();
  if (j.contains("calibration")) p.calibration = j["calibration"].get<std::string>();
  if (j.contains("synthesis")) p.synthesis = j["synthesis"].get<std::string>();
}

std::string number_lines(std::string_view source) {
  std::string out;
  int n = 0;
  for (const auto& line : split_lines(source)) {
    char prefix[16];
    std::snprintf(prefix, sizeof(prefix), "%4d | ", ++n);
    out += prefix;
    out += line;
    out.push_back('\n');
  }
  return out;
}

std::string analysis_user(const ContractInput& contract, const std::optional<std::string>& hints) {
  std::string out = "Contract " + contract.contract_id + ":\n```solidity\n" +
                    contract.source_code;
  if (!contract.source_code.empty() && contract.source_code.back() != '\n') out.push_back('\n');
  out += "```\n";
  if (!contract.context_docs.empty()) {
    out += "\nContext documents:\n";
    for (std::size_t i = 0; i < contract.context_docs.size(); ++i) {
      out += "[" + std::to_string(i + 1) + "] " + trim(contract.context_docs[i]) + "\n";
    }
  }
  if (hints && !trim(*hints).empty()) {
    out += "\nAdvisory static analysis results (may contain false positives):\n" + *hints;
    if (out.back() != '\n') out.push_back('\n');
  }
  return out;
}

std::string planning_user(const std::string& analysis, const ContractInput& contract) {
  return "Initial analysis:\n" + trim(analysis) + "\n\nContract " + contract.contract_id +
         " (line-numbered):\n" + number_lines(contract.source_code) +
         "\nAnswer with the plan as a fenced block, one entry per check:\n"
         "```subtasks\n"
         "- index: 1\n"
         "  title: <short title>\n"
         "  target: <function, variable or aspect>\n"
         "  concern: <vulnerability category, e.g. reentrancy>\n"
         "  priority: <1 = highest>\n"
         "```\n";
}

std::string review_user(const SubTask& task, const ContractInput& contract,
                        const std::string& analysis) {
  return "Sub-task " + std::to_string(task.index) + ": " + task.title + "\nTarget: " +
         task.target + "\nConcern: " + task.concern + "\n\nInitial analysis:\n" +
         trim(analysis) + "\n\nContract " + contract.contract_id + " (line-numbered):\n" +
         number_lines(contract.source_code);
}

std::string calibration_system(const PromptSet& prompts, const SubTask& task) {
  std::string out = prompts.calibration;
  const std::string placeholder = "{concern}";
  for (auto pos = out.find(placeholder); pos != std::string::npos;
       pos = out.find(placeholder, pos + task.concern.size())) {
    out.replace(pos, placeholder.size(), task.concern);
  }
  return out;
}

std::string calibration_user(const SubTask& task, const std::string& review,
                             const ContractInput& contract,
                             const std::vector<kb::RetrievalHit>& references) {
  std::string out = "Sub-task " + std::to_string(task.index) + ": " + task.title +
                    "\nTarget: " + task.target + "\nConcern: " + task.concern +
                    "\n\nCandidate finding under review:\n" + trim(review) + "\n\nContract " +
                    contract.contract_id + " (line-numbered):\n" +
                    number_lines(contract.source_code);
  if (!references.empty()) {
    out += "\nReference material:\n";
    for (std::size_t i = 0; i < references.size(); ++i) {
      const auto& c = *references[i].chunk;
      out += "[" + std::to_string(i + 1) + "] " + c.title + " (" + c.source_type + ", " +
             c.source_url + ")\n" + trim(c.content) + "\n";
    }
  }
  out +=
      "\nAnswer with one fenced block:\n"
      "```finding\n"
      "verdict: confirmed | rejected\n"
      "vuln_type: <category>\n"
      "description: <what is wrong and why it is exploitable>\n"
      "severity: Critical | High | Medium | Low | Informational\n"
      "confidence: <0 to 1>\n"
      "start_line: <n>\n"
      "end_line: <n>\n"
      "function: <name>\n"
      "evidence: <quoted code or reference>\n"
      "```\n";
  return out;
}

std::string synthesis_user(const std::vector<Finding>& findings) {
  std::string out = "Validated findings:\n";
  for (const auto& f : findings) {
    out += "- finding_id: " + f.finding_id + "\n  vuln_type: " + f.vuln_type +
           "\n  severity: " + std::string(to_string(f.severity)) + "\n  confidence: " +
           nlohmann::json(f.confidence).dump() + "\n  location: " + f.location.file + ":" +
           std::to_string(f.location.start_line) + "-" + std::to_string(f.location.end_line);
    if (f.location.function_name) out += " (" + *f.location.function_name + ")";
    out += "\n  description: " + collapse_whitespace(f.description) + "\n";
  }
  out +=
      "\nAnswer with the final severities and a summary:\n"
      "```synthesis\n"
      "- finding_id: <id>\n"
      "  severity: Critical | High | Medium | Low | Informational\n"
      "```\n"
      "```summary\n"
      "<two or three sentences>\n"
      "```\n";
  return out;
}

std::string reformat_request(const std::string& previous, const std::string& problem,
                             const std::string& block_name) {
  return "\nYour previous answer could not be used (" + problem + "):\n" + previous +
         "\nReformat your answer as the fenced " + block_name +
         " block exactly as specified above.\n";
}

}  // namespace auditflow::workflow
