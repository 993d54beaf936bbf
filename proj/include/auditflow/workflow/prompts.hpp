#pragma once

// Prompt assembly for the audit stages. Stage instructions are the
// replaceable part (the optimizer tunes the analysis and planning ones); the
// answer-format sections appended to user prompts are fixed because the
// parsers depend on them.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auditflow/domain.hpp"
#include "auditflow/kb/index.hpp"

namespace auditflow::workflow {

struct PromptSet {
  std::string analysis;     // A1
  std::string planning;     // A2
  std::string review;       // A3 review
  std::string calibration;  // A3 calibration; "{concern}" is substituted
  std::string synthesis;    // A4

  static PromptSet defaults();
};

void to_json(nlohmann::json& j, const PromptSet& p);
// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, PromptSet& p);

// "   7 | code" per line.
std::string number_lines(std::string_view source);

std::string analysis_user(const ContractInput& contract, const std::optional<std::string>& hints);
std::string planning_user(const std::string& analysis, const ContractInput& contract);
std::string review_user(const SubTask& task, const ContractInput& contract,
                        const std::string& analysis);
std::string calibration_system(const PromptSet& prompts, const SubTask& task);
std::string calibration_user(const SubTask& task, const std::string& review,
                             const ContractInput& contract,
                             const std::vector<kb::RetrievalHit>& references);
std::string synthesis_user(const std::vector<Finding>& findings);

// Appended to a user prompt when the previous answer could not be parsed.
std::string reformat_request(const std::string& previous, const std::string& problem,
                             const std::string& block_name);

}  // namespace auditflow::workflow
