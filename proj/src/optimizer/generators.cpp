#include "auditflow/blocks.hpp"
#include "auditflow/errors.hpp"
#include "auditflow/optimizer/optimizer.hpp"
#include "auditflow/util.hpp"

namespace auditflow::optimizer {

namespace {

constexpr const char* kMutationSystem =
    "You improve instructions given to a language model that audits smart contracts. Rewrite "
    "the instruction below into one new variant by paraphrasing it, substituting keywords or "
    "restructuring it. Keep its purpose. Reply with the new instruction text only.";

constexpr const char* kGenerationSystem =
    "You write instructions for a language model that audits smart contracts. Write one new "
    "instruction for the task described below. Reply with the instruction text only.";

constexpr int kAttempts = 2;

}  // namespace

std::string clean_instruction(const std::string& reply) {
  const auto blocks = find_fenced_blocks(reply);
  if (!blocks.empty() && !trim(blocks.front().body).empty()) return trim(blocks.front().body);
  return trim(reply);
}

LlmMutator::LlmMutator(llm::Gateway& gateway, std::string model_id, int max_tokens)
    : gateway_(gateway), model_id_(std::move(model_id)), max_tokens_(max_tokens) {}

std::string LlmMutator::mutate(const std::string& text, double tau, int variant) {
  llm::CompletionRequest req;
  req.model_id = model_id_;
  req.temperature = tau;
  req.max_tokens = max_tokens_;
  req.system_prompt = kMutationSystem;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    req.user_prompt = "Instruction:\n" + text + "\n\nVariant: " + std::to_string(variant) +
                      (attempt ? "." + std::to_string(attempt) : "") + "\n";
    auto out = clean_instruction(gateway_.cached_complete(req).text);
    if (!out.empty()) return out;
  }
  throw GenerationFailed("mutation returned no text");
}

LlmGenerator::LlmGenerator(llm::Gateway& gateway, std::string model_id,
                           std::string task_description, int max_tokens)
    : gateway_(gateway),
      model_id_(std::move(model_id)),
      task_description_(std::move(task_description)),
      max_tokens_(max_tokens) {}

std::string LlmGenerator::generate(double tau, int variant) {
  llm::CompletionRequest req;
  req.model_id = model_id_;
  req.temperature = tau;
  req.max_tokens = max_tokens_;
  req.system_prompt = kGenerationSystem;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    req.user_prompt = "Task:\n" + task_description_ + "\n\nCandidate: " + std::to_string(variant) +
                      (attempt ? "." + std::to_string(attempt) : "") + "\n";
    auto out = clean_instruction(gateway_.cached_complete(req).text);
    if (!out.empty()) return out;
  }
  throw GenerationFailed("meta-prompt generation returned no text");
}

}  // namespace auditflow::optimizer
