#pragma once

// Application configuration (JSON). Relative paths resolve against the
// directory of the config file. Secrets never live in the file; the provider
// block names the environment variable holding the API key.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auditflow/eval/evaluator.hpp"
#include "auditflow/kb/chunker.hpp"
#include "auditflow/llm/gateway.hpp"
#include "auditflow/optimizer/optimizer.hpp"
#include "auditflow/workflow/engine.hpp"

namespace auditflow::app {

struct ProviderConfig {
  std::string kind = "mock";  // "mock" or "openai"
  std::string model_id = "mock-auditor";
  std::string judge_model_id;  // empty: same as model_id
  std::string base_url;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string embedding_model = "text-embedding-3-small";
  std::optional<std::filesystem::path> mock_script;
  std::size_t embedding_dim = 64;  // mock embedder only
  int timeout_seconds = 120;
  bool logprobs = true;

  const std::string& judge_model() const { return judge_model_id.empty() ? model_id : judge_model_id; }
};

struct GatewayConfig {
  int max_attempts = 3;
  int initial_backoff_ms = 1000;
  std::optional<long> max_total_tokens;
  int min_request_interval_ms = 0;
};

struct KbConfig {
  std::optional<std::filesystem::path> index_dir;
  std::string chunker = "fixed";  // "fixed" or "paragraph"
  kb::ChunkPolicy chunk_policy;
};

struct EvaluatorConfig {
  std::string judge = "llm";  // "llm" or "rule"
  bool strict = false;
  eval::ApMode ap_mode = eval::ApMode::ListLength;
  std::vector<int> top_ns{1, 5};
};

struct AppConfig {
  ProviderConfig provider;
  GatewayConfig gateway;
  workflow::WorkflowConfig workflow;
  optimizer::OptimizerConfig optimizer;
  KbConfig kb;
  EvaluatorConfig evaluator;
  std::optional<std::filesystem::path> cache_dir;
  std::filesystem::path output_dir = "runs";
  std::uint64_t rng_seed = 42;

  // ConfigError naming the offending field.
  void validate() const;
};

// ConfigError for unreadable or malformed files, a missing provider block,
// mistyped fields or violated invariants.
AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const AppConfig& config);

// Providers wired according to the provider block.
struct Providers {
  std::shared_ptr<llm::CompletionProvider> completions;
  std::shared_ptr<llm::EmbeddingProvider> embeddings;
};
Providers make_providers(const AppConfig& config);
std::unique_ptr<llm::Gateway> make_gateway(const AppConfig& config);

}  // namespace auditflow::app
