#pragma once

#include <chrono>
#include <string>

#include "auditflow/llm/types.hpp"

namespace auditflow::llm {

struct HttpProviderOptions {
  // Scheme, host and optional port, e.g. "https://api.openai.com".
  std::string base_url;
  std::string api_key;
  std::string chat_path = "/v1/chat/completions";
  std::string embeddings_path = "/v1/embeddings";
  std::string embedding_model;
  std::chrono::seconds timeout{120};
  bool logprobs = true;
};

// Chat-completions and embeddings over the OpenAI-compatible wire format.
// HTTP 429 and 5xx are reported as transient ProviderErrors so the gateway
// retries them; 4xx is terminal.
class HttpProvider : public CompletionProvider, public EmbeddingProvider {
 public:
  explicit HttpProvider(HttpProviderOptions options);

  std::string name() const override { return "http:" + options_.base_url; }
  bool supports_logprobs() const override { return options_.logprobs; }
  Completion complete(const CompletionRequest& req) override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  HttpProviderOptions options_;
};

}  // namespace auditflow::llm
