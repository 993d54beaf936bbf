#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace auditflow::llm {

struct CompletionRequest {
  std::string model_id;
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.0;
  int max_tokens = 2048;
  bool want_logprobs = false;

  // Throws InvalidRequest when max_tokens <= 0 or temperature < 0.
  void validate() const;
  // Content digest over every field that can change the response.
  std::string digest() const;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct Completion {
  std::string text;
  // log P per generated token; every entry <= 0.
  std::optional<std::vector<double>> token_logprobs;
  Usage usage;
  std::string provider;
};

struct EmbeddingVector {
  std::vector<double> values;
  double norm = 0.0;

  static EmbeddingVector from_values(std::vector<double> values);
  std::size_t dim() const { return values.size(); }
};

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual std::string name() const = 0;
  virtual bool supports_logprobs() const = 0;
  virtual Completion complete(const CompletionRequest& req) = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

// Whitespace token count, the unit used for usage accounting by local providers.
int approx_token_count(const std::string& text);

void to_json(nlohmann::json& j, const Completion& c);
void from_json(const nlohmann::json& j, Completion& c);

}  // namespace auditflow::llm
