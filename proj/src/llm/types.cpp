#include "auditflow/llm/types.hpp"

#include <cmath>

#include "auditflow/digest.hpp"
#include "auditflow/errors.hpp"
#include "auditflow/util.hpp"

namespace auditflow::llm {

void CompletionRequest::validate() const {
  if (max_tokens <= 0) throw InvalidRequest("max_tokens must be > 0");
  if (!(temperature >= 0.0)) throw InvalidRequest("temperature must be >= 0");
}

std::string CompletionRequest::digest() const {
  return DigestBuilder()
      .add(model_id)
      .add(system_prompt)
      .add(user_prompt)
      .add(temperature)
      .add(static_cast<std::int64_t>(max_tokens))
      .add(static_cast<std::int64_t>(want_logprobs ? 1 : 0))
      .hex();
}

EmbeddingVector EmbeddingVector::from_values(std::vector<double> values) {
  EmbeddingVector v;
  double ss = 0.0;
  for (double x : values) ss += x * x;
  v.values = std::move(values);
  v.norm = std::sqrt(ss);
  return v;
}

int approx_token_count(const std::string& text) {
  return static_cast<int>(split_whitespace(text).size());
}

void to_json(nlohmann::json& j, const Completion& c) {
  j = nlohmann::json{{"text", c.text},
                     {"usage",
                      {{"prompt_tokens", c.usage.prompt_tokens},
                       {"completion_tokens", c.usage.completion_tokens}}},
                     {"provider", c.provider}};
  j["token_logprobs"] = c.token_logprobs ? nlohmann::json(*c.token_logprobs)
                                         : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, Completion& c) {
  c.text = j.at("text").get<std::string>();
  c.provider = j.value("provider", std::string{});
  const auto& usage = j.at("usage");
  c.usage.prompt_tokens = usage.at("prompt_tokens").get<int>();
  c.usage.completion_tokens = usage.at("completion_tokens").get<int>();
  if (j.contains("token_logprobs") && !j["token_logprobs"].is_null()) {
    c.token_logprobs = j["token_logprobs"].get<std::vector<double>>();
  } else {
    c.token_logprobs.reset();
  }
}

}  // namespace auditflow::llm
