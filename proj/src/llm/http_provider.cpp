#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "auditflow/errors.hpp"
#include "auditflow/llm/http_provider.hpp"

namespace auditflow::llm {

using nlohmann::json;

HttpProvider::HttpProvider(HttpProviderOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) throw ProviderError("http provider: empty base_url");
}

json HttpProvider::post(const std::string& path, const json& body) {
  httplib::Client client(options_.base_url);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
      throw TimeoutError("http provider: " + httplib::to_string(err));
    }
    throw ProviderError("http provider: " + httplib::to_string(err), true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw ProviderError("http provider: status " + std::to_string(res->status), true);
  }
  if (res->status != 200) {
    throw ProviderError("http provider: status " + std::to_string(res->status) + ": " +
                        res->body.substr(0, 200));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("http provider: malformed body: ") + e.what());
  }
}

Completion HttpProvider::complete(const CompletionRequest& req) {
  req.validate();
  json messages = json::array();
  if (!req.system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", req.user_prompt}});
  json body{{"model", req.model_id},
            {"messages", messages},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
  if (req.want_logprobs && options_.logprobs) body["logprobs"] = true;

  const json reply = post(options_.chat_path, body);
  try {
    const auto& choice = reply.at("choices").at(0);
    Completion c;
    c.provider = name();
    c.text = choice.at("message").at("content").get<std::string>();
    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
      std::vector<double> lps;
      for (const auto& tok : choice["logprobs"]["content"]) {
        lps.push_back(tok.at("logprob").get<double>());
      }
      c.token_logprobs = std::move(lps);
    }
    if (reply.contains("usage")) {
      c.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
      c.usage.completion_tokens = reply["usage"].value("completion_tokens", 0);
    }
    if (c.token_logprobs) {
      c.usage.completion_tokens = static_cast<int>(c.token_logprobs->size());
    }
    return c;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("http provider: unexpected completion shape: ") +
                        e.what());
  }
}

std::vector<EmbeddingVector> HttpProvider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw InvalidRequest("embed: empty input");
  json body{{"model", options_.embedding_model}, {"input", texts}};
  const json reply = post(options_.embeddings_path, body);
  try {
    std::vector<EmbeddingVector> out;
    for (const auto& item : reply.at("data")) {
      out.push_back(
          EmbeddingVector::from_values(item.at("embedding").get<std::vector<double>>()));
    }
    if (out.size() != texts.size()) {
      throw ProviderError("http provider: embedding count mismatch");
    }
    return out;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("http provider: unexpected embedding shape: ") +
                        e.what());
  }
}

}  // namespace auditflow::llm
