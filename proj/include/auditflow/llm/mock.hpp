#pragma once

// Deterministic offline providers.
//
// MockProvider answers from an ordered rule list. A rule matches either an
// exact request digest or an ECMAScript regex searched over
// "<system_prompt>\n<user_prompt>". Response text may reference capture
// groups ($1, $2, ...). The first matching rule wins, so the response is a
// pure function of the request and replays identically across processes.
//
// Fixture file shape:
//   { "strict": false,
//     "rules": [ {"match": "regex", "text": "...", "logprobs": [-0.1]},
//                {"digest": "<sha256>", "text": "..."} ] }

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "auditflow/llm/types.hpp"

namespace auditflow::llm {

struct MockRule {
  std::optional<std::string> digest;
  std::optional<std::string> pattern;
  std::string text;
  std::optional<std::vector<double>> logprobs;
};

struct ScriptedReply {
  std::string text;
  std::optional<std::vector<double>> logprobs;
};

class MockProvider : public CompletionProvider {
 public:
  using Handler = std::function<std::optional<ScriptedReply>(const CompletionRequest&)>;

  MockProvider() = default;
  static MockProvider from_json(const nlohmann::json& fixture);
  static MockProvider from_file(const std::filesystem::path& path);

  MockProvider(const MockProvider& other);
  MockProvider& operator=(const MockProvider&) = delete;

  void add_rule(MockRule rule);
  void on_match(const std::string& pattern, std::string text,
                std::optional<std::vector<double>> logprobs = std::nullopt);
  // Code-level rule, consulted in insertion order together with the others.
  void add_handler(Handler handler);
  // Strict mode throws ProviderError for unscripted requests instead of
  // returning a digest-derived placeholder.
  void set_strict(bool strict) { strict_ = strict; }
  void set_supports_logprobs(bool on) { supports_logprobs_ = on; }

  std::string name() const override { return "mock"; }
  bool supports_logprobs() const override { return supports_logprobs_; }
  Completion complete(const CompletionRequest& req) override;

  int call_count() const { return calls_.load(); }
  std::vector<CompletionRequest> requests() const;

 private:
  struct Entry {
    MockRule rule;
    std::optional<std::regex> compiled;
    Handler handler;
  };

  std::vector<Entry> entries_;
  bool strict_ = false;
  bool supports_logprobs_ = true;
  std::atomic<int> calls_{0};
  mutable std::mutex log_mutex_;
  std::vector<CompletionRequest> log_;
};

// Hash-seeded pseudo-random unit vectors; pinned vectors override per text.
class MockEmbedder : public EmbeddingProvider {
 public:
  explicit MockEmbedder(std::size_t dim = 64) : dim_(dim) {}

  std::string name() const override { return "mock-embed"; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

  void pin(const std::string& text, std::vector<double> values);
  std::size_t dim() const { return dim_; }
  int call_count() const { return calls_.load(); }

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<double>> pinned_;
  mutable std::mutex mutex_;
  std::atomic<int> calls_{0};
};

// Deterministic unit vector derived from SHA-256(text).
std::vector<double> hashed_unit_vector(const std::string& text, std::size_t dim);

}  // namespace auditflow::llm
