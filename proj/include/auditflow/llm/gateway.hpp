#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>

#include "auditflow/llm/cache.hpp"
#include "auditflow/llm/types.hpp"

namespace auditflow::llm {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

struct GatewayOptions {
  RetryPolicy retry;
  // Cumulative prompt+completion token cap; unset means unlimited.
  std::optional<long> max_total_tokens;
  std::optional<std::filesystem::path> cache_dir;
  // Minimum spacing between provider dispatches (rate limiting).
  std::chrono::milliseconds min_request_interval{0};
};

// Uniform entry point to completion and embedding providers. Safe for
// concurrent use.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(std::shared_ptr<CompletionProvider> completions,
          std::shared_ptr<EmbeddingProvider> embeddings, GatewayOptions options = {});

  // Validates, enforces the budget, dispatches with retry on transient
  // failures, and checks the logprob invariants of the reply.
  Completion complete(const CompletionRequest& req);
  // Served from the response cache when configured; otherwise complete().
  Completion cached_complete(const CompletionRequest& req);

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);
  EmbeddingVector embed_one(const std::string& text);

  bool supports_logprobs() const;
  bool has_cache() const { return cache_.has_value(); }
  long tokens_used() const { return tokens_used_.load(); }
  int provider_calls() const { return provider_calls_.load(); }
  int cache_hits() const { return cache_hits_.load(); }
  // 0 until the first embedding call fixes it.
  std::size_t embedding_dim() const;

  // Tests replace the backoff sleep to keep runs fast.
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

 private:
  void throttle();

  std::shared_ptr<CompletionProvider> completions_;
  std::shared_ptr<EmbeddingProvider> embeddings_;
  GatewayOptions options_;
  std::optional<ResponseCache> cache_;
  Sleeper sleeper_;
  std::atomic<long> tokens_used_{0};
  std::atomic<int> provider_calls_{0};
  std::atomic<int> cache_hits_{0};
  mutable std::mutex mutex_;
  std::size_t embedding_dim_ = 0;
  std::chrono::steady_clock::time_point last_dispatch_{};
};

}  // namespace auditflow::llm
