#include "auditflow/llm/gateway.hpp"

#include <thread>

#include <spdlog/spdlog.h>

#include "auditflow/errors.hpp"

namespace auditflow::llm {

Gateway::Gateway(std::shared_ptr<CompletionProvider> completions,
                 std::shared_ptr<EmbeddingProvider> embeddings, GatewayOptions options)
    : completions_(std::move(completions)),
      embeddings_(std::move(embeddings)),
      options_(std::move(options)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (options_.cache_dir) cache_.emplace(*options_.cache_dir);
}

bool Gateway::supports_logprobs() const {
  return completions_ && completions_->supports_logprobs();
}

std::size_t Gateway::embedding_dim() const {
  std::lock_guard lock(mutex_);
  return embedding_dim_;
}

void Gateway::throttle() {
  if (options_.min_request_interval.count() <= 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, last_dispatch_ + options_.min_request_interval);
    last_dispatch_ = slot;
  }
  std::this_thread::sleep_until(slot);
}

Completion Gateway::complete(const CompletionRequest& req) {
  req.validate();
  if (!completions_) throw ProviderError("no completion provider configured");
  if (options_.max_total_tokens && tokens_used_.load() >= *options_.max_total_tokens) {
    throw BudgetExceeded("token budget of " + std::to_string(*options_.max_total_tokens) +
                         " exhausted");
  }

  auto backoff = options_.retry.initial_backoff;
  const int attempts = std::max(1, options_.retry.max_attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      throttle();
      provider_calls_.fetch_add(1);
      Completion c = completions_->complete(req);
      tokens_used_.fetch_add(c.usage.prompt_tokens + c.usage.completion_tokens);
      if (c.token_logprobs) {
        for (double lp : *c.token_logprobs) {
          if (!(lp <= 0.0)) throw ProviderError("provider returned a positive logprob");
        }
        if (!req.want_logprobs) c.token_logprobs.reset();
      }
      return c;
    } catch (const ProviderError& e) {
      if (!e.transient() || attempt >= attempts) throw;
      spdlog::warn("provider attempt {}/{} failed: {}; retrying", attempt, attempts, e.what());
    } catch (const TimeoutError& e) {
      if (attempt >= attempts) throw;
      spdlog::warn("provider attempt {}/{} timed out: {}; retrying", attempt, attempts,
                   e.what());
    }
    sleeper_(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<long>(static_cast<double>(backoff.count()) * options_.retry.multiplier));
  }
}

Completion Gateway::cached_complete(const CompletionRequest& req) {
  req.validate();
  if (!cache_) return complete(req);
  const std::string key = ResponseCache::key_for(req);
  if (auto hit = cache_->load(key)) {
    cache_hits_.fetch_add(1);
    return *hit;
  }
  Completion c = complete(req);
  cache_->store(key, c);
  return c;
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw InvalidRequest("embed: empty input");
  if (!embeddings_) throw ProviderError("no embedding provider configured");
  auto vectors = embeddings_->embed(texts);
  if (vectors.size() != texts.size()) throw ProviderError("embedding count mismatch");
  std::lock_guard lock(mutex_);
  for (const auto& v : vectors) {
    if (embedding_dim_ == 0) embedding_dim_ = v.dim();
    if (v.dim() != embedding_dim_) {
      throw DimensionMismatch("embedding dimension changed from " +
                              std::to_string(embedding_dim_) + " to " +
                              std::to_string(v.dim()));
    }
  }
  return vectors;
}

EmbeddingVector Gateway::embed_one(const std::string& text) {
  return std::move(embed({text}).front());
}

}  // namespace auditflow::llm
