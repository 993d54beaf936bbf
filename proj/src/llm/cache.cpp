#include "auditflow/llm/cache.hpp"

#include <spdlog/spdlog.h>

#include "auditflow/digest.hpp"
#include "auditflow/util.hpp"

namespace auditflow::llm {

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::string ResponseCache::key_for(const CompletionRequest& req) {
  return DigestBuilder()
      .add(std::string_view("completion/v1"))
      .add(req.model_id)
      .add(req.system_prompt)
      .add(req.user_prompt)
      .add(req.temperature)
      .add(static_cast<std::int64_t>(req.max_tokens))
      .add(static_cast<std::int64_t>(req.want_logprobs ? 1 : 0))
      .hex();
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return root_ / key.substr(0, 2) / (key + ".json");
}

std::optional<Completion> ResponseCache::load(const std::string& key) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    const auto record = nlohmann::json::parse(read_file(path));
    if (record.at("key").get<std::string>() != key) {
      spdlog::warn("cache record {} has mismatched key; treating as miss", path.string());
      return std::nullopt;
    }
    return record.at("completion").get<Completion>();
  } catch (const std::exception& e) {
    spdlog::warn("corrupt cache record {} ({}); treating as miss", path.string(), e.what());
    return std::nullopt;
  }
}

void ResponseCache::store(const std::string& key, const Completion& completion) const {
  nlohmann::json record{{"key", key}, {"completion", completion}};
  write_file_atomic(path_for(key), record.dump(2));
}

}  // namespace auditflow::llm
