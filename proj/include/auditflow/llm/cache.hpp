#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "auditflow/llm/types.hpp"

namespace auditflow::llm {

// Content-addressed directory of completion records:
//   <root>/<key[0:2]>/<key>.json  ->  {"key": ..., "completion": {...}}
// Writes go through write-then-rename so concurrent processes never observe a
// half-written record.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root);

  static std::string key_for(const CompletionRequest& req);

  // nullopt on miss. A record that fails to parse or whose key does not match
  // is reported as a miss (and logged).
  std::optional<Completion> load(const std::string& key) const;
  void store(const std::string& key, const Completion& completion) const;
  std::filesystem::path path_for(const std::string& key) const;

 private:
  std::filesystem::path root_;
};

}  // namespace auditflow::llm
