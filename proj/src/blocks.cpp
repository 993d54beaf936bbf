#include "auditflow/blocks.hpp"

#include <cctype>

#include "auditflow/util.hpp"

namespace auditflow {

namespace {

std::string fold_key(std::string_view raw) {
  std::string key;
  for (char c : trim(raw)) {
    if (c == ' ' || c == '-') {
      key.push_back('_');
    } else {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return key;
}

// "key: value" -> (key, value); nullopt when the line has no usable key.
std::optional<std::pair<std::string, std::string>> split_field(std::string_view line) {
  const auto colon = line.find(':');
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  std::string key = fold_key(line.substr(0, colon));
  if (key.empty()) return std::nullopt;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return std::nullopt;
  }
  return std::make_pair(std::move(key), trim(line.substr(colon + 1)));
}

}  // namespace

std::vector<FencedBlock> find_fenced_blocks(std::string_view text) {
  std::vector<FencedBlock> blocks;
  const auto lines = split_lines(text);
  std::optional<FencedBlock> open;
  for (const auto& raw : lines) {
    const std::string line = trim(raw);
    if (line.rfind("```", 0) == 0) {
      if (open) {
        blocks.push_back(std::move(*open));
        open.reset();
      } else {
        FencedBlock b;
        const auto words = split_whitespace(std::string_view(line).substr(3));
        if (!words.empty()) b.info = to_lower(words.front());
        open = std::move(b);
      }
      continue;
    }
    if (open) {
      open->body += raw;
      open->body.push_back('\n');
    }
  }
  // An unterminated final block still counts; models often drop the fence.
  if (open) blocks.push_back(std::move(*open));
  return blocks;
}

std::optional<FencedBlock> find_block(std::string_view text, std::string_view info) {
  for (auto& b : find_fenced_blocks(text)) {
    if (b.info == info) return b;
  }
  return std::nullopt;
}

std::vector<TaggedEntry> parse_tagged_entries(std::string_view body) {
  std::vector<TaggedEntry> entries;
  for (const auto& raw : split_lines(body)) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    bool starts_entry = false;
    if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) {
      starts_entry = true;
      line = trim(std::string_view(line).substr(2));
    }
    if (starts_entry || entries.empty()) entries.emplace_back();
    if (auto kv = split_field(line)) {
      entries.back().emplace(std::move(kv->first), std::move(kv->second));
    }
  }
  std::erase_if(entries, [](const TaggedEntry& e) { return e.empty(); });
  return entries;
}

TaggedEntry parse_tagged_fields(std::string_view body) {
  TaggedEntry out;
  for (const auto& raw : split_lines(body)) {
    std::string line = trim(raw);
    if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) line = trim(line.substr(2));
    if (auto kv = split_field(line)) out.emplace(std::move(kv->first), std::move(kv->second));
  }
  return out;
}

std::optional<std::string> first_value(const TaggedEntry& e, const std::string& key) {
  auto it = e.find(key);
  if (it == e.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> all_values(const TaggedEntry& e, const std::string& key) {
  std::vector<std::string> out;
  auto [b, end] = e.equal_range(key);
  for (auto it = b; it != end; ++it) out.push_back(it->second);
  return out;
}

}  // namespace auditflow
