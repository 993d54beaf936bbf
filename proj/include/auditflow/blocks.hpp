#pragma once

// Structured exchange format between pipeline stages and the model.
//
// The model is asked to answer with fenced blocks whose info string names the
// payload, e.g.
//
//   ```subtasks
//   - index: 1
//     title: Reentrancy in withdraw
//     concern: reentrancy
//   ```
//
// Entries start with "- key: value"; following "key: value" lines belong to
// the same entry. Repeated keys accumulate (used for evidence lists).

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace auditflow {

struct FencedBlock {
  std::string info;  // lowercased first word after the opening fence
  std::string body;
};

std::vector<FencedBlock> find_fenced_blocks(std::string_view text);
std::optional<FencedBlock> find_block(std::string_view text, std::string_view info);

using TaggedEntry = std::multimap<std::string, std::string>;

// Keys are lowercased with spaces/dashes folded to '_'.
std::vector<TaggedEntry> parse_tagged_entries(std::string_view body);
// Single-entry form: every "key: value" line in the body.
TaggedEntry parse_tagged_fields(std::string_view body);

std::optional<std::string> first_value(const TaggedEntry& e, const std::string& key);
std::vector<std::string> all_values(const TaggedEntry& e, const std::string& key);

}  // namespace auditflow
