#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace auditflow {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
// Lowercased, whitespace runs collapsed to one space, trimmed.
std::string normalize_text(std::string_view s);
// Whitespace runs collapsed to one space, trimmed, case preserved.
std::string collapse_whitespace(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// UTC, e.g. 2026-10-16T22:19:00Z.
std::string utc_timestamp();

}  // namespace auditflow
