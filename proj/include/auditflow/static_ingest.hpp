#pragma once

// Reads static-analyzer detector reports (Slither --json layout) and renders
// them as advisory hint text for the initial-analysis prompt.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auditflow/domain.hpp"

namespace auditflow {

enum class StaticImpact { Optimization = 0, Informational = 1, Low = 2, Medium = 3, High = 4 };

std::string_view to_string(StaticImpact impact);
std::optional<StaticImpact> parse_static_impact(std::string_view text);

struct StaticFinding {
  std::string detector;
  StaticImpact impact = StaticImpact::Informational;
  std::string confidence_label;
  std::string description;
  std::vector<CodeLocation> locations;
};

struct StaticReport {
  std::vector<StaticFinding> findings;
  // One message per skipped detector entry.
  std::vector<std::string> warnings;
};

// FormatError when the document is not a detector report at all.
StaticReport parse_static_report(const nlohmann::json& doc);
StaticReport load_static_report(const std::filesystem::path& path);

struct HintOptions {
  std::size_t cap = 20;
  std::size_t max_chars = 6000;
};

// Deterministic hint block: impact desc, detector asc, at most `cap` entries,
// never longer than `max_chars`.
std::string to_hints(const std::vector<StaticFinding>& findings, const HintOptions& options = {});

}  // namespace auditflow
