#include "auditflow/static_ingest.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "auditflow/errors.hpp"
#include "auditflow/util.hpp"

namespace auditflow {

using nlohmann::json;

std::string_view to_string(StaticImpact impact) {
  switch (impact) {
    case StaticImpact::High: return "High";
    case StaticImpact::Medium: return "Medium";
    case StaticImpact::Low: return "Low";
    case StaticImpact::Informational: return "Informational";
    case StaticImpact::Optimization: return "Optimization";
  }
  return "Informational";
}

std::optional<StaticImpact> parse_static_impact(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "high") return StaticImpact::High;
  if (t == "medium") return StaticImpact::Medium;
  if (t == "low") return StaticImpact::Low;
  if (t == "informational") return StaticImpact::Informational;
  if (t == "optimization") return StaticImpact::Optimization;
  return std::nullopt;
}

namespace {

std::optional<std::string> string_field(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_string()) return std::nullopt;
  std::string v = obj[key].get<std::string>();
  if (trim(v).empty()) return std::nullopt;
  return v;
}

std::vector<CodeLocation> element_locations(const json& entry) {
  std::vector<CodeLocation> out;
  if (!entry.contains("elements") || !entry["elements"].is_array()) return out;
  for (const auto& el : entry["elements"]) {
    if (!el.is_object() || !el.contains("source_mapping")) continue;
    const auto& sm = el["source_mapping"];
    if (!sm.is_object() || !sm.contains("lines") || !sm["lines"].is_array()) continue;
    std::vector<int> lines;
    for (const auto& l : sm["lines"]) {
      if (l.is_number_integer()) lines.push_back(l.get<int>());
    }
    if (lines.empty()) continue;
    CodeLocation loc;
    loc.file = sm.value("filename_relative", sm.value("filename_short", std::string{}));
    loc.start_line = *std::min_element(lines.begin(), lines.end());
    loc.end_line = *std::max_element(lines.begin(), lines.end());
    if (el.value("type", std::string{}) == "function" && el.contains("name") &&
        el["name"].is_string()) {
      loc.function_name = el["name"].get<std::string>();
    }
    if (std::find(out.begin(), out.end(), loc) == out.end()) out.push_back(std::move(loc));
  }
  return out;
}

}  // namespace

StaticReport parse_static_report(const json& doc) {
  if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_object()) {
    throw FormatError("not a static-analysis detector report (missing results object)");
  }
  const auto& results = doc["results"];
  StaticReport report;
  if (!results.contains("detectors")) {
    // The analyzer omits the array entirely when nothing fired.
    if (doc.contains("success")) return report;
    throw FormatError("not a static-analysis detector report (missing results.detectors)");
  }
  if (!results["detectors"].is_array()) {
    throw FormatError("results.detectors is not an array");
  }
  std::size_t index = 0;
  for (const auto& entry : results["detectors"]) {
    const std::size_t i = index++;
    if (!entry.is_object()) {
      report.warnings.push_back("detector entry " + std::to_string(i) + " is not an object");
      continue;
    }
    auto check = string_field(entry, "check");
    auto impact_text = string_field(entry, "impact");
    auto description = string_field(entry, "description");
    std::optional<StaticImpact> impact;
    if (impact_text) impact = parse_static_impact(*impact_text);
    if (!check || !impact || !description) {
      std::string missing = !check ? "check" : !impact_text ? "impact"
                                           : !impact      ? "valid impact"
                                                          : "description";
      report.warnings.push_back("detector entry " + std::to_string(i) + " skipped: missing " +
                                missing);
      continue;
    }
    StaticFinding f;
    f.detector = *check;
    f.impact = *impact;
    f.confidence_label = string_field(entry, "confidence").value_or("");
    f.description = *description;
    f.locations = element_locations(entry);
    report.findings.push_back(std::move(f));
  }
  for (const auto& w : report.warnings) spdlog::warn("static report: {}", w);
  return report;
}

StaticReport load_static_report(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError("static report " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_static_report(doc);
}

std::string to_hints(const std::vector<StaticFinding>& findings, const HintOptions& options) {
  if (findings.empty()) return "Static analysis: no static findings.\n";
  std::vector<const StaticFinding*> order;
  for (const auto& f : findings) order.push_back(&f);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    if (a->impact != b->impact) return a->impact > b->impact;
    return a->detector < b->detector;
  });

  std::string out =
      "Static analysis findings (advisory input for cross-referencing; confirm each "
      "against the source before relying on it):\n";
  const std::size_t cap = std::max<std::size_t>(1, options.cap);
  std::size_t rendered = 0;
  for (const auto* f : order) {
    if (rendered >= cap) break;
    std::string where;
    for (const auto& loc : f->locations) {
      if (!where.empty()) where += ", ";
      if (!loc.file.empty()) where += loc.file + ":";
      where += std::to_string(loc.start_line);
      if (loc.end_line != loc.start_line) where += "-" + std::to_string(loc.end_line);
    }
    if (where.empty()) where = "unknown";
    std::string line = "- [" + std::string(to_string(f->impact)) + "] " + f->detector +
                       " @ lines " + where + ": " + collapse_whitespace(f->description) +
                       "\n";
    // Leave room for the omission footer.
    if (out.size() + line.size() + 32 > options.max_chars) break;
    out += line;
    ++rendered;
  }
  if (rendered < order.size()) {
    out += "(" + std::to_string(order.size() - rendered) + " omitted)\n";
  }
  if (out.size() > options.max_chars) out.resize(options.max_chars);
  return out;
}

}  // namespace auditflow
