#pragma once

// Structural checks for the persisted run and evaluation documents. Each
// returns the list of violations; empty means valid.

#include <algorithm>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace testsupport {

using nlohmann::json;

inline void require(std::vector<std::string>& errs, const json& obj, const std::string& path,
                    const std::string& key, json::value_t type) {
  if (!obj.is_object() || !obj.contains(key)) {
    errs.push_back(path + "." + key + " missing");
    return;
  }
  const auto actual = obj[key].type();
  const bool number_ok = type == json::value_t::number_float &&
                         (actual == json::value_t::number_integer ||
                          actual == json::value_t::number_unsigned);
  const bool int_ok = type == json::value_t::number_integer &&
                      actual == json::value_t::number_unsigned;
  if (actual != type && !number_ok && !int_ok) errs.push_back(path + "." + key + " has wrong type");
}

inline std::vector<std::string> report_violations(const json& r) {
  using V = json::value_t;
  std::vector<std::string> errs;
  if (!r.is_object()) return {"report is not an object"};
  require(errs, r, "report", "contract_id", V::string);
  require(errs, r, "report", "initial_analysis", V::string);
  require(errs, r, "report", "plan_text", V::string);
  require(errs, r, "report", "plan", V::array);
  require(errs, r, "report", "findings", V::array);
  require(errs, r, "report", "summary", V::string);
  require(errs, r, "report", "run_metadata", V::object);
  if (!errs.empty()) return errs;
  for (const auto& t : r["plan"]) {
    require(errs, t, "plan[]", "index", V::number_integer);
    require(errs, t, "plan[]", "concern", V::string);
    require(errs, t, "plan[]", "priority", V::number_integer);
  }
  static const std::vector<std::string> severities{"Critical", "High", "Medium", "Low",
                                                   "Informational"};
  for (const auto& f : r["findings"]) {
    require(errs, f, "findings[]", "finding_id", V::string);
    require(errs, f, "findings[]", "vuln_type", V::string);
    require(errs, f, "findings[]", "description", V::string);
    require(errs, f, "findings[]", "location", V::object);
    require(errs, f, "findings[]", "severity", V::string);
    require(errs, f, "findings[]", "confidence", V::number_float);
    require(errs, f, "findings[]", "evidence", V::array);
    if (!errs.empty()) continue;
    const auto& loc = f["location"];
    require(errs, loc, "location", "file", V::string);
    require(errs, loc, "location", "start_line", V::number_integer);
    require(errs, loc, "location", "end_line", V::number_integer);
    if (!errs.empty()) continue;
    if (loc["start_line"].get<int>() < 1 || loc["start_line"].get<int>() > loc["end_line"].get<int>()) {
      errs.push_back("finding " + f["finding_id"].get<std::string>() + " has an invalid line range");
    }
    const double c = f["confidence"].get<double>();
    if (c < 0.0 || c > 1.0) errs.push_back("confidence out of [0,1]");
    if (std::find(severities.begin(), severities.end(), f["severity"].get<std::string>()) ==
        severities.end()) {
      errs.push_back("unknown severity");
    }
  }
  const auto& m = r["run_metadata"];
  require(errs, m, "run_metadata", "model_id", V::string);
  require(errs, m, "run_metadata", "started_at", V::string);
  require(errs, m, "run_metadata", "finished_at", V::string);
  require(errs, m, "run_metadata", "step_count", V::number_integer);
  require(errs, m, "run_metadata", "config_hash", V::string);
  return errs;
}

inline std::vector<std::string> eval_violations(const json& e) {
  using V = json::value_t;
  std::vector<std::string> errs;
  require(errs, e, "eval", "summary", V::object);
  require(errs, e, "eval", "contracts", V::array);
  if (!errs.empty()) return errs;
  const auto& s = e["summary"];
  require(errs, s, "summary", "top_n", V::object);
  require(errs, s, "summary", "mrr", V::number_float);
  require(errs, s, "summary", "map", V::number_float);
  require(errs, s, "summary", "avg_outputs", V::number_float);
  require(errs, s, "summary", "tp", V::number_integer);
  require(errs, s, "summary", "fp", V::number_integer);
  require(errs, s, "summary", "missed", V::number_integer);
  if (s.contains("top_n") && s["top_n"].is_object()) {
    require(errs, s["top_n"], "top_n", "top_max", V::number_float);
    for (const auto& [k, v] : s["top_n"].items()) {
      if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0) {
        errs.push_back("top_n." + k + " not a fraction");
      }
    }
  }
  static const std::vector<std::string> categories{"Exact", "Partial", "Incorrect", "Missed",
                                                   "Spurious"};
  for (const auto& c : e["contracts"]) {
    require(errs, c, "contracts[]", "contract_id", V::string);
    require(errs, c, "contracts[]", "matches", V::array);
    if (!c.contains("matches") || !c["matches"].is_array()) continue;
    for (const auto& m : c["matches"]) {
      require(errs, m, "matches[]", "category", V::string);
      if (m.contains("category") && m["category"].is_string() &&
          std::find(categories.begin(), categories.end(), m["category"].get<std::string>()) ==
              categories.end()) {
        errs.push_back("unknown match category");
      }
    }
  }
  return errs;
}

inline std::vector<std::string> csv_violations(const std::string& csv) {
  std::vector<std::string> errs;
  const std::string header = "scope,top_1,top_5,top_max,mrr,map,avg_outputs,tp,fp,missed";
  if (csv.rfind(header + "\n", 0) != 0) errs.push_back("eval.csv header mismatch");
  std::size_t rows = 0;
  std::size_t pos = 0;
  while ((pos = csv.find('\n', pos)) != std::string::npos) {
    ++rows;
    ++pos;
  }
  if (rows < 2) errs.push_back("eval.csv has no data rows");
  if (csv.find("\nall,") == std::string::npos) errs.push_back("eval.csv lacks the all row");
  return errs;
}

}  // namespace testsupport
