#include "auditflow/app/render.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "auditflow/util.hpp"

namespace auditflow::app {

namespace {

std::string confidence_text(double c) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", c);
  return buf;
}

std::string location_text(const CodeLocation& loc) {
  std::string out = loc.file + ":" + std::to_string(loc.start_line);
  if (loc.end_line != loc.start_line) out += "-" + std::to_string(loc.end_line);
  if (loc.function_name) out += " (`" + *loc.function_name + "`)";
  return out;
}

}  // namespace

std::string render_report(const AuditReport& report) {
  std::ostringstream md;
  md << "# Audit Report: " << report.contract_id << "\n\n";

  md << "## Executive Summary\n\n";
  md << (trim(report.summary).empty() ? std::string("No summary was produced.") : trim(report.summary))
     << "\n\n";
  std::map<Severity, int> counts;
  for (const auto& f : report.findings) ++counts[f.severity];
  md << "| Severity | Findings |\n|---|---|\n";
  for (Severity s : kAllSeverities) md << "| " << to_string(s) << " | " << counts[s] << " |\n";
  md << "\n";

  md << "## Contract Understanding\n\n" << trim(report.initial_analysis) << "\n\n";

  md << "## Audit Plan\n\n";
  if (report.plan.empty()) md << "No sub-tasks were planned.\n";
  for (const auto& t : report.plan) {
    md << t.index << ". **" << t.title << "** (priority " << t.priority << "): `" << t.concern
       << "` in `" << t.target << "`\n";
  }
  md << "\n";

  md << "## Findings\n\n";
  if (report.findings.empty()) {
    md << "No findings above threshold.\n\n";
  } else {
    for (Severity s : kAllSeverities) {
      if (!counts[s]) continue;
      md << "### " << to_string(s) << "\n\n";
      for (const auto& f : report.findings) {
        if (f.severity != s) continue;
        md << "#### " << f.finding_id << ": " << f.vuln_type << "\n\n";
        md << "- Location: " << location_text(f.location) << "\n";
        md << "- Confidence: " << confidence_text(f.confidence) << "\n";
        md << "- Sub-task: " << f.origin_subtask << "\n\n";
        md << trim(f.description) << "\n\n";
        if (!f.evidence.empty()) {
          md << "Evidence:\n\n";
          for (const auto& e : f.evidence) md << "- " << collapse_whitespace(e) << "\n";
          md << "\n";
        }
        md << "Recommendation: _to be completed by the reviewing auditor._\n\n";
      }
    }
  }

  const auto& m = report.run_metadata;
  md << "## Run Metadata\n\n";
  md << "- Model: " << m.model_id << "\n";
  md << "- Started: " << m.started_at << "\n";
  md << "- Finished: " << m.finished_at << "\n";
  md << "- LLM steps: " << m.step_count << "\n";
  md << "- Config hash: " << m.config_hash << "\n";
  return md.str();
}

}  // namespace auditflow::app
