#pragma once

// Run directory layout:
//   <output>/<contract_id>/<timestamp>/
//     config.json    resolved configuration of the run
//     stages.jsonl   one stage record per line
//     report.json    AuditReport
//     report.md      rendered report
//     error.txt      only for aborted runs; report.json then holds the partial report

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auditflow/domain.hpp"
#include "auditflow/workflow/engine.hpp"

namespace auditflow::app {

// Creates a fresh run directory; a numeric suffix avoids collisions.
std::filesystem::path create_run_dir(const std::filesystem::path& output_dir,
                                     const std::string& contract_id, const std::string& timestamp);

void write_run(const std::filesystem::path& run_dir, const nlohmann::json& config,
               const workflow::RunTrace& trace, const AuditReport& report);
void write_partial_run(const std::filesystem::path& run_dir, const nlohmann::json& config,
                       const workflow::RunTrace& trace, const std::string& error);

std::string stages_jsonl(const std::vector<workflow::StageRecord>& records);

// SchemaError when the document is not an AuditReport.
AuditReport load_report(const std::filesystem::path& path);
// `path` itself when it is a file, else every report.json below it in path order.
std::vector<std::filesystem::path> find_reports(const std::filesystem::path& path);

}  // namespace auditflow::app
