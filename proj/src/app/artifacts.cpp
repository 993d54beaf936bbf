#include "auditflow/app/artifacts.hpp"

#include <algorithm>

#include "auditflow/app/render.hpp"
#include "auditflow/errors.hpp"
#include "auditflow/util.hpp"

namespace auditflow::app {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path create_run_dir(const fs::path& output_dir, const std::string& contract_id,
                        const std::string& timestamp) {
  std::string stamp = timestamp;
  std::replace(stamp.begin(), stamp.end(), ':', '-');
  const fs::path base = output_dir / contract_id;
  fs::path dir = base / stamp;
  for (int n = 1; fs::exists(dir); ++n) dir = base / (stamp + "-" + std::to_string(n));
  fs::create_directories(dir);
  return dir;
}

std::string stages_jsonl(const std::vector<workflow::StageRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += json(r).dump();
    out.push_back('\n');
  }
  return out;
}

void write_run(const fs::path& run_dir, const json& config, const workflow::RunTrace& trace,
               const AuditReport& report) {
  write_file_atomic(run_dir / "config.json", config.dump(2) + "\n");
  write_file_atomic(run_dir / "stages.jsonl", stages_jsonl(trace.records));
  write_file_atomic(run_dir / "report.json", json(report).dump(2) + "\n");
  write_file_atomic(run_dir / "report.md", render_report(report));
}

void write_partial_run(const fs::path& run_dir, const json& config,
                       const workflow::RunTrace& trace, const std::string& error) {
  write_file_atomic(run_dir / "config.json", config.dump(2) + "\n");
  write_file_atomic(run_dir / "stages.jsonl", stages_jsonl(trace.records));
  write_file_atomic(run_dir / "report.json", json(trace.partial).dump(2) + "\n");
  write_file_atomic(run_dir / "error.txt", error + "\n");
}

AuditReport load_report(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  try {
    return doc.get<AuditReport>();
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::vector<fs::path> find_reports(const fs::path& path) {
  if (!fs::exists(path)) throw Error("report not found: " + path.string());
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> out;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().filename() == "report.json" &&
        !fs::exists(entry.path().parent_path() / "error.txt")) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error("no report.json under " + path.string());
  return out;
}

}  // namespace auditflow::app
