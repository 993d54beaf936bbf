#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "auditflow/scoring/scoring.hpp"

namespace auditflow::app {

// Exit codes: 0 success, 1 domain error, 2 usage error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

// Task samples from a directory of "<id>.sol" + "<id>.expected.md" pairs or
// from a JSONL file of {"id", "contract", "expected"} records.
std::vector<scoring::TaskSample> load_samples(const std::filesystem::path& path);

// Seed instructions separated by blank lines.
std::vector<std::string> load_seeds(const std::filesystem::path& path);
const std::vector<std::string>& default_seeds();

}  // namespace auditflow::app
