#pragma once

#include <string>

#include "auditflow/domain.hpp"

namespace auditflow::app {

// Markdown audit report. Sections: executive summary, contract
// understanding, audit plan, findings grouped by severity (most severe
// first), run metadata. Byte-deterministic for a given report.
std::string render_report(const AuditReport& report);

}  // namespace auditflow::app
