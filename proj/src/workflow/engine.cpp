#include "auditflow/workflow/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <future>
#include <set>

#include <spdlog/spdlog.h>

#include "auditflow/blocks.hpp"
#include "auditflow/digest.hpp"
#include "auditflow/errors.hpp"
#include "auditflow/util.hpp"

namespace auditflow::workflow {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string_view to_string(StageId s) {
  switch (s) {
    case StageId::A1: return "A1";
    case StageId::A2: return "A2";
    case StageId::A3: return "A3";
    case StageId::A4: return "A4";
    case StageId::A5: return "A5";
  }
  return "A1";
}

void to_json(json& j, const StageRecord& r) {
  j = json{{"stage", to_string(r.stage)},
           {"input_digest", r.input_digest},
           {"output", r.output},
           {"llm_steps", r.llm_steps},
           {"elapsed_ms", r.elapsed.count()}};
  if (r.subtask) j["subtask"] = *r.subtask;
}

void WorkflowConfig::validate() const {
  if (!(threshold_confidence >= 0.0 && threshold_confidence <= 1.0)) {
    throw ConfigError("threshold_confidence must be in [0, 1]");
  }
  if (retrieval_k < 1) throw ConfigError("retrieval_k must be >= 1");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (parallel_workers < 1) throw ConfigError("parallel_workers must be >= 1");
}

std::string WorkflowConfig::digest() const {
  DigestBuilder b;
  b.add(threshold_confidence)
      .add(prompts.analysis)
      .add(prompts.planning)
      .add(prompts.review)
      .add(prompts.calibration)
      .add(prompts.synthesis)
      .add(static_cast<std::int64_t>(use_static))
      .add(static_cast<std::int64_t>(use_rag))
      .add(static_cast<std::int64_t>(retrieval_k))
      .add(model_id)
      .add(temperature)
      .add(static_cast<std::int64_t>(max_tokens))
      .add(static_cast<std::int64_t>(hints.cap))
      .add(static_cast<std::int64_t>(hints.max_chars))
      .add(static_cast<std::int64_t>(query.salient_terms));
  for (const auto& p : query.default_platforms) b.add(p);
  return b.hex();
}

std::string source_file_name(const ContractInput& contract) {
  const auto name = std::filesystem::path(contract.contract_id).filename();
  if (name.has_extension()) return name.string();
  return name.string() + ".sol";
}

namespace {

// Leading integer of `text`; trailing words are ignored, trailing digits are not.
std::optional<int> leading_int(const std::string& text) {
  const std::string t = trim(text);
  int out = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr == t.data()) return std::nullopt;
  return out;
}

std::optional<double> parse_confidence(const std::string& text) {
  const std::string t = trim(text);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr == t.data() || !std::isfinite(out)) return std::nullopt;
  if (ptr != t.data() + t.size() && *ptr == '%') out /= 100.0;
  return std::clamp(out, 0.0, 1.0);
}

std::optional<int> field_int(const TaggedEntry& e, const std::string& key) {
  auto v = first_value(e, key);
  return v ? leading_int(*v) : std::nullopt;
}

std::optional<double> field_confidence(const TaggedEntry& e, const std::string& key) {
  auto v = first_value(e, key);
  return v ? parse_confidence(*v) : std::nullopt;
}

std::string stage_digest(std::initializer_list<std::string_view> parts) {
  DigestBuilder b;
  for (auto p : parts) b.add(p);
  return b.hex();
}

std::chrono::milliseconds since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0);
}

}  // namespace

std::vector<SubTask> extract_subtasks(const std::string& plan_text) {
  auto block = find_block(plan_text, "subtasks");
  if (!block) throw PlanParseError("no subtasks block in plan");

  std::vector<SubTask> tasks;
  for (const auto& entry : parse_tagged_entries(block->body)) {
    auto index = field_int(entry, "index");
    auto target = first_value(entry, "target");
    auto concern = first_value(entry, "concern");
    if (!index || *index < 1 || !target || trim(*target).empty() || !concern ||
        trim(*concern).empty()) {
      spdlog::warn("plan entry rejected: needs index >= 1, target and concern");
      continue;
    }
    SubTask t;
    t.index = *index;
    t.target = trim(*target);
    t.concern = to_lower(trim(*concern));
    t.title = trim(first_value(entry, "title").value_or(""));
    if (t.title.empty()) t.title = t.concern + " in " + t.target;
    t.priority = std::max(1, field_int(entry, "priority").value_or(1));
    tasks.push_back(std::move(t));
  }
  if (tasks.empty()) throw PlanParseError("plan block has no usable sub-task entries");

  std::sort(tasks.begin(), tasks.end(),
            [](const SubTask& a, const SubTask& b) { return a.index < b.index; });
  for (std::size_t i = 1; i < tasks.size(); ++i) {
    if (tasks[i].index == tasks[i - 1].index) {
      throw PlanParseError("duplicate sub-task index " + std::to_string(tasks[i].index));
    }
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i].index = static_cast<int>(i + 1);
  std::stable_sort(tasks.begin(), tasks.end(),
                   [](const SubTask& a, const SubTask& b) { return a.priority < b.priority; });
  return tasks;
}

std::optional<Calibration> parse_calibration(const std::string& text, const SubTask& task,
                                             const ContractInput& contract, std::string* problem) {
  const auto fail = [&](std::string why) -> std::optional<Calibration> {
    if (problem) *problem = std::move(why);
    return std::nullopt;
  };
  auto block = find_block(text, "finding");
  if (!block) return fail("no finding block");
  const TaggedEntry fields = parse_tagged_fields(block->body);

  Calibration out;
  const std::string verdict = to_lower(trim(first_value(fields, "verdict").value_or("confirmed")));
  if (verdict.starts_with("reject") || verdict == "none" || verdict == "false_positive") {
    out.rejected = true;
    out.confidence = field_confidence(fields, "confidence").value_or(0.0);
    return out;
  }

  auto confidence = field_confidence(fields, "confidence");
  if (!confidence) return fail("missing or non-numeric confidence");
  auto severity = first_value(fields, "severity");
  auto parsed_severity = severity ? parse_severity(*severity) : std::nullopt;
  if (!parsed_severity) return fail("missing or unknown severity");
  auto description = first_value(fields, "description");
  if (!description || trim(*description).empty()) return fail("missing description");
  auto start = field_int(fields, "start_line");
  if (!start) return fail("missing start_line");
  const int end = field_int(fields, "end_line").value_or(*start);

  Finding f;
  f.finding_id = "F" + std::to_string(task.index);
  f.vuln_type = to_lower(trim(first_value(fields, "vuln_type").value_or(task.concern)));
  if (f.vuln_type.empty()) f.vuln_type = task.concern;
  f.description = trim(*description);
  f.severity = *parsed_severity;
  f.confidence = *confidence;
  f.location.file = trim(first_value(fields, "file").value_or(source_file_name(contract)));
  f.location.start_line = *start;
  f.location.end_line = end;
  if (auto fn = first_value(fields, "function"); fn && !trim(*fn).empty()) {
    f.location.function_name = trim(*fn);
  }
  for (auto& e : all_values(fields, "evidence")) {
    if (!trim(e).empty()) f.evidence.push_back(trim(e));
  }
  f.origin_subtask = task.index;

  const int lines = count_lines(contract.source_code);
  if (f.location.start_line >= 1 && f.location.start_line <= lines && f.location.end_line > lines) {
    spdlog::warn("finding {} end_line {} clamped to {}", f.finding_id, f.location.end_line, lines);
    f.location.end_line = lines;
  }
  if (auto violations = validate_finding(f, contract.source_code); !violations.empty()) {
    return fail(violations.front());
  }
  out.confidence = f.confidence;
  out.finding = std::move(f);
  return out;
}

std::vector<Finding> merge_duplicates(std::vector<Finding> findings) {
  findings = rank_findings(std::move(findings));
  std::vector<Finding> merged;
  for (auto& f : findings) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const Finding& m) {
      return normalize_text(m.vuln_type) == normalize_text(f.vuln_type) &&
             m.location.overlaps(f.location);
    });
    if (it == merged.end()) {
      merged.push_back(std::move(f));
      continue;
    }
    it->location.start_line = std::min(it->location.start_line, f.location.start_line);
    it->location.end_line = std::max(it->location.end_line, f.location.end_line);
    if (!it->location.function_name) it->location.function_name = f.location.function_name;
    it->evidence.insert(it->evidence.end(), f.evidence.begin(), f.evidence.end());
    if (severity_rank(f.severity) > severity_rank(it->severity)) it->severity = f.severity;
    it->confidence = std::max(it->confidence, f.confidence);
  }
  return rank_findings(std::move(merged));
}

AuditEngine::AuditEngine(llm::Gateway& gateway, WorkflowConfig config,
                         const kb::KnowledgeIndex* index)
    : gateway_(gateway), config_(std::move(config)), index_(index) {
  config_.validate();
}

llm::CompletionRequest AuditEngine::request(std::string system, std::string user) const {
  llm::CompletionRequest req;
  req.model_id = config_.model_id;
  req.temperature = config_.temperature;
  req.max_tokens = config_.max_tokens;
  req.system_prompt = std::move(system);
  req.user_prompt = std::move(user);
  return req;
}

llm::Completion AuditEngine::ask(const llm::CompletionRequest& req, int& steps) {
  ++steps;
  return gateway_.cached_complete(req);
}

AnalysisResult AuditEngine::stage_a1(const ContractInput& contract,
                                     const std::optional<std::string>& hints) {
  if (trim(contract.source_code).empty()) throw InvalidRequest("contract source is empty");
  AnalysisResult out;
  auto req = request(config_.prompts.analysis, analysis_user(contract, hints));
  auto reply = ask(req, out.llm_steps);
  if (trim(reply.text).empty()) {
    req.user_prompt += "\nYour previous answer was empty. Provide the analysis.\n";
    reply = ask(req, out.llm_steps);
  }
  if (trim(reply.text).empty()) throw EmptyAnalysis("initial analysis is empty after retry");
  out.text = reply.text;
  return out;
}

PlanResult AuditEngine::stage_a2(const std::string& analysis, const ContractInput& contract) {
  if (trim(analysis).empty()) throw InvalidRequest("planning needs a non-empty analysis");
  PlanResult out;
  auto req = request(config_.prompts.planning, planning_user(analysis, contract));
  auto reply = ask(req, out.llm_steps);
  try {
    out.tasks = extract_subtasks(reply.text);
  } catch (const PlanParseError& e) {
    req.user_prompt += reformat_request(reply.text, e.what(), "subtasks");
    reply = ask(req, out.llm_steps);
    out.tasks = extract_subtasks(reply.text);
  }
  out.plan_text = reply.text;
  return out;
}

SubtaskResult AuditEngine::execute_subtask(const SubTask& task, const ContractInput& contract,
                                           const std::string& analysis) {
  SubtaskResult out;
  const auto review = ask(request(config_.prompts.review, review_user(task, contract, analysis)),
                          out.llm_steps);
  out.review = review.text;

  std::vector<kb::RetrievalHit> hits;
  if (config_.use_rag) {
    if (!index_) throw ConfigError("retrieval enabled without a knowledge index");
    kb::QueryOptions qo = config_.query;
    qo.k = config_.retrieval_k;
    hits = index_->retrieve(kb::formulate_query(task, out.review, qo));
    for (const auto& h : hits) out.retrieved.push_back(h.chunk->chunk_id);
  }

  auto req = request(calibration_system(config_.prompts, task),
                     calibration_user(task, out.review, contract, hits));
  auto reply = ask(req, out.llm_steps);
  std::string problem;
  auto parsed = parse_calibration(reply.text, task, contract, &problem);
  if (!parsed) {
    req.user_prompt += reformat_request(reply.text, problem, "finding");
    reply = ask(req, out.llm_steps);
    parsed = parse_calibration(reply.text, task, contract, &problem);
  }
  out.calibration = reply.text;
  if (!parsed) {
    throw FindingParseError("sub-task " + std::to_string(task.index) + ": " + problem);
  }
  out.confidence = parsed->confidence;
  out.rejected = parsed->rejected;
  if (!parsed->rejected && parsed->confidence >= config_.threshold_confidence) {
    Finding f = std::move(*parsed->finding);
    for (const auto& h : hits) {
      f.evidence.push_back("reference: " + h.chunk->title + " <" + h.chunk->source_url + ">");
    }
    out.finding = std::move(f);
  }
  return out;
}

SynthesisResult AuditEngine::stage_a4(std::vector<Finding> findings) {
  SynthesisResult out;
  out.findings = merge_duplicates(std::move(findings));
  if (out.findings.empty()) {
    out.synthesis_text = "No findings passed calibration.";
    out.summary = "No findings above the confidence threshold.";
    return out;
  }

  auto req = request(config_.prompts.synthesis, synthesis_user(out.findings));
  const auto apply = [&](const std::string& text, std::string& problem) -> bool {
    auto block = find_block(text, "synthesis");
    if (!block) {
      problem = "no synthesis block";
      return false;
    }
    std::map<std::string, Severity> revised;
    for (const auto& entry : parse_tagged_entries(block->body)) {
      auto id = first_value(entry, "finding_id");
      auto sev = first_value(entry, "severity");
      if (!id || !sev) continue;
      auto parsed = parse_severity(*sev);
      if (!parsed) {
        problem = "unknown severity '" + *sev + "'";
        return false;
      }
      revised[trim(*id)] = *parsed;
    }
    for (auto& f : out.findings) {
      if (auto it = revised.find(f.finding_id); it != revised.end()) f.severity = it->second;
    }
    return true;
  };

  auto reply = ask(req, out.llm_steps);
  std::string problem;
  if (!apply(reply.text, problem)) {
    req.user_prompt += reformat_request(reply.text, problem, "synthesis");
    reply = ask(req, out.llm_steps);
    if (!apply(reply.text, problem)) throw SynthesisParseError(problem);
  }
  out.synthesis_text = reply.text;
  if (auto summary = find_block(reply.text, "summary"); summary && !trim(summary->body).empty()) {
    out.summary = collapse_whitespace(summary->body);
  } else {
    out.summary = std::to_string(out.findings.size()) + " finding(s) above the confidence threshold.";
  }
  out.findings = rank_findings(std::move(out.findings));
  return out;
}

std::optional<std::string> AuditEngine::static_hints(const ContractInput& contract) const {
  if (!config_.use_static) return std::nullopt;
  if (!contract.static_report_path) {
    spdlog::warn("static hints requested but no static report given for {}", contract.contract_id);
    return std::nullopt;
  }
  const auto report = load_static_report(*contract.static_report_path);
  return to_hints(report.findings, config_.hints);
}

AuditReport AuditEngine::run_audit(const ContractInput& contract, RunTrace* trace) {
  RunTrace local;
  RunTrace& tr = trace ? *trace : local;
  tr = RunTrace{};
  AuditReport& report = tr.partial;
  report.contract_id = contract.contract_id;
  report.run_metadata.model_id = config_.model_id;
  report.run_metadata.started_at = utc_timestamp();
  report.run_metadata.config_hash = config_.digest();

  auto record = [&](StageRecord r) {
    report.run_metadata.step_count += r.llm_steps;
    tr.records.push_back(std::move(r));
  };

  auto t0 = Clock::now();
  const auto hints = static_hints(contract);
  auto a1 = stage_a1(contract, hints);
  report.initial_analysis = a1.text;
  {
    json output{{"analysis", a1.text}};
    if (hints) output["static_hints"] = *hints;
    record({StageId::A1, std::nullopt,
            stage_digest({contract.source_code, hints.value_or(""), config_.prompts.analysis}),
            std::move(output), a1.llm_steps, since(t0)});
  }

  t0 = Clock::now();
  auto a2 = stage_a2(a1.text, contract);
  report.plan_text = a2.plan_text;
  report.plan = a2.tasks;
  record({StageId::A2, std::nullopt,
          stage_digest({a1.text, contract.source_code, config_.prompts.planning}),
          json{{"plan_text", a2.plan_text}, {"subtasks", a2.tasks}}, a2.llm_steps, since(t0)});

  std::vector<Finding> kept;
  const auto a3_record = [&](const SubTask& task, const SubtaskResult& r,
                             std::chrono::milliseconds elapsed) {
    json output{{"review", r.review},
                {"calibration", r.calibration},
                {"confidence", r.confidence},
                {"rejected", r.rejected},
                {"kept", r.finding.has_value()},
                {"finding", r.finding ? json(*r.finding) : json(nullptr)}};
    if (!r.retrieved.empty()) output["retrieved"] = r.retrieved;
    record({StageId::A3, task.index,
            stage_digest({task.title, task.target, task.concern, a1.text, contract.source_code}),
            std::move(output), r.llm_steps, elapsed});
    if (r.finding) kept.push_back(*r.finding);
  };

  const auto& tasks = a2.tasks;
  const std::size_t workers = static_cast<std::size_t>(config_.parallel_workers);
  if (workers <= 1) {
    for (const auto& task : tasks) {
      t0 = Clock::now();
      auto r = execute_subtask(task, contract, a1.text);
      a3_record(task, r, since(t0));
    }
  } else {
    for (std::size_t begin = 0; begin < tasks.size(); begin += workers) {
      const std::size_t end = std::min(tasks.size(), begin + workers);
      std::vector<std::future<std::pair<SubtaskResult, std::chrono::milliseconds>>> futures;
      for (std::size_t i = begin; i < end; ++i) {
        futures.push_back(std::async(std::launch::async, [&, i] {
          const auto start = Clock::now();
          auto r = execute_subtask(tasks[i], contract, a1.text);
          return std::make_pair(std::move(r), since(start));
        }));
      }
      for (std::size_t i = begin; i < end; ++i) {
        auto [r, elapsed] = futures[i - begin].get();
        a3_record(tasks[i], r, elapsed);
      }
    }
  }

  t0 = Clock::now();
  std::string a4_digest;
  for (const auto& f : kept) a4_digest += json(f).dump();
  auto a4 = stage_a4(kept);
  report.findings = a4.findings;
  report.summary = a4.summary;
  record({StageId::A4, std::nullopt, sha256_hex(a4_digest),
          json{{"synthesis", a4.synthesis_text}, {"findings", a4.findings}}, a4.llm_steps,
          since(t0)});

  t0 = Clock::now();
  report.run_metadata.finished_at = utc_timestamp();
  record({StageId::A5, std::nullopt, sha256_hex(json(report.findings).dump()),
          json{{"findings", report.findings.size()}, {"summary", report.summary}}, 0, since(t0)});
  return report;
}

}  // namespace auditflow::workflow
