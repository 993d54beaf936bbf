#include "auditflow/scoring/scoring.hpp"

#include <charconv>

#include "auditflow/blocks.hpp"
#include "auditflow/errors.hpp"
#include "auditflow/kernels/kernels.hpp"

namespace auditflow::scoring {

double RubricVerdict::score() const {
  return static_cast<double>(correctness + completeness + relevance) / 15.0;
}

namespace {

std::optional<int> parse_axis(const TaggedEntry& fields, const std::string& key) {
  auto v = first_value(fields, key);
  if (!v) return std::nullopt;
  int out = 0;
  const char* b = v->data();
  const char* e = b + v->size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  if (ec != std::errc{} || out < 1 || out > 5) return std::nullopt;
  // Allow "4/5" or "4 (mostly accurate)" but not "45".
  if (ptr != e && std::isdigit(static_cast<unsigned char>(*ptr))) return std::nullopt;
  return out;
}

constexpr const char* kJudgeSystem =
    "You are a meticulous smart contract auditor acting as a grader. Compare a "
    "model-written description of one contract component against the expert "
    "description and score three axes on a 1-5 scale:\n"
    "- correctness: are the stated facts (visibility, parameters, types, behaviour) "
    "accurate with respect to the expert description?\n"
    "- completeness: does it mention every parameter, return value and effect the "
    "expert lists?\n"
    "- relevance: is it focused and free of unnecessary or unrelated detail?\n"
    "Answer only with a fenced block:\n"
    "```verdict\ncorrectness: <1-5>\ncompleteness: <1-5>\nrelevance: <1-5>\n```";

}  // namespace

std::optional<RubricVerdict> parse_verdict(std::string_view text) {
  TaggedEntry fields;
  if (auto block = find_block(text, "verdict")) {
    fields = parse_tagged_fields(block->body);
  } else {
    fields = parse_tagged_fields(text);
  }
  auto c = parse_axis(fields, "correctness");
  auto m = parse_axis(fields, "completeness");
  auto r = parse_axis(fields, "relevance");
  if (!c || !m || !r) return std::nullopt;
  return RubricVerdict{*c, *m, *r};
}

DetailJudge::DetailJudge(llm::Gateway& gateway, JudgeOptions options)
    : gateway_(gateway), options_(std::move(options)) {}

double DetailJudge::detail_score(std::string_view component, std::string_view out_desc,
                                 std::string_view gold_desc) {
  if (out_desc.empty() || gold_desc.empty()) {
    throw InvalidRequest("detail_score needs both descriptions");
  }
  llm::CompletionRequest req;
  req.model_id = options_.model_id;
  req.temperature = options_.temperature;
  req.max_tokens = options_.max_tokens;
  req.system_prompt = kJudgeSystem;
  req.user_prompt = "Component: " + std::string(component) +
                    "\n\nModel description:\n" + std::string(out_desc) +
                    "\n\nExpert description:\n" + std::string(gold_desc) + "\n";
  auto reply = gateway_.cached_complete(req);
  if (auto v = parse_verdict(reply.text)) return v->score();

  req.user_prompt += "\nYour previous answer could not be parsed:\n" + reply.text +
                     "\nReformat your answer as the fenced verdict block only.\n";
  reply = gateway_.cached_complete(req);
  if (auto v = parse_verdict(reply.text)) return v->score();
  throw JudgeParseError("judge verdict unparseable after retry for component " +
                        std::string(component));
}

double f_log_score(const llm::Completion& completion) {
  if (!completion.token_logprobs || completion.token_logprobs->empty()) {
    throw MissingLogprobs("completion carries no token logprobs");
  }
  double sum = 0.0;
  for (double lp : *completion.token_logprobs) sum += lp;
  return sum / static_cast<double>(completion.token_logprobs->size());
}

double combine(double f_exec, double f_log, const ScoreWeights& w) {
  return w.w_exec * f_exec + w.w_log * f_log;
}

double exec_score(double f_coverage, double f_detail, const ScoreWeights& w) {
  return w.exec_scale * (w.w_cov * f_coverage + w.w_det * f_detail);
}

void to_json(nlohmann::json& j, const ScoreBreakdown& s) {
  j = nlohmann::json{{"f_exec", s.f_exec},
                     {"f_log", s.f_log},
                     {"f_coverage", s.f_coverage},
                     {"f_detail", s.f_detail},
                     {"combined", s.combined},
                     {"logprobs_missing", s.logprobs_missing},
                     {"matched_components", s.matched_components},
                     {"weights",
                      {{"w_exec", s.weights.w_exec},
                       {"w_log", s.weights.w_log},
                       {"w_cov", s.weights.w_cov},
                       {"w_det", s.weights.w_det},
                       {"exec_scale", s.weights.exec_scale}}}};
}

TaskSample TaskSample::make(std::string id, std::string contract, std::string expected) {
  TaskSample s;
  s.id = std::move(id);
  s.contract = std::move(contract);
  s.expected = std::move(expected);
  s.expected_components = extract_components(s.expected);
  if (s.expected_components.all_empty()) {
    throw SchemaError("task sample " + s.id + " has no expected components");
  }
  return s;
}

InstructionScorer::InstructionScorer(llm::Gateway& gateway, DetailJudge& judge,
                                     ScorerOptions options)
    : gateway_(gateway), judge_(judge), options_(std::move(options)) {}

ScoreBreakdown InstructionScorer::combined_score(const std::string& instruction,
                                                 const TaskSample& sample) {
  llm::CompletionRequest req;
  req.model_id = options_.model_id;
  req.temperature = options_.temperature;
  req.max_tokens = options_.max_tokens;
  req.want_logprobs = true;
  req.system_prompt = instruction;
  req.user_prompt = sample.contract;
  const auto completion = gateway_.cached_complete(req);

  ScoreBreakdown out;
  out.weights = options_.weights;
  const ComponentSets produced = extract_components(completion.text);
  out.f_coverage = coverage_f1(produced, sample.expected_components, options_.coverage);

  double detail_sum = 0.0;
  for (Component c : kAllComponents) {
    if (options_.coverage.of(c) <= 0.0) continue;
    const std::string prefix = std::string(component_name(c)) + "/";
    for (const auto& key : produced.get(c)) {
      if (!sample.expected_components.get(c).count(key)) continue;
      auto ours = produced.descriptions.find(prefix + key);
      auto gold = sample.expected_components.descriptions.find(prefix + key);
      if (ours == produced.descriptions.end() ||
          gold == sample.expected_components.descriptions.end()) {
        continue;
      }
      detail_sum += judge_.detail_score(prefix + key, ours->second, gold->second);
      ++out.matched_components;
    }
  }
  out.f_detail = out.matched_components > 0 ? detail_sum / out.matched_components : 0.0;
  out.f_exec = exec_score(out.f_coverage, out.f_detail, out.weights);

  if (completion.token_logprobs && !completion.token_logprobs->empty()) {
    out.f_log = f_log_score(completion);
  } else {
    out.f_log = out.weights.missing_logprob_value;
    out.logprobs_missing = true;
  }
  out.combined = combine(out.f_exec, out.f_log, out.weights);
  return out;
}

const std::vector<double>& EmbeddingSimilarity::embedding(const std::string& text) {
  {
    std::lock_guard lock(mutex_);
    auto it = memo_.find(text);
    if (it != memo_.end()) return it->second;
  }
  auto v = gateway_.embed_one(text);
  std::lock_guard lock(mutex_);
  return memo_.try_emplace(text, std::move(v.values)).first->second;
}

double EmbeddingSimilarity::similarity(const std::string& a, const std::string& b) {
  if (a == b) return 1.0;
  const auto& va = embedding(a);
  const auto& vb = embedding(b);
  if (va.size() != vb.size()) throw DimensionMismatch("similarity: embedding dimensions differ");
  return kernels::cosine(va, vb);
}

}  // namespace auditflow::scoring
