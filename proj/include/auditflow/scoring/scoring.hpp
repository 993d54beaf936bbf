#pragma once

// Multi-criteria instruction scoring.
//
//   combined = w_exec * f_exec + w_log * f_log
//   f_exec   = scale * (w_cov * f_coverage + w_det * f_detail)
//
// f_log is the mean per-token log-likelihood of the model's own output (a
// value <= 0). `scale` is 1 for optimizer use and 100 to reproduce published
// score tables where f_exec is expressed in percent.

#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "auditflow/llm/gateway.hpp"

namespace auditflow::scoring {

// --- complexity -----------------------------------------------------------

int token_count(std::string_view text);
// Maximal runs of . ! ? that end a word; at least 1 for non-blank text.
int sentence_count(std::string_view text);
// 0.7 * TokenCount + 0.3 * SentenceCount.
double complexity(std::string_view text);

// --- structured components ------------------------------------------------

enum class Component { Functions, Variables, Modifiers, Events, Questions };
inline constexpr Component kAllComponents[] = {Component::Functions, Component::Variables,
                                               Component::Modifiers, Component::Events,
                                               Component::Questions};
std::string_view component_name(Component c);

struct ComponentSets {
  std::set<std::string> functions;
  std::set<std::string> variables;
  std::set<std::string> modifiers;
  std::set<std::string> events;
  std::set<std::string> questions;
  // "<component>/<key>" -> description text as written in the analysis.
  std::map<std::string, std::string> descriptions;

  const std::set<std::string>& get(Component c) const;
  std::set<std::string>& get(Component c);
  bool all_empty() const;
};

// Parses ```functions / ```variables / ```modifiers / ```events / ```questions
// fenced sections, one "signature | description" item per line.
ComponentSets extract_components(std::string_view analysis);
// Normalized key for one item signature of the given component.
std::string component_key(Component c, std::string_view signature);

struct CoverageWeights {
  double functions = 0.4;
  double variables = 0.25;
  double modifiers = 0.2;
  double events = 0.15;
  double questions = 0.0;

  double of(Component c) const;
};

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

PrfScore prf(std::size_t overlap, std::size_t out_size, std::size_t gold_size);

// Weighted F1 over components. Components whose gold set is empty are skipped
// and the remaining weights renormalized; returns 0 if nothing remains.
double coverage_f1(const ComponentSets& out, const ComponentSets& gold,
                   const CoverageWeights& weights = {});

// --- judge rubric ---------------------------------------------------------

struct RubricVerdict {
  int correctness = 0;
  int completeness = 0;
  int relevance = 0;

  // (correctness + completeness + relevance) / 15.
  double score() const;
};

// nullopt if any axis is missing or outside 1..5.
std::optional<RubricVerdict> parse_verdict(std::string_view text);

struct JudgeOptions {
  std::string model_id = "judge";
  double temperature = 0.0;
  int max_tokens = 256;
};

class DetailJudge {
 public:
  DetailJudge(llm::Gateway& gateway, JudgeOptions options = {});

  // Mean rubric score / 5 in [0, 1]. One reformat retry, then JudgeParseError.
  double detail_score(std::string_view component, std::string_view out_desc,
                      std::string_view gold_desc);

 private:
  llm::Gateway& gateway_;
  JudgeOptions options_;
};

// --- likelihood -----------------------------------------------------------

// Mean token log-likelihood (<= 0). MissingLogprobs if absent or empty.
double f_log_score(const llm::Completion& completion);

// --- combination ----------------------------------------------------------

struct ScoreWeights {
  double w_exec = 0.7;
  double w_log = 0.3;
  double w_cov = 0.6;
  double w_det = 0.4;
  double exec_scale = 1.0;
  // Contribution used for f_log when the provider returns no logprobs.
  double missing_logprob_value = 0.0;

  static ScoreWeights table_compat() {
    ScoreWeights w;
    w.exec_scale = 100.0;
    return w;
  }
};

double combine(double f_exec, double f_log, const ScoreWeights& w);
double exec_score(double f_coverage, double f_detail, const ScoreWeights& w);

struct ScoreBreakdown {
  double f_exec = 0.0;
  double f_log = 0.0;
  double f_coverage = 0.0;
  double f_detail = 0.0;
  double combined = 0.0;
  ScoreWeights weights;
  bool logprobs_missing = false;
  int matched_components = 0;
};

void to_json(nlohmann::json& j, const ScoreBreakdown& s);

// A contract paired with the expert analysis it should produce.
struct TaskSample {
  std::string id;
  std::string contract;
  std::string expected;  // expert analysis in the component-section format
  ComponentSets expected_components;

  // Parses `expected`; SchemaError when every component set is empty.
  static TaskSample make(std::string id, std::string contract, std::string expected);
};

struct ScorerOptions {
  std::string model_id = "auditor";
  double temperature = 0.0;
  int max_tokens = 2048;
  ScoreWeights weights;
  CoverageWeights coverage;
};

// f(rho, c, A): runs the model on (instruction, contract) and scores the
// output against the expert analysis.
class InstructionScorer {
 public:
  InstructionScorer(llm::Gateway& gateway, DetailJudge& judge, ScorerOptions options = {});

  ScoreBreakdown combined_score(const std::string& instruction, const TaskSample& sample);
  const ScorerOptions& options() const { return options_; }

 private:
  llm::Gateway& gateway_;
  DetailJudge& judge_;
  ScorerOptions options_;
};

// --- similarity -----------------------------------------------------------

// Cosine similarity of embeddings, memoized per text. Identical texts score
// exactly 1.
class EmbeddingSimilarity {
 public:
  explicit EmbeddingSimilarity(llm::Gateway& gateway) : gateway_(gateway) {}

  double similarity(const std::string& a, const std::string& b);
  const std::vector<double>& embedding(const std::string& text);

 private:
  llm::Gateway& gateway_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::vector<double>> memo_;
};

}  // namespace auditflow::scoring
