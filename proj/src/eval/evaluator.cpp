#include "auditflow/eval/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "auditflow/blocks.hpp"
#include "auditflow/errors.hpp"
#include "auditflow/util.hpp"

namespace auditflow::eval {

using nlohmann::json;

std::string_view to_string(MatchCategory c) {
  switch (c) {
    case MatchCategory::Exact: return "Exact";
    case MatchCategory::Partial: return "Partial";
    case MatchCategory::Incorrect: return "Incorrect";
    case MatchCategory::Missed: return "Missed";
    case MatchCategory::Spurious: return "Spurious";
  }
  return "Incorrect";
}

std::string_view to_string(LocationLevel l) {
  switch (l) {
    case LocationLevel::ExactLine: return "exact_line";
    case LocationLevel::Function: return "function";
    case LocationLevel::Overlap: return "overlap";
    case LocationLevel::None: return "none";
  }
  return "none";
}

std::optional<LocationLevel> parse_location_level(std::string_view text) {
  std::string t = to_lower(trim(text));
  std::replace(t.begin(), t.end(), ' ', '_');
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "exact_line" || t == "exact") return LocationLevel::ExactLine;
  if (t == "function") return LocationLevel::Function;
  if (t == "overlap") return LocationLevel::Overlap;
  if (t == "none") return LocationLevel::None;
  return std::nullopt;
}

MatchCategory categorize(const MatchDimensions& d) {
  const double s = d.description_similarity;
  const auto loc = d.location_level;
  if (d.type_match && s >= 0.8 &&
      (loc == LocationLevel::ExactLine || loc == LocationLevel::Function)) {
    return MatchCategory::Exact;
  }
  if (d.type_match && s >= 0.5 && loc != LocationLevel::None) return MatchCategory::Partial;
  if (!d.type_match && s >= 0.8 && loc == LocationLevel::ExactLine) return MatchCategory::Partial;
  return MatchCategory::Incorrect;
}

bool is_true_positive(MatchCategory c, bool strict) {
  return c == MatchCategory::Exact || (!strict && c == MatchCategory::Partial);
}

void to_json(json& j, const MatchResult& m) {
  j = json{{"produced_id", m.produced_id ? json(*m.produced_id) : json(nullptr)},
           {"gold_id", m.gold_id ? json(*m.gold_id) : json(nullptr)},
           {"produced_rank", m.produced_rank ? json(*m.produced_rank) : json(nullptr)},
           {"category", to_string(m.category)},
           {"dimensions",
            {{"type_match", m.dimensions.type_match},
             {"description_similarity", m.dimensions.description_similarity},
             {"location_level", to_string(m.dimensions.location_level)}}},
           {"rationale", m.rationale}};
}

namespace {

std::set<std::string> word_set(const std::string& text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.insert(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(std::move(cur));
  return out;
}

std::string alnum_lower(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

bool same_file(const std::string& a, const std::string& b) {
  if (a.empty() || b.empty()) return true;
  return to_lower(std::filesystem::path(a).filename().string()) ==
         to_lower(std::filesystem::path(b).filename().string());
}

}  // namespace

double lexical_similarity(const std::string& a, const std::string& b) {
  const auto wa = word_set(a);
  const auto wb = word_set(b);
  if (wa.empty() && wb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& w : wa) common += wb.count(w);
  return static_cast<double>(common) / static_cast<double>(wa.size() + wb.size() - common);
}

bool same_vuln_type(std::string_view a, std::string_view b) {
  const auto na = alnum_lower(a);
  return !na.empty() && na == alnum_lower(b);
}

LocationLevel locate(const CodeLocation& p, const CodeLocation& g) {
  if (!same_file(p.file, g.file)) return LocationLevel::None;
  if (p.start_line == g.start_line && p.end_line == g.end_line) return LocationLevel::ExactLine;
  if (p.function_name && g.function_name &&
      to_lower(*p.function_name) == to_lower(*g.function_name)) {
    return LocationLevel::Function;
  }
  if (p.start_line <= g.end_line && g.start_line <= p.end_line) return LocationLevel::Overlap;
  return LocationLevel::None;
}

RuleJudge::RuleJudge(TextSimilarity similarity) : similarity_(std::move(similarity)) {}

Assessment RuleJudge::assess(const Finding& produced, const GroundTruthFinding& gold) {
  Assessment a;
  a.dimensions.type_match = same_vuln_type(produced.vuln_type, gold.vuln_type);
  a.dimensions.description_similarity =
      std::clamp(similarity_(produced.description, gold.description), 0.0, 1.0);
  a.dimensions.location_level = locate(produced.location, gold.location);
  a.rationale = std::string("rule: type ") + (a.dimensions.type_match ? "matches" : "differs") +
                ", location " + std::string(to_string(a.dimensions.location_level));
  return a;
}

std::optional<Assessment> parse_assessment(std::string_view text) {
  TaggedEntry fields;
  if (auto block = find_block(text, "assessment")) {
    fields = parse_tagged_fields(block->body);
  } else {
    fields = parse_tagged_fields(text);
  }
  auto type = first_value(fields, "type_match");
  auto sim = first_value(fields, "description_similarity");
  auto loc = first_value(fields, "location");
  if (!loc) loc = first_value(fields, "location_level");
  if (!type || !sim || !loc) return std::nullopt;

  Assessment a;
  const std::string t = to_lower(trim(*type));
  if (t == "yes" || t == "true") {
    a.dimensions.type_match = true;
  } else if (t == "no" || t == "false") {
    a.dimensions.type_match = false;
  } else {
    return std::nullopt;
  }
  const std::string s = trim(*sim);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr == s.data() || !std::isfinite(value) || value < 0.0 || value > 1.0) {
    return std::nullopt;
  }
  a.dimensions.description_similarity = value;
  auto level = parse_location_level(*loc);
  if (!level) return std::nullopt;
  a.dimensions.location_level = *level;
  a.rationale = trim(first_value(fields, "rationale").value_or(""));
  return a;
}

namespace {

constexpr const char* kJudgeSystem =
    "You grade a vulnerability reported by an automated smart contract audit against one "
    "expert-validated vulnerability. Decide whether the vulnerability types agree, how similar "
    "the descriptions are in substance (0 = unrelated, 1 = same issue and root cause), and how "
    "precisely the reported location matches: exact_line, function (same function, different "
    "lines), overlap (overlapping lines only) or none. Answer only with a fenced block:\n"
    "```assessment\ntype_match: yes | no\ndescription_similarity: <0 to 1>\n"
    "location: exact_line | function | overlap | none\nrationale: <one sentence>\n```";

std::string describe(const std::string& id, const std::string& type, const std::string& desc,
                     const CodeLocation& loc, Severity sev) {
  std::string out = "id: " + id + "\ntype: " + type + "\nseverity: " +
                    std::string(to_string(sev)) + "\nlocation: " + loc.file + ":" +
                    std::to_string(loc.start_line) + "-" + std::to_string(loc.end_line);
  if (loc.function_name) out += " (" + *loc.function_name + ")";
  out += "\ndescription: " + collapse_whitespace(desc) + "\n";
  return out;
}

}  // namespace

LlmJudge::LlmJudge(llm::Gateway& gateway, std::string model_id)
    : gateway_(gateway), model_id_(std::move(model_id)) {}

Assessment LlmJudge::assess(const Finding& produced, const GroundTruthFinding& gold) {
  llm::CompletionRequest req;
  req.model_id = model_id_;
  req.temperature = 0.0;
  req.max_tokens = 512;
  req.system_prompt = kJudgeSystem;
  req.user_prompt = "Reported finding:\n" +
                    describe(produced.finding_id, produced.vuln_type, produced.description,
                             produced.location, produced.severity) +
                    "\nExpert finding:\n" +
                    describe(gold.finding_id, gold.vuln_type, gold.description, gold.location,
                             gold.severity);
  auto reply = gateway_.cached_complete(req);
  if (auto a = parse_assessment(reply.text)) return *a;
  req.user_prompt += "\nYour previous answer could not be parsed:\n" + reply.text +
                     "\nReformat your answer as the fenced assessment block only.\n";
  reply = gateway_.cached_complete(req);
  if (auto a = parse_assessment(reply.text)) return *a;
  throw JudgeParseError("match assessment unparseable for " + produced.finding_id + " vs " +
                        gold.finding_id);
}

std::vector<MatchResult> pair_findings(const std::vector<Finding>& produced,
                                       const std::vector<GroundTruthFinding>& gold,
                                       MatchJudge& judge) {
  std::vector<MatchResult> out;
  std::vector<bool> claimed(gold.size(), false);
  const auto strength = [](MatchCategory c) {
    return c == MatchCategory::Exact ? 2 : c == MatchCategory::Partial ? 1 : 0;
  };

  for (std::size_t p = 0; p < produced.size(); ++p) {
    std::optional<std::size_t> best;
    Assessment best_assessment;
    MatchCategory best_category = MatchCategory::Incorrect;
    for (std::size_t g = 0; g < gold.size(); ++g) {
      if (claimed[g]) continue;
      Assessment a = judge.assess(produced[p], gold[g]);
      const MatchCategory c = categorize(a.dimensions);
      bool better = !best;
      if (!better) {
        const auto& bd = best_assessment.dimensions;
        const auto& d = a.dimensions;
        if (strength(c) != strength(best_category)) {
          better = strength(c) > strength(best_category);
        } else if (d.description_similarity != bd.description_similarity) {
          better = d.description_similarity > bd.description_similarity;
        } else if (d.type_match != bd.type_match) {
          better = d.type_match;
        } else if (d.location_level != bd.location_level) {
          better = d.location_level < bd.location_level;
        } else {
          better = gold[g].finding_id < gold[*best].finding_id;
        }
      }
      if (better) {
        best = g;
        best_assessment = std::move(a);
        best_category = c;
      }
    }

    MatchResult m;
    m.produced_id = produced[p].finding_id;
    m.produced_rank = static_cast<int>(p + 1);
    if (best && strength(best_category) > 0) {
      claimed[*best] = true;
      m.gold_id = gold[*best].finding_id;
      m.category = best_category;
      m.dimensions = best_assessment.dimensions;
      m.rationale = best_assessment.rationale;
    } else {
      m.category = MatchCategory::Spurious;
      if (best) {
        m.dimensions = best_assessment.dimensions;
        m.rationale = "closest expert finding " + gold[*best].finding_id + " judged " +
                      std::string(to_string(best_category));
      } else {
        m.rationale = "no expert finding left to match";
      }
    }
    out.push_back(std::move(m));
  }

  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (claimed[g]) continue;
    MatchResult m;
    m.gold_id = gold[g].finding_id;
    m.category = MatchCategory::Missed;
    m.rationale = "no reported finding matched";
    out.push_back(std::move(m));
  }
  return out;
}

EvalSummary evaluate(const std::vector<AuditReport>& reports,
                     const std::map<std::string, std::vector<GroundTruthFinding>>& gold,
                     MatchJudge& judge, const EvalOptions& options) {
  EvalSummary summary;
  summary.options = options;

  std::map<std::string, const AuditReport*> by_id;
  for (const auto& r : reports) by_id[r.contract_id] = &r;
  std::set<std::string> ids;
  for (const auto& [id, _] : gold) ids.insert(id);
  for (const auto& [id, _] : by_id) ids.insert(id);

  static const std::vector<GroundTruthFinding> kNoGold;
  std::vector<std::optional<int>> first_ranks;
  std::vector<std::optional<int>> gold_ranks;
  double ap_sum = 0.0;
  int produced_total = 0;
  int reports_seen = 0;

  for (const auto& id : ids) {
    ContractEval ce;
    ce.contract_id = id;
    auto rit = by_id.find(id);
    const std::vector<Finding> produced =
        rit != by_id.end() ? rank_findings(rit->second->findings) : std::vector<Finding>{};
    auto git = gold.find(id);
    const auto& gold_list = git != gold.end() ? git->second : kNoGold;
    ce.produced = static_cast<int>(produced.size());
    ce.gold = static_cast<int>(gold_list.size());
    ce.matches = pair_findings(produced, gold_list, judge);

    std::vector<int> rels(produced.size(), 0);
    std::map<std::string, int> gold_rank;
    for (const auto& m : ce.matches) {
      if (!m.produced_rank) continue;
      if (is_true_positive(m.category, options.strict)) {
        rels[static_cast<std::size_t>(*m.produced_rank - 1)] = 1;
        gold_rank[*m.gold_id] = *m.produced_rank;
        ++ce.tp;
        if (!ce.first_tp_rank || *m.produced_rank < *ce.first_tp_rank) {
          ce.first_tp_rank = m.produced_rank;
        }
      } else {
        ++ce.fp;
      }
    }
    ce.missed = ce.gold - ce.tp;
    ce.average_precision = rels.empty() ? 0.0 : average_precision(rels, options.ap_mode);

    if (rit != by_id.end()) {
      ++reports_seen;
      produced_total += ce.produced;
    }
    if (!gold_list.empty()) {
      first_ranks.push_back(ce.first_tp_rank);
      ap_sum += ce.average_precision;
      for (const auto& g : gold_list) {
        auto it = gold_rank.find(g.finding_id);
        gold_ranks.push_back(it == gold_rank.end() ? std::nullopt : std::optional<int>(it->second));
      }
    }
    summary.tp += ce.tp;
    summary.fp += ce.fp;
    summary.missed += ce.missed;
    summary.contracts.push_back(std::move(ce));
  }

  if (first_ranks.empty()) throw EmptyQuerySet("no contract has ground-truth findings");
  summary.mrr = mrr(first_ranks);
  summary.map = ap_sum / static_cast<double>(first_ranks.size());
  for (int n : options.top_ns) summary.top_n[n] = top_n_accuracy(gold_ranks, n);
  summary.top_max = top_n_accuracy(gold_ranks, std::nullopt);
  summary.avg_outputs = reports_seen ? static_cast<double>(produced_total) / reports_seen : 0.0;
  return summary;
}

void to_json(json& j, const EvalSummary& s) {
  json top = json::object();
  for (const auto& [n, v] : s.top_n) top["top_" + std::to_string(n)] = v;
  top["top_max"] = s.top_max;
  json contracts = json::array();
  for (const auto& c : s.contracts) {
    contracts.push_back({{"contract_id", c.contract_id},
                         {"produced", c.produced},
                         {"gold", c.gold},
                         {"tp", c.tp},
                         {"fp", c.fp},
                         {"missed", c.missed},
                         {"first_tp_rank", c.first_tp_rank ? json(*c.first_tp_rank) : json(nullptr)},
                         {"average_precision", c.average_precision},
                         {"matches", c.matches}});
  }
  j = json{{"summary",
            {{"top_n", top},
             {"mrr", s.mrr},
             {"map", s.map},
             {"avg_outputs", s.avg_outputs},
             {"tp", s.tp},
             {"fp", s.fp},
             {"missed", s.missed},
             {"strict", s.options.strict},
             {"ap_mode", s.options.ap_mode == ApMode::ListLength ? "list_length" : "standard"}}},
           {"contracts", contracts}};
}

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string to_csv(const EvalSummary& s) {
  std::ostringstream out;
  out << "scope";
  for (const auto& [n, _] : s.top_n) out << ",top_" << n;
  out << ",top_max,mrr,map,avg_outputs,tp,fp,missed\n";
  out << "all";
  for (const auto& [_, v] : s.top_n) out << "," << fmt6(v);
  out << "," << fmt6(s.top_max) << "," << fmt6(s.mrr) << "," << fmt6(s.map) << ","
      << fmt6(s.avg_outputs) << "," << s.tp << "," << s.fp << "," << s.missed << "\n";
  for (const auto& c : s.contracts) {
    std::vector<std::optional<int>> ranks;
    for (const auto& m : c.matches) {
      if (!m.gold_id) continue;
      ranks.push_back(is_true_positive(m.category, s.options.strict) ? m.produced_rank
                                                                      : std::nullopt);
    }
    out << c.contract_id;
    for (const auto& [n, _] : s.top_n) {
      out << "," << (ranks.empty() ? std::string("") : fmt6(top_n_accuracy(ranks, n)));
    }
    out << "," << (ranks.empty() ? std::string("") : fmt6(top_n_accuracy(ranks, std::nullopt)))
        << "," << (c.gold ? fmt6(c.first_tp_rank ? 1.0 / *c.first_tp_rank : 0.0) : "") << ","
        << (c.gold ? fmt6(c.average_precision) : "") << "," << fmt6(c.produced) << "," << c.tp
        << "," << c.fp << "," << c.missed << "\n";
  }
  return out.str();
}

std::map<std::string, std::vector<GroundTruthFinding>> parse_ground_truth(const json& doc) {
  std::map<std::string, std::vector<GroundTruthFinding>> out;
  const auto one = [&](const json& c) {
    if (!c.is_object() || !c.contains("contract_id") || !c.contains("findings")) {
      throw SchemaError("ground truth entry needs contract_id and findings");
    }
    auto& list = out[c["contract_id"].get<std::string>()];
    for (const auto& f : c["findings"]) list.push_back(f.get<GroundTruthFinding>());
  };
  try {
    if (doc.is_object() && doc.contains("contracts")) {
      for (const auto& c : doc["contracts"]) one(c);
    } else {
      one(doc);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("ground truth: ") + e.what());
  }
  return out;
}

}  // namespace auditflow::eval
