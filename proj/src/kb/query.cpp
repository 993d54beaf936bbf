#include "auditflow/kb/query.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "auditflow/errors.hpp"
#include "auditflow/util.hpp"

namespace auditflow::kb {

namespace {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words{
      "a",     "about", "above",  "after", "again", "all",   "also",  "an",    "and",
      "any",   "are",   "as",     "at",    "be",    "been",  "before", "being", "below",
      "both",  "but",   "by",     "can",   "could", "did",   "do",    "does",  "doing",
      "down",  "during", "each",  "few",   "for",   "from",  "further", "had",  "has",
      "have",  "having", "he",    "her",   "here",  "hers",  "him",   "his",   "how",
      "i",     "if",    "in",     "into",  "is",    "it",    "its",   "itself", "just",
      "may",   "me",    "might",  "more",  "most",  "must",  "my",    "no",    "nor",
      "not",   "now",   "of",     "off",   "on",    "once",  "only",  "or",    "other",
      "our",   "out",   "over",   "own",   "same",  "she",   "should", "so",   "some",
      "such",  "than",  "that",   "the",   "their", "them",  "then",  "there", "these",
      "they",  "this",  "those",  "through", "to",  "too",   "under", "until", "up",
      "upon",  "us",    "very",   "was",   "we",    "were",  "what",  "when",  "where",
      "which", "while", "who",    "whom",  "why",   "will",  "with",  "would", "you",
      "your"};
  return words;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

bool is_stopword(std::string_view lowered) { return stopwords().count(lowered) > 0; }

std::vector<std::string> salient_terms(std::string_view text, std::size_t n) {
  std::map<std::string, int> counts;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !word_char(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && word_char(text[j])) ++j;
    if (j > i) {
      std::string term = to_lower(text.substr(i, j - i));
      const bool numeric = std::all_of(term.begin(), term.end(),
                                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
      if (term.size() > 1 && !numeric && !is_stopword(term)) ++counts[term];
    }
    i = j;
  }
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t k = 0; k < ranked.size() && k < n; ++k) out.push_back(ranked[k].first);
  return out;
}

RetrievalQuery formulate_query(const SubTask& task, std::string_view review,
                               const QueryOptions& options) {
  std::vector<std::string> parts;
  if (!trim(task.concern).empty()) parts.push_back(trim(task.concern));
  if (!trim(task.target).empty()) parts.push_back(trim(task.target));
  for (auto& term : salient_terms(review, options.salient_terms)) parts.push_back(std::move(term));

  RetrievalQuery q;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) q.text.push_back(' ');
    q.text += parts[i];
  }
  q.filters.platform_tags = options.default_platforms;
  q.k = options.k;
  return q;
}

namespace {

constexpr std::string_view kSidecarSuffix = ".meta.json";

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

template <typename T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j[key].get<T>() : fallback;
}

}  // namespace

std::vector<KnowledgeChunk> load_corpus(const std::filesystem::path& dir, const Chunker& chunker) {
  if (!std::filesystem::is_directory(dir)) {
    throw FormatError("corpus directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> docs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (ends_with(name, kSidecarSuffix) || name.starts_with(".")) continue;
    docs.push_back(entry.path());
  }
  std::sort(docs.begin(), docs.end());

  std::vector<KnowledgeChunk> out;
  for (const auto& doc : docs) {
    const auto sidecar = std::filesystem::path(doc.string() + std::string(kSidecarSuffix));
    if (!std::filesystem::exists(sidecar)) {
      throw SchemaError("document " + doc.string() + " has no metadata sidecar");
    }
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(read_file(sidecar));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(sidecar.string() + ": " + e.what());
    }
    KnowledgeChunk base;
    try {
      base.document_id = field_or<std::string>(meta, "document_id", doc.stem().string());
      base.source_url = field_or<std::string>(meta, "source_url", "");
      base.source_type = field_or<std::string>(meta, "source_type", "");
      base.title = field_or<std::string>(meta, "title", "");
      base.publication_date = field_or<std::string>(meta, "publication_date", "");
      base.last_accessed_date = field_or<std::string>(meta, "last_accessed_date", "");
      base.vulnerability_tags = field_or<std::vector<std::string>>(meta, "vulnerability_tags", {});
      base.platform_tags = field_or<std::vector<std::string>>(meta, "platform_tags", {});
      base.severity_keywords = field_or<std::vector<std::string>>(meta, "severity_keywords", {});
    } catch (const nlohmann::json::type_error& e) {
      throw SchemaError(sidecar.string() + ": " + e.what());
    }
    const auto pieces = chunker.chunk(read_file(doc));
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      KnowledgeChunk c = base;
      c.chunk_id = base.document_id + "#" + std::to_string(i);
      c.content = pieces[i].content;
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace auditflow::kb
