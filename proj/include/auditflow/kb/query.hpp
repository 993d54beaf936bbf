#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "auditflow/domain.hpp"
#include "auditflow/kb/chunker.hpp"
#include "auditflow/kb/index.hpp"

namespace auditflow::kb {

struct QueryOptions {
  std::size_t salient_terms = 8;
  std::vector<std::string> default_platforms{"ethereum"};
  int k = 5;
};

// Lowercased word terms of `text` that are not stopwords, most frequent
// first, ties alphabetical, at most `n`.
std::vector<std::string> salient_terms(std::string_view text, std::size_t n);

bool is_stopword(std::string_view lowered);

// concern + target + salient terms of the review text.
RetrievalQuery formulate_query(const SubTask& task, std::string_view review,
                               const QueryOptions& options = {});

// Loads every document in `dir` together with its "<file>.meta.json" sidecar
// and splits it into chunks. Chunk ids are "<document_id>#<n>".
std::vector<KnowledgeChunk> load_corpus(const std::filesystem::path& dir, const Chunker& chunker);

}  // namespace auditflow::kb
