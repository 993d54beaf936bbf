#pragma once

// Knowledge base for retrieval-augmented calibration.
//
// Exact (brute-force) cosine retrieval over unit-normalized embeddings held
// in one contiguous row-major matrix, scored by the dispatched SIMD kernel.
// Readers work on an immutable snapshot; ingestion builds a new snapshot and
// swaps it in, so a concurrent retrieve sees either the old or the new index
// in full.
//
// On disk (optional):
//   <dir>/manifest.json              {"dim": N, "segments": count}
//   <dir>/segments/segment-NNNNNN.jsonl   one chunk record per line
// Segments are append-only and replayed in order; later records for the same
// chunk_id replace earlier ones.

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "auditflow/llm/gateway.hpp"

namespace auditflow::kb {

struct KnowledgeChunk {
  std::string chunk_id;
  std::string document_id;
  std::string content;
  std::string source_url;
  std::string source_type;
  std::string title;
  std::string publication_date;
  std::string last_accessed_date;
  std::vector<std::string> vulnerability_tags;
  std::vector<std::string> platform_tags;
  std::vector<std::string> severity_keywords;
  std::string summary;
  llm::EmbeddingVector embedding;  // empty until ingested
};

// Field names every serialized chunk must carry.
const std::vector<std::string>& chunk_schema_fields();

void to_json(nlohmann::json& j, const KnowledgeChunk& c);
// SchemaError naming the first missing field.
void from_json(const nlohmann::json& j, KnowledgeChunk& c);

struct MetadataFilter {
  std::vector<std::string> vulnerability_tags;  // any-of, case-insensitive
  std::vector<std::string> platform_tags;       // any-of, case-insensitive
  std::optional<std::string> source_type;       // case-insensitive equality

  bool matches(const KnowledgeChunk& c) const;
  bool empty() const;
};

struct RetrievalQuery {
  std::string text;
  MetadataFilter filters;
  int k = 5;
};

struct RetrievalHit {
  std::shared_ptr<const KnowledgeChunk> chunk;
  double score = 0.0;
};

struct IngestDelta {
  std::size_t added = 0;
  std::size_t replaced = 0;
  std::size_t size_after = 0;
};

class KnowledgeIndex {
 public:
  // In-memory index.
  explicit KnowledgeIndex(llm::Gateway& gateway);
  // Persistent index rooted at `dir`; existing segments are loaded.
  static std::unique_ptr<KnowledgeIndex> open(const std::filesystem::path& dir,
                                              llm::Gateway& gateway);

  // Embeds chunks that carry no embedding yet, validates the schema and
  // upserts by chunk_id. SchemaError / DimensionMismatch leave the index
  // unchanged.
  IngestDelta ingest(std::vector<KnowledgeChunk> chunks);

  // Top-k by cosine after filters; score desc, chunk_id asc. EmptyIndex when
  // nothing has been ingested.
  std::vector<RetrievalHit> retrieve(const RetrievalQuery& query) const;
  std::vector<RetrievalHit> retrieve_vector(std::span<const double> query,
                                            const MetadataFilter& filters, int k) const;

  std::size_t size() const;
  std::size_t dim() const;
  std::vector<std::shared_ptr<const KnowledgeChunk>> chunks() const;

 private:
  struct Snapshot {
    std::vector<std::shared_ptr<const KnowledgeChunk>> chunks;
    std::vector<double> unit_rows;  // chunks.size() x dim
    std::unordered_map<std::string, std::size_t> by_id;
    std::size_t dim = 0;
  };

  std::shared_ptr<const Snapshot> snapshot() const;
  void apply(std::vector<KnowledgeChunk> chunks, IngestDelta& delta);
  void append_segment(const std::vector<KnowledgeChunk>& chunks);

  llm::Gateway& gateway_;
  std::optional<std::filesystem::path> dir_;
  std::size_t segments_ = 0;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::mutex writer_mutex_;
};

}  // namespace auditflow::kb
