#include "auditflow/kb/index.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <spdlog/spdlog.h>

#include "auditflow/errors.hpp"
#include "auditflow/kernels/kernels.hpp"
#include "auditflow/util.hpp"

namespace auditflow::kb {

using nlohmann::json;

const std::vector<std::string>& chunk_schema_fields() {
  static const std::vector<std::string> fields{
      "chunk_id",         "document_id",        "content",       "source_url",
      "source_type",      "title",              "publication_date", "last_accessed_date",
      "vulnerability_tags", "platform_tags",    "severity_keywords", "summary"};
  return fields;
}

void to_json(json& j, const KnowledgeChunk& c) {
  j = json{{"chunk_id", c.chunk_id},
           {"document_id", c.document_id},
           {"content", c.content},
           {"source_url", c.source_url},
           {"source_type", c.source_type},
           {"title", c.title},
           {"publication_date", c.publication_date},
           {"last_accessed_date", c.last_accessed_date},
           {"vulnerability_tags", c.vulnerability_tags},
           {"platform_tags", c.platform_tags},
           {"severity_keywords", c.severity_keywords},
           {"summary", c.summary}};
  if (!c.embedding.values.empty()) j["embedding"] = c.embedding.values;
}

void from_json(const json& j, KnowledgeChunk& c) {
  for (const auto& field : chunk_schema_fields()) {
    if (!j.contains(field)) throw SchemaError("knowledge chunk missing field '" + field + "'");
  }
  try {
    c.chunk_id = j["chunk_id"].get<std::string>();
    c.document_id = j["document_id"].get<std::string>();
    c.content = j["content"].get<std::string>();
    c.source_url = j["source_url"].get<std::string>();
    c.source_type = j["source_type"].get<std::string>();
    c.title = j["title"].get<std::string>();
    c.publication_date = j["publication_date"].get<std::string>();
    c.last_accessed_date = j["last_accessed_date"].get<std::string>();
    c.vulnerability_tags = j["vulnerability_tags"].get<std::vector<std::string>>();
    c.platform_tags = j["platform_tags"].get<std::vector<std::string>>();
    c.severity_keywords = j["severity_keywords"].get<std::vector<std::string>>();
    c.summary = j["summary"].get<std::string>();
    if (j.contains("embedding")) {
      c.embedding = llm::EmbeddingVector::from_values(j["embedding"].get<std::vector<double>>());
    } else {
      c.embedding = {};
    }
  } catch (const json::type_error& e) {
    throw SchemaError(std::string("knowledge chunk has a mistyped field: ") + e.what());
  }
}

namespace {

bool any_tag_matches(const std::vector<std::string>& wanted,
                     const std::vector<std::string>& have) {
  for (const auto& w : wanted) {
    const std::string lw = to_lower(w);
    for (const auto& h : have) {
      if (to_lower(h) == lw) return true;
    }
  }
  return false;
}

void check_schema(const KnowledgeChunk& c) {
  const std::pair<const char*, const std::string*> required[] = {
      {"chunk_id", &c.chunk_id},       {"document_id", &c.document_id},
      {"content", &c.content},         {"source_url", &c.source_url},
      {"source_type", &c.source_type}, {"title", &c.title},
      {"publication_date", &c.publication_date},
      {"last_accessed_date", &c.last_accessed_date}};
  for (const auto& [name, value] : required) {
    if (trim(*value).empty()) {
      throw SchemaError("knowledge chunk '" + c.chunk_id + "' missing field '" + name + "'");
    }
  }
}

std::string derive_summary(const std::string& content) {
  const std::string flat = collapse_whitespace(content);
  std::size_t end = flat.size();
  for (std::size_t i = 0; i + 1 < flat.size(); ++i) {
    if ((flat[i] == '.' || flat[i] == '!' || flat[i] == '?') && flat[i + 1] == ' ') {
      end = i + 1;
      break;
    }
  }
  end = std::min<std::size_t>(end, 200);
  return flat.substr(0, end);
}

constexpr std::size_t kEmbedBatch = 64;

}  // namespace

bool MetadataFilter::matches(const KnowledgeChunk& c) const {
  if (source_type && to_lower(*source_type) != to_lower(c.source_type)) return false;
  if (!vulnerability_tags.empty() && !any_tag_matches(vulnerability_tags, c.vulnerability_tags)) {
    return false;
  }
  if (!platform_tags.empty() && !any_tag_matches(platform_tags, c.platform_tags)) return false;
  return true;
}

bool MetadataFilter::empty() const {
  return vulnerability_tags.empty() && platform_tags.empty() && !source_type;
}

KnowledgeIndex::KnowledgeIndex(llm::Gateway& gateway)
    : gateway_(gateway), snapshot_(std::make_shared<Snapshot>()) {}

std::unique_ptr<KnowledgeIndex> KnowledgeIndex::open(const std::filesystem::path& dir,
                                                     llm::Gateway& gateway) {
  auto index = std::make_unique<KnowledgeIndex>(gateway);
  index->dir_ = dir;
  const auto seg_dir = dir / "segments";
  std::filesystem::create_directories(seg_dir);

  std::vector<std::filesystem::path> segments;
  for (const auto& entry : std::filesystem::directory_iterator(seg_dir)) {
    if (entry.path().extension() == ".jsonl") segments.push_back(entry.path());
  }
  std::sort(segments.begin(), segments.end());
  for (const auto& seg : segments) {
    std::vector<KnowledgeChunk> chunks;
    std::ifstream in(seg);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      try {
        chunks.push_back(json::parse(line).get<KnowledgeChunk>());
      } catch (const json::exception& e) {
        throw FormatError(seg.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
      if (chunks.back().embedding.values.empty()) {
        throw FormatError(seg.string() + ":" + std::to_string(lineno) + ": no embedding");
      }
    }
    IngestDelta delta;
    index->apply(std::move(chunks), delta);
  }
  index->segments_ = segments.size();
  return index;
}

std::shared_ptr<const KnowledgeIndex::Snapshot> KnowledgeIndex::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

std::size_t KnowledgeIndex::size() const { return snapshot()->chunks.size(); }
std::size_t KnowledgeIndex::dim() const { return snapshot()->dim; }

std::vector<std::shared_ptr<const KnowledgeChunk>> KnowledgeIndex::chunks() const {
  return snapshot()->chunks;
}

void KnowledgeIndex::apply(std::vector<KnowledgeChunk> chunks, IngestDelta& delta) {
  const auto current = snapshot();
  auto next = std::make_shared<Snapshot>(*current);
  for (auto& c : chunks) {
    const std::size_t d = c.embedding.dim();
    if (next->dim == 0) next->dim = d;
    if (d != next->dim) {
      throw DimensionMismatch("chunk '" + c.chunk_id + "' has dimension " + std::to_string(d) +
                              ", index has " + std::to_string(next->dim));
    }
    if (!(c.embedding.norm > 0.0)) {
      throw SchemaError("chunk '" + c.chunk_id + "' has a zero embedding");
    }
    std::vector<double> row(c.embedding.values);
    for (double& x : row) x /= c.embedding.norm;
    auto ptr = std::make_shared<const KnowledgeChunk>(std::move(c));
    auto it = next->by_id.find(ptr->chunk_id);
    if (it != next->by_id.end()) {
      const std::size_t r = it->second;
      next->chunks[r] = ptr;
      std::copy(row.begin(), row.end(),
                next->unit_rows.begin() + static_cast<std::ptrdiff_t>(r * next->dim));
      ++delta.replaced;
    } else {
      next->by_id.emplace(ptr->chunk_id, next->chunks.size());
      next->chunks.push_back(ptr);
      next->unit_rows.insert(next->unit_rows.end(), row.begin(), row.end());
      ++delta.added;
    }
  }
  delta.size_after = next->chunks.size();
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(next);
}

void KnowledgeIndex::append_segment(const std::vector<KnowledgeChunk>& chunks) {
  if (!dir_) return;
  char name[48];
  std::snprintf(name, sizeof(name), "segment-%06zu.jsonl", segments_ + 1);
  std::string body;
  for (const auto& c : chunks) {
    body += json(c).dump();
    body.push_back('\n');
  }
  write_file_atomic(*dir_ / "segments" / name, body);
  ++segments_;
  const auto snap = snapshot();
  write_file_atomic(*dir_ / "manifest.json",
                    json{{"dim", snap->dim}, {"segments", segments_}, {"chunks", snap->chunks.size()}}
                        .dump(2));
}

IngestDelta KnowledgeIndex::ingest(std::vector<KnowledgeChunk> chunks) {
  std::lock_guard writer(writer_mutex_);
  for (auto& c : chunks) {
    check_schema(c);
    if (trim(c.summary).empty()) c.summary = derive_summary(c.content);
  }
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i].embedding.values.empty()) pending.push_back(i);
  }
  for (std::size_t b = 0; b < pending.size(); b += kEmbedBatch) {
    std::vector<std::string> texts;
    const std::size_t e = std::min(pending.size(), b + kEmbedBatch);
    for (std::size_t i = b; i < e; ++i) texts.push_back(chunks[pending[i]].content);
    auto vectors = gateway_.embed(texts);
    for (std::size_t i = b; i < e; ++i) chunks[pending[i]].embedding = std::move(vectors[i - b]);
  }
  IngestDelta delta;
  if (chunks.empty()) {
    delta.size_after = size();
    return delta;
  }
  // Segment records carry embeddings so a reload never re-embeds.
  std::vector<KnowledgeChunk> persisted;
  if (dir_) persisted = chunks;
  apply(std::move(chunks), delta);
  if (dir_) append_segment(persisted);
  return delta;
}

std::vector<RetrievalHit> KnowledgeIndex::retrieve(const RetrievalQuery& query) const {
  if (query.k < 1) throw InvalidRequest("retrieval k must be >= 1");
  if (size() == 0) throw EmptyIndex("knowledge index is empty");
  const auto q = gateway_.embed_one(query.text);
  return retrieve_vector(q.values, query.filters, query.k);
}

std::vector<RetrievalHit> KnowledgeIndex::retrieve_vector(std::span<const double> query,
                                                          const MetadataFilter& filters,
                                                          int k) const {
  if (k < 1) throw InvalidRequest("retrieval k must be >= 1");
  const auto snap = snapshot();
  if (snap->chunks.empty()) throw EmptyIndex("knowledge index is empty");
  if (query.size() != snap->dim) {
    throw DimensionMismatch("query dimension " + std::to_string(query.size()) +
                            " != index dimension " + std::to_string(snap->dim));
  }
  const double qn = kernels::norm(query);
  std::vector<double> scores(snap->chunks.size(), 0.0);
  if (qn > 0.0) {
    std::vector<double> unit(query.begin(), query.end());
    for (double& x : unit) x /= qn;
    kernels::dot_rows(snap->unit_rows, snap->dim, unit, scores);
  }

  std::vector<std::size_t> candidates;
  candidates.reserve(snap->chunks.size());
  for (std::size_t i = 0; i < snap->chunks.size(); ++i) {
    if (filters.empty() || filters.matches(*snap->chunks[i])) candidates.push_back(i);
  }
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return snap->chunks[a]->chunk_id < snap->chunks[b]->chunk_id;
  };
  const std::size_t take = std::min(candidates.size(), static_cast<std::size_t>(k));
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), better);
  std::vector<RetrievalHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t r = candidates[i];
    hits.push_back({snap->chunks[r], std::clamp(scores[r], -1.0, 1.0)});
  }
  return hits;
}

}  // namespace auditflow::kb
