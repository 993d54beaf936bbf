#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include "auditflow/errors.hpp"
#include "auditflow/kb/chunker.hpp"
#include "auditflow/kb/index.hpp"
#include "auditflow/kb/query.hpp"
#include "auditflow/llm/mock.hpp"

using namespace auditflow;
using namespace auditflow::kb;
namespace fs = std::filesystem;

namespace {

std::string words(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " w" : "w") + std::to_string(i);
  return out;
}

KnowledgeChunk chunk(const std::string& id, const std::string& content,
                     std::vector<std::string> vuln = {"reentrancy"},
                     std::vector<std::string> platform = {"ethereum"},
                     std::string source_type = "audit_report") {
  KnowledgeChunk c;
  c.chunk_id = id;
  c.document_id = "doc";
  c.content = content;
  c.source_url = "https://example.org/" + id;
  c.source_type = std::move(source_type);
  c.title = "T " + id;
  c.publication_date = "2024-01-01";
  c.last_accessed_date = "2026-01-01";
  c.vulnerability_tags = std::move(vuln);
  c.platform_tags = std::move(platform);
  return c;
}

struct Fixture {
  std::shared_ptr<llm::MockEmbedder> embedder = std::make_shared<llm::MockEmbedder>(16);
  llm::Gateway gateway{std::make_shared<llm::MockProvider>(), embedder};
};

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() /
           ("auditflow-kb-" + name + "-" + std::to_string(std::random_device{}()));
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Chunker, WindowsAtStride) {
  ChunkPolicy p;
  p.size = 400;
  p.overlap = 0.15;
  const auto chunks = chunk_document(words(1000), p);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].token_begin, 0u);
  EXPECT_EQ(chunks[1].token_begin, 340u);
  EXPECT_EQ(chunks[2].token_begin, 680u);
  EXPECT_EQ(chunks[2].token_end, 1000u);
}

TEST(Chunker, CoversEveryTokenWithBoundedOverlap) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ChunkPolicy p;
    p.size = 256 + rng() % 257;
    p.overlap = 0.10 + 0.10 * static_cast<double>(rng() % 100) / 100.0;
    const std::size_t n = 1 + rng() % 3000;
    const auto chunks = chunk_document(words(n), p);
    ASSERT_FALSE(chunks.empty());
    EXPECT_EQ(chunks.front().token_begin, 0u);
    EXPECT_EQ(chunks.back().token_end, n);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      EXPECT_LE(chunks[i].token_end - chunks[i].token_begin, p.size);
      if (i > 0) {
        EXPECT_LE(chunks[i].token_begin, chunks[i - 1].token_end);
        EXPECT_EQ(chunks[i].token_begin - chunks[i - 1].token_begin, p.stride());
      }
    }
  }
}

TEST(Chunker, ContentMatchesCharSpan) {
  ChunkPolicy p;
  p.size = 4;
  p.overlap = 0.25;
  p.enforce_bounds = false;
  const std::string doc = "alpha beta  gamma\ndelta epsilon zeta eta";
  for (const auto& c : chunk_document(doc, p)) {
    EXPECT_EQ(c.content, doc.substr(c.char_begin, c.char_end - c.char_begin));
  }
}

TEST(Chunker, EnforcesRecommendedBounds) {
  ChunkPolicy p;
  p.size = 100;
  EXPECT_THROW(p.validate(), InvalidRequest);
  p.size = 300;
  p.overlap = 0.5;
  EXPECT_THROW(p.validate(), InvalidRequest);
  p.enforce_bounds = false;
  EXPECT_NO_THROW(p.validate());
  EXPECT_THROW(chunk_document("   ", p), InvalidRequest);
}

TEST(Chunker, ParagraphsStayWhole) {
  ParagraphChunker pc(10);
  const auto chunks = pc.chunk("one two three\n\nfour five\n\n" + words(25));
  ASSERT_GE(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].content, "one two three\n\nfour five");
  for (const auto& c : chunks) EXPECT_LE(c.token_end - c.token_begin, 10u);
}

TEST(Index, UpsertKeepsLatestContent) {
  Fixture f;
  KnowledgeIndex index(f.gateway);
  auto d1 = index.ingest({chunk("a", "first"), chunk("b", "other")});
  EXPECT_EQ(d1.added, 2u);
  auto d2 = index.ingest({chunk("a", "second")});
  EXPECT_EQ(d2.added, 0u);
  EXPECT_EQ(d2.replaced, 1u);
  EXPECT_EQ(index.size(), 2u);
  auto d3 = index.ingest({chunk("c", "third")});
  EXPECT_EQ(d3.size_after, 3u);
  for (const auto& c : index.chunks()) {
    if (c->chunk_id == "a") {
      EXPECT_EQ(c->content, "second");
    }
  }
}

TEST(Index, SchemaViolationsLeaveIndexUnchanged) {
  Fixture f;
  KnowledgeIndex index(f.gateway);
  index.ingest({chunk("a", "x")});
  auto bad = chunk("b", "y");
  bad.source_url.clear();
  EXPECT_THROW(index.ingest({chunk("c", "z"), bad}), SchemaError);
  EXPECT_EQ(index.size(), 1u);
  auto wrong_dim = chunk("d", "w");
  wrong_dim.embedding = llm::EmbeddingVector::from_values({1.0, 0.0});
  EXPECT_THROW(index.ingest({wrong_dim}), DimensionMismatch);
  EXPECT_EQ(index.size(), 1u);
}

TEST(Index, SummaryDefaultsToFirstSentence) {
  Fixture f;
  KnowledgeIndex index(f.gateway);
  index.ingest({chunk("a", "First sentence here. Second one.")});
  EXPECT_EQ(index.chunks()[0]->summary, "First sentence here.");
}

TEST(Index, EmptyIndexAndBadK) {
  Fixture f;
  KnowledgeIndex index(f.gateway);
  RetrievalQuery q{"x", {}, 5};
  EXPECT_THROW(index.retrieve(q), EmptyIndex);
  index.ingest({chunk("a", "x")});
  q.k = 0;
  EXPECT_THROW(index.retrieve(q), InvalidRequest);
}

TEST(Index, MatchesBruteForceOracle) {
  Fixture f;
  KnowledgeIndex index(f.gateway);
  std::vector<KnowledgeChunk> chunks;
  for (int i = 0; i < 50; ++i) chunks.push_back(chunk("c" + std::to_string(i), "text " + std::to_string(i)));
  index.ingest(chunks);
  for (int q = 0; q < 40; ++q) {
    const std::string text = "query " + std::to_string(q);
    const auto qv = llm::hashed_unit_vector(text, 16);
    std::vector<std::pair<double, std::string>> oracle;
    for (const auto& c : chunks) {
      const auto v = llm::hashed_unit_vector(c.content, 16);
      double s = 0.0;
      for (int i = 0; i < 16; ++i) s += v[i] * qv[i];
      oracle.emplace_back(-s, c.chunk_id);
    }
    std::sort(oracle.begin(), oracle.end());
    const auto hits = index.retrieve({text, {}, 5});
    ASSERT_EQ(hits.size(), 5u);
    for (int i = 0; i < 5; ++i) {
      EXPECT_EQ(hits[i].chunk->chunk_id, oracle[i].second);
      EXPECT_NEAR(hits[i].score, -oracle[i].first, 1e-12);
    }
  }
}

TEST(Index, TiesBreakByChunkId) {
  Fixture f;
  KnowledgeIndex index(f.gateway);
  index.ingest({chunk("z", "same"), chunk("a", "same"), chunk("m", "same")});
  const auto hits = index.retrieve({"same", {}, 3});
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].chunk->chunk_id, "a");
  EXPECT_EQ(hits[1].chunk->chunk_id, "m");
  EXPECT_EQ(hits[2].chunk->chunk_id, "z");
  EXPECT_NEAR(hits[0].score, 1.0, 1e-12);
}

TEST(Index, FiltersAreAnyOfAndCaseInsensitive) {
  Fixture f;
  KnowledgeIndex index(f.gateway);
  index.ingest({chunk("a", "x", {"Reentrancy"}, {"ethereum"}),
                chunk("b", "y", {"oracle"}, {"BSC"}, "blog"),
                chunk("c", "z", {"access control"}, {"polygon"})});
  RetrievalQuery q{"x", {}, 5};
  q.filters.vulnerability_tags = {"reentrancy", "oracle"};
  EXPECT_EQ(index.retrieve(q).size(), 2u);
  q.filters.platform_tags = {"bsc"};
  ASSERT_EQ(index.retrieve(q).size(), 1u);
  EXPECT_EQ(index.retrieve(q)[0].chunk->chunk_id, "b");
  q.filters = {};
  q.filters.source_type = "BLOG";
  EXPECT_EQ(index.retrieve(q).size(), 1u);
}

TEST(Index, PersistsAndReplaysSegments) {
  const auto dir = temp_dir("persist");
  Fixture f;
  {
    auto index = KnowledgeIndex::open(dir, f.gateway);
    index->ingest({chunk("a", "one"), chunk("b", "two")});
    index->ingest({chunk("a", "uno")});
  }
  auto reopened = KnowledgeIndex::open(dir, f.gateway);
  EXPECT_EQ(reopened->size(), 2u);
  const auto hits = reopened->retrieve({"uno", {}, 1});
  EXPECT_EQ(hits[0].chunk->chunk_id, "a");
  EXPECT_EQ(hits[0].chunk->content, "uno");
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);
}

TEST(Index, ReadersSeeWholeSnapshots) {
  Fixture f;
  KnowledgeIndex index(f.gateway);
  index.ingest({chunk("seed", "seed")});
  std::atomic<bool> done{false};
  std::thread reader([&] {
    while (!done) {
      const auto n = index.retrieve({"seed", {}, 100}).size();
      EXPECT_TRUE(n == 1 || n == 11 || n == 21) << n;
    }
  });
  for (int batch = 0; batch < 2; ++batch) {
    std::vector<KnowledgeChunk> cs;
    for (int i = 0; i < 10; ++i) {
      cs.push_back(chunk("b" + std::to_string(batch) + "-" + std::to_string(i), "c" + std::to_string(i)));
    }
    index.ingest(cs);
  }
  done = true;
  reader.join();
}

TEST(ChunkJson, RoundTripAndMissingField) {
  const nlohmann::json j = chunk("a", "x");
  EXPECT_EQ(j.get<KnowledgeChunk>().source_url, "https://example.org/a");
  for (const auto& field : chunk_schema_fields()) {
    auto broken = j;
    broken.erase(field);
    EXPECT_THROW(broken.get<KnowledgeChunk>(), SchemaError) << field;
  }
}

TEST(Query, ContainsConcernAndTarget) {
  const auto q = formulate_query(SubTask{1, "t", "withdrawFunds", "reentrancy", 1},
                                 "The external call in withdrawFunds precedes the balance update.");
  EXPECT_NE(q.text.find("reentrancy"), std::string::npos);
  EXPECT_NE(q.text.find("withdrawFunds"), std::string::npos);
  EXPECT_EQ(q.filters.platform_tags, std::vector<std::string>{"ethereum"});
}

TEST(Query, SalientTermsRankByFrequency) {
  const auto terms = salient_terms("The balance and the balance: call, call, call. A 42 x", 3);
  EXPECT_EQ(terms, (std::vector<std::string>{"call", "balance"}));
  EXPECT_TRUE(is_stopword("the"));
}

TEST(Corpus, LoadsFixtureDocuments) {
  ChunkPolicy p;
  p.size = 32;
  p.overlap = 0.0;
  p.enforce_bounds = false;
  const auto chunks = load_corpus(fs::path(AUDITFLOW_FIXTURES_DIR) / "kb_docs", FixedSizeChunker(p));
  ASSERT_FALSE(chunks.empty());
  std::set<std::string> docs;
  for (const auto& c : chunks) {
    docs.insert(c.document_id);
    EXPECT_EQ(c.chunk_id.rfind(c.document_id + "#", 0), 0u);
    EXPECT_FALSE(c.source_url.empty());
  }
  EXPECT_EQ(docs, (std::set<std::string>{"consensys-dos", "swc-105", "swc-107"}));
}

TEST(Corpus, MissingSidecarIsASchemaError) {
  const auto dir = temp_dir("nosidecar");
  { std::ofstream(dir / "doc.md") << "text"; }
  EXPECT_THROW(load_corpus(dir, FixedSizeChunker(ChunkPolicy{})), SchemaError);
  fs::remove_all(dir);
}
