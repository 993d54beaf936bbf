#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace auditflow::kb {

// Fixed-size token windows. Tokens are whitespace-delimited.
struct ChunkPolicy {
  std::size_t size = 384;
  double overlap = 0.15;
  // Recommended ranges are size in [256, 512] and overlap in [0.10, 0.20];
  // callers opt out explicitly (tests, tiny corpora, overlap 0).
  bool enforce_bounds = true;

  void validate() const;
  std::size_t overlap_tokens() const;
  std::size_t stride() const;
};

struct TextChunk {
  std::string content;
  std::size_t token_begin = 0;  // [token_begin, token_end) in document tokens
  std::size_t token_end = 0;
  std::size_t char_begin = 0;  // byte span of the chunk's tokens in the document
  std::size_t char_end = 0;
};

std::vector<TextChunk> chunk_document(std::string_view doc, const ChunkPolicy& policy);

class Chunker {
 public:
  virtual ~Chunker() = default;
  virtual std::vector<TextChunk> chunk(std::string_view doc) const = 0;
};

class FixedSizeChunker : public Chunker {
 public:
  explicit FixedSizeChunker(ChunkPolicy policy = {}) : policy_(policy) { policy_.validate(); }
  std::vector<TextChunk> chunk(std::string_view doc) const override {
    return chunk_document(doc, policy_);
  }

 private:
  ChunkPolicy policy_;
};

// Packs whole paragraphs (blank-line separated) into chunks of at most
// `max_tokens`; a paragraph longer than that falls back to fixed windows.
class ParagraphChunker : public Chunker {
 public:
  explicit ParagraphChunker(std::size_t max_tokens = 384) : max_tokens_(max_tokens) {}
  std::vector<TextChunk> chunk(std::string_view doc) const override;

 private:
  std::size_t max_tokens_;
};

}  // namespace auditflow::kb
