#include "auditflow/kb/chunker.hpp"

#include <cctype>
#include <cmath>

#include "auditflow/errors.hpp"

namespace auditflow::kb {

void ChunkPolicy::validate() const {
  if (size == 0) throw InvalidRequest("chunk size must be positive");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidRequest("chunk overlap must be in [0, 1)");
  if (enforce_bounds) {
    if (size < 256 || size > 512) {
      throw InvalidRequest("chunk size " + std::to_string(size) + " outside [256, 512]");
    }
    if (overlap < 0.10 || overlap > 0.20) {
      throw InvalidRequest("chunk overlap outside [0.10, 0.20]");
    }
  }
  if (stride() == 0) throw InvalidRequest("chunk overlap leaves no stride");
}

std::size_t ChunkPolicy::overlap_tokens() const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(size) * overlap));
}

std::size_t ChunkPolicy::stride() const {
  const std::size_t ov = overlap_tokens();
  return ov >= size ? 0 : size - ov;
}

namespace {

struct Span {
  std::size_t begin;
  std::size_t end;
};

std::vector<Span> token_spans(std::string_view doc) {
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < doc.size()) {
    while (i < doc.size() && std::isspace(static_cast<unsigned char>(doc[i]))) ++i;
    std::size_t j = i;
    while (j < doc.size() && !std::isspace(static_cast<unsigned char>(doc[j]))) ++j;
    if (j > i) spans.push_back({i, j});
    i = j;
  }
  return spans;
}

TextChunk make_chunk(std::string_view doc, const std::vector<Span>& spans, std::size_t tb,
                     std::size_t te) {
  TextChunk c;
  c.token_begin = tb;
  c.token_end = te;
  c.char_begin = spans[tb].begin;
  c.char_end = spans[te - 1].end;
  c.content = std::string(doc.substr(c.char_begin, c.char_end - c.char_begin));
  return c;
}

}  // namespace

std::vector<TextChunk> chunk_document(std::string_view doc, const ChunkPolicy& policy) {
  policy.validate();
  const auto spans = token_spans(doc);
  if (spans.empty()) throw InvalidRequest("cannot chunk an empty document");
  const std::size_t n = spans.size();
  const std::size_t stride = policy.stride();
  std::vector<TextChunk> chunks;
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(start + policy.size, n);
    chunks.push_back(make_chunk(doc, spans, start, end));
    if (end == n) break;
  }
  return chunks;
}

std::vector<TextChunk> ParagraphChunker::chunk(std::string_view doc) const {
  const auto spans = token_spans(doc);
  if (spans.empty()) throw InvalidRequest("cannot chunk an empty document");

  // Paragraph boundaries: token indexes where a blank line precedes the token.
  std::vector<std::size_t> para_starts{0};
  for (std::size_t t = 1; t < spans.size(); ++t) {
    const auto gap = doc.substr(spans[t - 1].end, spans[t].begin - spans[t - 1].end);
    std::size_t newlines = 0;
    for (char c : gap) newlines += (c == '\n');
    if (newlines >= 2) para_starts.push_back(t);
  }
  para_starts.push_back(spans.size());

  std::vector<TextChunk> chunks;
  std::size_t chunk_begin = 0;
  for (std::size_t p = 1; p < para_starts.size(); ++p) {
    const std::size_t para_begin = para_starts[p - 1];
    const std::size_t para_end = para_starts[p];
    if (para_end - para_begin > max_tokens_) {
      if (para_begin > chunk_begin) chunks.push_back(make_chunk(doc, spans, chunk_begin, para_begin));
      for (std::size_t s = para_begin; s < para_end; s += max_tokens_) {
        chunks.push_back(make_chunk(doc, spans, s, std::min(s + max_tokens_, para_end)));
      }
      chunk_begin = para_end;
      continue;
    }
    if (para_end - chunk_begin > max_tokens_) {
      chunks.push_back(make_chunk(doc, spans, chunk_begin, para_begin));
      chunk_begin = para_begin;
    }
  }
  if (chunk_begin < spans.size()) chunks.push_back(make_chunk(doc, spans, chunk_begin, spans.size()));
  return chunks;
}

}  // namespace auditflow::kb
