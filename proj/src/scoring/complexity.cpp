#include <cctype>

#include "auditflow/scoring/scoring.hpp"
#include "auditflow/util.hpp"

namespace auditflow::scoring {

int token_count(std::string_view text) {
  return static_cast<int>(split_whitespace(text).size());
}

int sentence_count(std::string_view text) {
  bool any_content = false;
  bool content_since_end = false;
  int count = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i;
      while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
      // Only a run followed by whitespace or end-of-text closes a sentence,
      // so "0.7" or "a.b" stay inside one.
      const bool closes = j == text.size() || std::isspace(static_cast<unsigned char>(text[j]));
      if (closes && content_since_end) {
        ++count;
        content_since_end = false;
      }
      i = j;
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) {
      any_content = true;
      content_since_end = true;
    }
    ++i;
  }
  if (any_content && count == 0) count = 1;
  return count;
}

double complexity(std::string_view text) {
  return 0.7 * token_count(text) + 0.3 * sentence_count(text);
}

}  // namespace auditflow::scoring
