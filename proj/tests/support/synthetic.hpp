#pragma once

// Deterministic stand-ins for the optimizer's model-backed collaborators.

#include <cctype>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "auditflow/optimizer/optimizer.hpp"

namespace testsupport {

inline const std::vector<std::string>& target_keywords() {
  static const std::vector<std::string> words{"reentrancy", "access", "overflow", "oracle",
                                              "signature", "front-running", "rounding",
                                              "upgrade"};
  return words;
}

// Lowercased words with surrounding punctuation stripped.
inline std::set<std::string> word_set(const std::string& text) {
  std::set<std::string> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.pop_back();
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front()))) w.erase(0, 1);
    for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!w.empty()) out.insert(w);
  }
  return out;
}

// Fraction of target keywords present in the instruction.
inline double keyword_fitness(const std::string& instruction) {
  const auto words = word_set(instruction);
  int hits = 0;
  for (const auto& k : target_keywords()) hits += words.count(k) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(target_keywords().size());
}

inline double jaccard(const std::string& a, const std::string& b) {
  if (a == b) return 1.0;
  const auto sa = word_set(a);
  const auto sb = word_set(b);
  std::size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Appends either a target keyword or a filler word chosen from a hash of the
// parent text and variant, so runs replay exactly.
class KeywordMutator : public auditflow::optimizer::Mutator {
 public:
  std::string mutate(const std::string& text, double, int variant) override {
    static const std::vector<std::string> filler{"carefully", "thoroughly", "precisely", "briefly",
                                                 "systematically", "explicitly"};
    const auto h = fnv1a(text + "#" + std::to_string(variant));
    const auto& kw = target_keywords();
    std::string word = (h % 3 == 0) ? kw[(h >> 8) % kw.size()] : filler[(h >> 8) % filler.size()];
    return text + " " + word + " v" + std::to_string(variant);
  }
};

// Keyword injection without a suffix, so the output can repeat the parent's
// words exactly and exercise the duplicate path.
class PlainKeywordMutator : public auditflow::optimizer::Mutator {
 public:
  std::string mutate(const std::string& text, double, int variant) override {
    const auto& kw = target_keywords();
    const auto h = fnv1a(text + "#" + std::to_string(variant));
    const std::string& word = kw[h % kw.size()];
    if (word_set(text).count(word)) return text + " " + std::to_string(variant);
    return text + " " + word;
  }
};

class CountingGenerator : public auditflow::optimizer::Generator {
 public:
  std::string generate(double, int variant) override {
    return "Audit the contract and report issues, draft " + std::to_string(variant);
  }
};

inline auditflow::scoring::TaskSample sample(int i) {
  return auditflow::scoring::TaskSample::make(
      "s" + std::to_string(i), "contract C" + std::to_string(i) + " {}",
      "```functions\nf" + std::to_string(i) + "() | does thing " + std::to_string(i) + "\n```\n");
}

inline std::vector<auditflow::scoring::TaskSample> samples(int n) {
  std::vector<auditflow::scoring::TaskSample> out;
  for (int i = 0; i < n; ++i) out.push_back(sample(i));
  return out;
}

}  // namespace testsupport
