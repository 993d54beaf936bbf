#include "auditflow/eval/metrics.hpp"

#include "auditflow/errors.hpp"

namespace auditflow::eval {

double mrr(const std::vector<std::optional<int>>& first_tp_ranks) {
  if (first_tp_ranks.empty()) throw EmptyQuerySet("mrr over an empty query set");
  double sum = 0.0;
  for (const auto& r : first_tp_ranks) {
    if (!r) continue;
    if (*r < 1) throw InvalidRequest("ranks start at 1");
    sum += 1.0 / *r;
  }
  return sum / static_cast<double>(first_tp_ranks.size());
}

double average_precision(const std::vector<int>& rels, ApMode mode) {
  if (rels.empty()) throw InvalidRequest("average_precision of an empty list");
  double sum = 0.0;
  int hits = 0;
  for (std::size_t n = 0; n < rels.size(); ++n) {
    if (rels[n] == 0) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(n + 1);
  }
  if (mode == ApMode::Standard) return hits == 0 ? 0.0 : sum / hits;
  return sum / static_cast<double>(rels.size());
}

double top_n_accuracy(const std::vector<std::optional<int>>& gold_match_ranks,
                      std::optional<int> n) {
  if (gold_match_ranks.empty()) throw EmptyQuerySet("top-N accuracy without gold findings");
  if (n && *n < 1) throw InvalidRequest("top-N needs N >= 1");
  std::size_t detected = 0;
  for (const auto& r : gold_match_ranks) {
    if (r && (!n || *r <= *n)) ++detected;
  }
  return static_cast<double>(detected) / static_cast<double>(gold_match_ranks.size());
}

}  // namespace auditflow::eval
