#pragma once

#include <optional>
#include <vector>

namespace auditflow::eval {

// Mean of 1/rank over queries; a query without a true positive contributes 0.
// EmptyQuerySet when `first_tp_ranks` is empty.
double mrr(const std::vector<std::optional<int>>& first_tp_ranks);

enum class ApMode {
  ListLength,  // (1/N) * sum P(n) rel(n), N = list length
  Standard,  // same sum normalized by the number of relevant items
};

// `rels` holds 0/1 relevance by rank; InvalidRequest when empty.
double average_precision(const std::vector<int>& rels, ApMode mode = ApMode::ListLength);

// Fraction of gold items whose matching produced finding sits at rank <= n.
// `gold_match_ranks` has one entry per gold item (nullopt: never matched);
// n = nullopt means any rank. EmptyQuerySet when there is no gold item.
double top_n_accuracy(const std::vector<std::optional<int>>& gold_match_ranks,
                      std::optional<int> n);

}  // namespace auditflow::eval
