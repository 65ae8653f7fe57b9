#pragma once

#include "unicorn/env.hpp"

namespace unicorn {

struct ScoredAction {
  int32_t index;  // item or attribute index
  double score;
};

// Pruned per-turn action space: top items by preference weight plus top
// attributes by weighted entropy. Items come first in the combined ordering.
struct ActionSpace {
  std::vector<ScoredAction> item_actions;  // score = item weight, descending
  std::vector<ScoredAction> attr_actions;  // score = weighted entropy, descending

  int size() const {
    return static_cast<int>(item_actions.size() + attr_actions.size());
  }
  bool empty() const { return item_actions.empty() && attr_actions.empty(); }
};

// Top-k candidate items by weight, ties broken by ascending item index.
// weights[i] scores state.cand_items[i].
std::vector<ScoredAction> select_items(const std::vector<int32_t>& cand_items,
                                       const std::vector<double>& weights, int k);

// Weighted entropy of one attribute over the candidate items: the share of
// total item weight carried by items having the attribute, pushed through
// -prob * log2(prob). Degenerate shares (0 or 1) score 0.
double attribute_entropy(const KnowledgeGraph& g, int32_t attr,
                         const std::vector<int32_t>& cand_items,
                         const std::vector<double>& weights);

// Top-k candidate attributes by weighted entropy, ties broken by ascending
// attribute index.
std::vector<ScoredAction> select_attributes(const KnowledgeGraph& g,
                                            const std::vector<int32_t>& cand_attrs,
                                            const std::vector<int32_t>& cand_items,
                                            const std::vector<double>& weights, int k);

ActionSpace build_action_space(const KnowledgeGraph& g, const EmbeddingTable& emb,
                               const ConversationState& state, int k_items, int k_attrs);

}  // namespace unicorn
