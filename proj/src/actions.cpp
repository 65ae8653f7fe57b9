#include "unicorn/actions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unicorn {

namespace {

std::vector<ScoredAction> top_k(std::vector<ScoredAction> scored, int k) {
  std::sort(scored.begin(), scored.end(), [](const ScoredAction& a, const ScoredAction& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  return scored;
}

}  // namespace

std::vector<ScoredAction> select_items(const std::vector<int32_t>& cand_items,
                                       const std::vector<double>& weights, int k) {
  if (weights.size() != cand_items.size())
    throw std::invalid_argument("select_items: weights do not cover candidates");
  std::vector<ScoredAction> scored;
  scored.reserve(cand_items.size());
  for (size_t i = 0; i < cand_items.size(); ++i) scored.push_back({cand_items[i], weights[i]});
  return top_k(std::move(scored), k);
}

double attribute_entropy(const KnowledgeGraph& g, int32_t attr,
                         const std::vector<int32_t>& cand_items,
                         const std::vector<double>& weights) {
  double total = 0.0, with_attr = 0.0;
  for (size_t i = 0; i < cand_items.size(); ++i) {
    total += weights[i];
    if (g.item_has_attr(cand_items[i], attr)) with_attr += weights[i];
  }
  if (total <= 0.0) throw std::invalid_argument("attribute_entropy: nonpositive total weight");
  double prob = with_attr / total;
  if (prob <= 0.0 || prob >= 1.0) return 0.0;
  return -prob * std::log2(prob);
}

std::vector<ScoredAction> select_attributes(const KnowledgeGraph& g,
                                            const std::vector<int32_t>& cand_attrs,
                                            const std::vector<int32_t>& cand_items,
                                            const std::vector<double>& weights, int k) {
  std::vector<ScoredAction> scored;
  scored.reserve(cand_attrs.size());
  for (int32_t p : cand_attrs) {
    // Zero-entropy attributes stay eligible: the scoring ranks them last, but
    // they still pad the menu when fewer than k attributes carry information.
    scored.push_back({p, attribute_entropy(g, p, cand_items, weights)});
  }
  return top_k(std::move(scored), k);
}

ActionSpace build_action_space(const KnowledgeGraph& g, const EmbeddingTable& emb,
                               const ConversationState& state, int k_items, int k_attrs) {
  std::vector<double> weights = candidate_item_weights(g, emb, state);
  ActionSpace space;
  space.item_actions = select_items(state.cand_items, weights, k_items);
  space.attr_actions = select_attributes(g, state.cand_attrs, state.cand_items, weights, k_attrs);
  return space;
}

}  // namespace unicorn
