#pragma once

#include <cstdint>
#include <tuple>
#include <variant>
#include <vector>

#include "unicorn/embeddings.hpp"
#include "unicorn/graph.hpp"
#include "unicorn/rng.hpp"

namespace unicorn {

struct RewardScheme {
  double rec_suc = 1.0;
  double rec_fail = -0.1;
  double ask_suc = 0.01;
  double ask_fail = -0.1;
  double quit = -0.3;
};

// Everything the agent can see mid-session. Accepted attributes keep
// acceptance order (the encoder consumes them as a sequence); the other sets
// are sorted. Candidate sets are always recomputed from scratch after a step.
struct ConversationState {
  int32_t user = -1;
  std::vector<int32_t> accepted;        // attribute indices, acceptance order
  std::vector<int32_t> rejected_attrs;  // sorted
  std::vector<int32_t> rejected_items;  // sorted
  int turn = 0;
  std::vector<int32_t> cand_items;  // sorted
  std::vector<int32_t> cand_attrs;  // sorted
};

struct AskAction {
  int32_t attr;
};
struct RecommendAction {
  std::vector<int32_t> items;  // display order, position 1 = first
};
using EnvAction = std::variant<AskAction, RecommendAction>;

struct InvalidActionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepOutcome {
  ConversationState next;
  double reward = 0.0;
  bool terminal = false;
  bool success = false;
  int target_position = 0;  // 1-based position in the shown list on success
};

// sigmoid(e_u . e_v + sum_{p accepted} e_v . e_p - sum_{p rejected, p in P_v} e_v . e_p)
double item_weight(const KnowledgeGraph& g, const EmbeddingTable& emb, int32_t user,
                   int32_t item, const std::vector<int32_t>& accepted,
                   const std::vector<int32_t>& rejected_attrs);

// Weights aligned with state.cand_items.
std::vector<double> candidate_item_weights(const KnowledgeGraph& g, const EmbeddingTable& emb,
                                           const ConversationState& state);

// Session subgraph: the user, accepted attributes (in order), candidate
// attributes, candidate items. User-item edges carry the current item weight;
// item-attribute edges carry 1; there are no user-attribute edges and no self
// loops.
struct WeightedSubgraph {
  std::vector<NodeId> nodes;
  std::vector<std::tuple<int, int, double>> edges;  // local index pairs, i < j
  std::vector<double> item_weights;                 // aligned with candidate items
  int user_local = 0;
  int accepted_begin = 0, accepted_count = 0;
  int attrs_begin = 0, attrs_count = 0;
  int items_begin = 0, items_count = 0;
};

WeightedSubgraph build_subgraph(const KnowledgeGraph& g, const EmbeddingTable& emb,
                                const ConversationState& state);

// Starts a session: one attribute of the target, drawn uniformly, is already
// accepted.
ConversationState env_reset(const KnowledgeGraph& g, int32_t user, int32_t target, Rng& rng);

// Session start from an explicitly chosen first attribute (interactive use,
// where no ground-truth target exists).
ConversationState initial_state(const KnowledgeGraph& g, int32_t user, int32_t first_attr);

// Applies a step given the user's reaction. `max_turns` triggers the quit
// override on the final turn.
StepOutcome apply_ask(const KnowledgeGraph& g, const ConversationState& state, int32_t attr,
                      bool accepted, const RewardScheme& rewards, int max_turns);
StepOutcome apply_recommend(const KnowledgeGraph& g, const ConversationState& state,
                            const std::vector<int32_t>& items, int target_position,
                            const RewardScheme& rewards, int max_turns);

// Simulated step: the reaction is derived from the target's ground truth.
StepOutcome env_step(const KnowledgeGraph& g, const ConversationState& state,
                     const EnvAction& action, int32_t target, const RewardScheme& rewards,
                     int max_turns);

}  // namespace unicorn
