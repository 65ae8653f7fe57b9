#include "unicorn/env.hpp"

#include <algorithm>
#include <cmath>

namespace unicorn {

namespace {

void insert_sorted(std::vector<int32_t>& v, int32_t x) {
  v.insert(std::upper_bound(v.begin(), v.end(), x), x);
}

void refresh_candidates(const KnowledgeGraph& g, ConversationState& s) {
  s.cand_items = candidate_items(g, s.accepted, s.rejected_items);
  s.cand_attrs = candidate_attributes(g, s.cand_items, s.accepted, s.rejected_attrs);
}

// Ends the episode with the quit reward when the turn budget is exhausted or
// the candidate pool has emptied out.
void apply_overrides(StepOutcome& out, const RewardScheme& rewards, int max_turns) {
  if (out.success) return;
  if (out.next.turn >= max_turns || out.next.cand_items.empty()) {
    out.reward = rewards.quit;
    out.terminal = true;
  }
}

}  // namespace

double item_weight(const KnowledgeGraph& g, const EmbeddingTable& emb, int32_t user,
                   int32_t item, const std::vector<int32_t>& accepted,
                   const std::vector<int32_t>& rejected_attrs) {
  auto e_u = emb.row(user_node(user));
  auto e_v = emb.row(item_node(item));
  double score = e_u.dot(e_v);
  for (int32_t p : accepted) score += e_v.dot(emb.row(attr_node(p)));
  for (int32_t p : rejected_attrs)
    if (g.item_has_attr(item, p)) score -= e_v.dot(emb.row(attr_node(p)));
  return 1.0 / (1.0 + std::exp(-score));
}

std::vector<double> candidate_item_weights(const KnowledgeGraph& g, const EmbeddingTable& emb,
                                           const ConversationState& state) {
  std::vector<double> w;
  w.reserve(state.cand_items.size());
  for (int32_t v : state.cand_items)
    w.push_back(item_weight(g, emb, state.user, v, state.accepted, state.rejected_attrs));
  return w;
}

WeightedSubgraph build_subgraph(const KnowledgeGraph& g, const EmbeddingTable& emb,
                                const ConversationState& state) {
  WeightedSubgraph sg;
  sg.user_local = 0;
  sg.nodes.push_back(user_node(state.user));
  sg.accepted_begin = 1;
  sg.accepted_count = static_cast<int>(state.accepted.size());
  for (int32_t p : state.accepted) sg.nodes.push_back(attr_node(p));
  sg.attrs_begin = sg.accepted_begin + sg.accepted_count;
  sg.attrs_count = static_cast<int>(state.cand_attrs.size());
  for (int32_t p : state.cand_attrs) sg.nodes.push_back(attr_node(p));
  sg.items_begin = sg.attrs_begin + sg.attrs_count;
  sg.items_count = static_cast<int>(state.cand_items.size());
  for (int32_t v : state.cand_items) sg.nodes.push_back(item_node(v));

  sg.item_weights = candidate_item_weights(g, emb, state);

  // attribute local index lookup (accepted plus candidate attributes)
  std::vector<std::pair<int32_t, int>> attr_local;
  for (int i = 0; i < sg.accepted_count; ++i)
    attr_local.emplace_back(state.accepted[i], sg.accepted_begin + i);
  for (int i = 0; i < sg.attrs_count; ++i)
    attr_local.emplace_back(state.cand_attrs[i], sg.attrs_begin + i);
  std::sort(attr_local.begin(), attr_local.end());

  for (int i = 0; i < sg.items_count; ++i) {
    int item_loc = sg.items_begin + i;
    sg.edges.emplace_back(sg.user_local, item_loc, sg.item_weights[i]);
    for (int32_t p : g.attrs_of_item(state.cand_items[i])) {
      auto it = std::lower_bound(attr_local.begin(), attr_local.end(),
                                 std::make_pair(p, 0));
      if (it != attr_local.end() && it->first == p)
        sg.edges.emplace_back(it->second, item_loc, 1.0);
    }
  }
  return sg;
}

ConversationState env_reset(const KnowledgeGraph& g, int32_t user, int32_t target, Rng& rng) {
  if (user < 0 || user >= g.n_users()) throw std::invalid_argument("env_reset: bad user");
  if (target < 0 || target >= g.n_items()) throw std::invalid_argument("env_reset: bad target");
  const auto& attrs = g.attrs_of_item(target);
  return initial_state(g, user, attrs[rng.uniform_int(static_cast<int64_t>(attrs.size()))]);
}

ConversationState initial_state(const KnowledgeGraph& g, int32_t user, int32_t first_attr) {
  if (user < 0 || user >= g.n_users()) throw std::invalid_argument("initial_state: bad user");
  if (first_attr < 0 || first_attr >= g.n_attrs())
    throw std::invalid_argument("initial_state: bad attribute");
  ConversationState s;
  s.user = user;
  s.accepted.push_back(first_attr);
  refresh_candidates(g, s);
  return s;
}

StepOutcome apply_ask(const KnowledgeGraph& g, const ConversationState& state, int32_t attr,
                      bool accepted, const RewardScheme& rewards, int max_turns) {
  if (!std::binary_search(state.cand_attrs.begin(), state.cand_attrs.end(), attr))
    throw InvalidActionError("asked attribute is not a candidate: p:" + std::to_string(attr));
  StepOutcome out;
  out.next = state;
  out.next.turn = state.turn + 1;
  if (accepted) {
    out.next.accepted.push_back(attr);
    out.reward = rewards.ask_suc;
  } else {
    insert_sorted(out.next.rejected_attrs, attr);
    out.reward = rewards.ask_fail;
  }
  refresh_candidates(g, out.next);
  apply_overrides(out, rewards, max_turns);
  return out;
}

StepOutcome apply_recommend(const KnowledgeGraph& g, const ConversationState& state,
                            const std::vector<int32_t>& items, int target_position,
                            const RewardScheme& rewards, int max_turns) {
  if (items.empty()) throw InvalidActionError("empty recommendation list");
  std::vector<int32_t> sorted = items;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidActionError("duplicate item in recommendation list");
  for (int32_t v : items)
    if (!std::binary_search(state.cand_items.begin(), state.cand_items.end(), v))
      throw InvalidActionError("recommended item is not a candidate: v:" + std::to_string(v));

  StepOutcome out;
  out.next = state;
  out.next.turn = state.turn + 1;
  if (target_position > 0) {
    out.reward = rewards.rec_suc;
    out.success = true;
    out.terminal = true;
    out.target_position = target_position;
    return out;
  }
  // The head of the list is the item the policy actually chose; it alone
  // leaves the candidate pool on rejection.
  insert_sorted(out.next.rejected_items, items[0]);
  out.reward = rewards.rec_fail;
  refresh_candidates(g, out.next);
  apply_overrides(out, rewards, max_turns);
  return out;
}

StepOutcome env_step(const KnowledgeGraph& g, const ConversationState& state,
                     const EnvAction& action, int32_t target, const RewardScheme& rewards,
                     int max_turns) {
  if (const auto* ask = std::get_if<AskAction>(&action)) {
    bool accepted = g.item_has_attr(target, ask->attr);
    return apply_ask(g, state, ask->attr, accepted, rewards, max_turns);
  }
  const auto& rec = std::get<RecommendAction>(action);
  int position = 0;
  for (size_t i = 0; i < rec.items.size(); ++i)
    if (rec.items[i] == target) {
      position = static_cast<int>(i) + 1;
      break;
    }
  return apply_recommend(g, state, rec.items, position, rewards, max_turns);
}

}  // namespace unicorn
