#include "unicorn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unicorn {

double hdcg_session(int t, int k, int max_turns, int max_rank) {
  if (t < 1 || t > max_turns) throw std::invalid_argument("success turn out of range");
  if (k < 1 || k > max_rank) throw std::invalid_argument("success position out of range");
  double outer = 1.0 / std::log2(t + 2.0);
  double inner = 1.0 / std::log2(t + 1.0) - outer;
  return outer + inner / std::log2(k + 1.0);
}

MetricReport aggregate(const std::vector<SessionResult>& results, int max_turns, int max_rank) {
  if (results.empty()) throw std::invalid_argument("no sessions to aggregate");
  MetricReport rep;
  rep.n_sessions = static_cast<int>(results.size());
  double turns_sum = 0.0, hdcg_sum = 0.0;
  std::vector<int> succ_by_turn(max_turns + 1, 0);
  for (const SessionResult& r : results) {
    if (r.success) {
      succ_by_turn[r.success_turn] += 1;
      turns_sum += r.success_turn;
      hdcg_sum += hdcg_session(r.success_turn, r.success_position, max_turns, max_rank);
    } else {
      turns_sum += max_turns;
    }
  }
  int cum = 0;
  for (int t = 1; t <= max_turns; ++t) {
    cum += succ_by_turn[t];
    rep.sr_at[t] = static_cast<double>(cum) / rep.n_sessions;
  }
  rep.at = turns_sum / rep.n_sessions;
  rep.hdcg = hdcg_sum / rep.n_sessions;
  return rep;
}

namespace {

std::vector<int32_t> top_items_by_weight(const KnowledgeGraph& g, const EmbeddingTable& emb,
                                         const ConversationState& state, int k) {
  std::vector<double> weights = candidate_item_weights(g, emb, state);
  std::vector<ScoredAction> top = select_items(state.cand_items, weights, k);
  std::vector<int32_t> items;
  items.reserve(top.size());
  for (const ScoredAction& sa : top) items.push_back(sa.index);
  return items;
}

}  // namespace

EnvAction AbsGreedyPolicy::decide(const ConversationState& state) {
  return RecommendAction{top_items_by_weight(*g_, *emb_, state, k_)};
}

EnvAction MaxEntropyPolicy::decide(const ConversationState& state) {
  double q = std::max(0.0, 1.0 - static_cast<double>(state.turn) / max_turns_);
  if (!state.cand_attrs.empty() && rng_.uniform() < q) {
    double total = static_cast<double>(state.cand_items.size());
    int32_t best = -1;
    double best_h = -1.0;
    for (int32_t p : state.cand_attrs) {
      int with = 0;
      for (int32_t v : state.cand_items)
        if (g_->item_has_attr(v, p)) ++with;
      double frac = with / total;
      double h = 0.0;
      if (frac > 0.0 && frac < 1.0)
        h = -frac * std::log2(frac) - (1.0 - frac) * std::log2(1.0 - frac);
      if (h > best_h) {
        best_h = h;
        best = p;
      }
    }
    return AskAction{best};
  }
  return RecommendAction{top_items_by_weight(*g_, *emb_, state, k_)};
}

EnvAction RandomPolicy::decide(const ConversationState& state) {
  ActionSpace space = build_action_space(*g_, *emb_, state, k_items_, k_attrs_);
  if (space.empty()) throw std::invalid_argument("empty action space");
  int pick = static_cast<int>(rng_.uniform_int(space.size()));
  int n_items = static_cast<int>(space.item_actions.size());
  if (pick >= n_items) return AskAction{space.attr_actions[pick - n_items].index};
  std::vector<int32_t> items;
  items.reserve(n_items);
  for (const ScoredAction& sa : space.item_actions) items.push_back(sa.index);
  std::rotate(items.begin(), items.begin() + pick, items.begin() + pick + 1);
  return RecommendAction{std::move(items)};
}

SessionResult run_session(const KnowledgeGraph& g, Policy& policy, int32_t user, int32_t target,
                          const RewardScheme& rewards, int max_turns, Rng& reset_rng) {
  ConversationState state = env_reset(g, user, target, reset_rng);
  policy.on_session_start();
  SessionResult res;
  while (true) {
    if (state.cand_items.empty()) break;
    EnvAction action = policy.decide(state);
    StepOutcome out = env_step(g, state, action, target, rewards, max_turns);
    state = out.next;
    if (out.terminal) {
      if (out.success) {
        res.success = true;
        res.success_turn = state.turn;
        res.success_position = out.target_position;
      }
      break;
    }
  }
  res.length = res.success ? res.success_turn : max_turns;
  return res;
}

std::vector<SessionResult> run_evaluation(const KnowledgeGraph& g,
                                          const std::vector<std::pair<int32_t, int32_t>>& pairs,
                                          Policy& policy, const RewardScheme& rewards,
                                          int max_turns, uint64_t seed) {
  Rng reset_rng(derive_seed(seed, "eval.reset"));
  std::vector<SessionResult> results;
  results.reserve(pairs.size());
  for (const auto& [user, target] : pairs)
    results.push_back(run_session(g, policy, user, target, rewards, max_turns, reset_rng));
  return results;
}

}  // namespace unicorn
