#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "unicorn/agent.hpp"

namespace unicorn {

// Two-level discounted gain for a session succeeding at turn t (1-based) with
// the target at list position k (1-based). The (1,1) session scores exactly 1.
double hdcg_session(int t, int k, int max_turns, int max_rank);

struct SessionResult {
  bool success = false;
  int success_turn = 0;      // 1-based, 0 when failed
  int success_position = 0;  // 1-based, 0 when failed
  int length = 0;            // turns used; failures count the full budget
};

struct MetricReport {
  std::map<int, double> sr_at;  // turn -> cumulative success ratio
  double at = 0.0;              // average turns, failures at max_turns
  double hdcg = 0.0;
  int n_sessions = 0;
};

MetricReport aggregate(const std::vector<SessionResult>& results, int max_turns, int max_rank);

// A per-session decision rule. Sessions call on_session_start() after reset.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void on_session_start() {}
  virtual EnvAction decide(const ConversationState& state) = 0;
};

// Recommends the top-k candidate items by preference weight every turn.
class AbsGreedyPolicy : public Policy {
 public:
  AbsGreedyPolicy(const KnowledgeGraph& g, const EmbeddingTable& emb, int k)
      : g_(&g), emb_(&emb), k_(k) {}
  EnvAction decide(const ConversationState& state) override;

 private:
  const KnowledgeGraph* g_;
  const EmbeddingTable* emb_;
  int k_;
};

// Asks the attribute with the highest binary entropy of candidate coverage
// with probability max(0, 1 - turn/T); otherwise recommends like AbsGreedy.
class MaxEntropyPolicy : public Policy {
 public:
  MaxEntropyPolicy(const KnowledgeGraph& g, const EmbeddingTable& emb, int k, int max_turns,
                   uint64_t seed)
      : g_(&g), emb_(&emb), k_(k), max_turns_(max_turns), rng_(seed) {}
  EnvAction decide(const ConversationState& state) override;

 private:
  const KnowledgeGraph* g_;
  const EmbeddingTable* emb_;
  int k_;
  int max_turns_;
  Rng rng_;
};

// Picks uniformly from the pruned action space the agent would see.
class RandomPolicy : public Policy {
 public:
  RandomPolicy(const KnowledgeGraph& g, const EmbeddingTable& emb, int k_items, int k_attrs,
               uint64_t seed)
      : g_(&g), emb_(&emb), k_items_(k_items), k_attrs_(k_attrs), rng_(seed) {}
  EnvAction decide(const ConversationState& state) override;

 private:
  const KnowledgeGraph* g_;
  const EmbeddingTable* emb_;
  int k_items_, k_attrs_;
  Rng rng_;
};

// Greedy wrapper over a trained agent.
class AgentPolicy : public Policy {
 public:
  explicit AgentPolicy(Agent& agent) : agent_(&agent) {}
  EnvAction decide(const ConversationState& state) override {
    return agent_->infer_next_action(state);
  }

 private:
  Agent* agent_;
};

SessionResult run_session(const KnowledgeGraph& g, Policy& policy, int32_t user, int32_t target,
                          const RewardScheme& rewards, int max_turns, Rng& reset_rng);

// Runs every (user, target) pair in order through the policy.
std::vector<SessionResult> run_evaluation(const KnowledgeGraph& g,
                                          const std::vector<std::pair<int32_t, int32_t>>& pairs,
                                          Policy& policy, const RewardScheme& rewards,
                                          int max_turns, uint64_t seed);

}  // namespace unicorn
