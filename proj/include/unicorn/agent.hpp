#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "unicorn/actions.hpp"
#include "unicorn/encoder.hpp"

namespace unicorn {

struct AgentConfig {
  EncoderConfig encoder;
  int hidden = 100;           // dueling head hidden width
  double gamma = 0.999;
  double tau = 0.01;          // soft-update rate, applied once per turn
  double eps_start = 1.0;
  double eps_decay = 0.999;   // multiplicative, per episode
  double eps_floor = 0.01;
  int batch_size = 128;
  double learning_rate = 1e-4;
  double l2 = 1e-6;
  int max_turns = 15;         // episode turn budget
  int k_items = 10;           // item actions kept per turn (also the list size)
  int k_attrs = 10;           // attribute actions kept per turn
  int buffer_capacity = 50000;
  double per_alpha = 0.6;
  double per_beta_start = 0.4;
  double per_beta_end = 1.0;
  int beta_anneal_episodes = 10000;  // episodes to reach per_beta_end
  double per_eps = 1e-5;
  // Q(s,a) variants. Defaults follow the additive value-of-action form; the
  // flags switch to the conventional dueling network for comparison runs.
  bool canonical_dueling = false;  // subtract the mean advantage over the action set
  bool value_on_state = false;     // value head reads the state instead of the action
  RewardScheme rewards;
};

// One stored transition. Action spaces are pinned at store time; states are
// snapshots from which the conversation subgraph is rebuilt when sampled.
struct Experience {
  ConversationState state;
  ActionSpace space;        // action space at the decision point
  bool action_is_item = false;
  int32_t action = -1;      // item or attribute index within its kind
  double reward = 0.0;
  ConversationState next_state;
  ActionSpace next_space;   // empty for terminal transitions
  bool terminal = false;
};

// Proportional prioritized replay: a sum tree drives sampling, a parallel max
// tree supplies the insertion priority for new experiences.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, double alpha, double eps_prio);

  int store(Experience exp);  // returns the slot written
  void update_priority(int slot, double abs_td);
  void set_transformed_priority(int slot, double value);  // direct pi_i, for diagnostics

  struct Draw {
    int slot;
    double prob;  // P(i) = pi_i / total
  };
  std::vector<Draw> sample(int batch, Rng& rng) const;

  const Experience& at(int slot) const { return entries_[slot]; }
  int size() const { return size_; }
  int capacity() const { return capacity_; }
  double total_priority() const { return sum_[1]; }
  double max_priority() const { return size_ == 0 ? 1.0 : max_[1]; }
  double priority_of(int slot) const { return sum_[leaf_base_ + slot]; }

 private:
  void set_leaf(int slot, double value);

  int capacity_;
  double alpha_, eps_prio_;
  int leaf_base_;              // first leaf index in the trees
  std::vector<double> sum_, max_;
  std::vector<Experience> entries_;
  int next_ = 0;
  int size_ = 0;
};

struct TurnRecord {
  int turn;             // 0-based decision index
  bool asked;           // ask vs recommend
  int32_t action;       // attribute or item index
  bool explored;        // action came from the epsilon branch
  double reward;
  double loss;          // train step loss, NaN when no step ran
};

struct EpisodeRecord {
  int32_t user = -1;
  int32_t target = -1;
  bool success = false;
  int turns_used = 0;
  int target_position = 0;  // 1-based rank at the successful turn, 0 otherwise
  double total_reward = 0.0;
  double epsilon = 0.0;
  std::vector<TurnRecord> turns;
};

struct TrainStepStats {
  bool ran = false;
  double loss = 0.0;
};

// Computes dueling Q for plain vectors with the given head tensors
// (head.value.*, head.adv.*). The canonical mean-advantage correction is the
// caller's job since it needs the whole action set.
double q_value(const Vector& state_rep, const Vector& action_rep, const ParamStore& heads,
               bool value_on_state = false);

void init_head_params(ParamStore& ps, int dim, int hidden, Rng& rng);

class Agent {
 public:
  Agent(const KnowledgeGraph& g, const EmbeddingTable& emb, AgentConfig cfg, uint64_t seed);

  // Greedy scores for every action in the space, ordered items-then-attrs.
  std::vector<double> action_q_values(const ConversationState& state, const ActionSpace& space);

  struct Decision {
    bool is_item = false;
    int32_t index = -1;       // item or attribute index
    bool explored = false;
    EnvAction env_action;     // Ask, or Recommend with the full ranked list
  };
  Decision act(const ConversationState& state, const ActionSpace& space, double epsilon);

  // Double-Q target for one transition: online network picks the next action,
  // target heads score it. Terminal or action-less transitions return the
  // bare reward.
  double compute_target(const Experience& exp);

  TrainStepStats train_step();
  void soft_update();

  // One environment episode against the ground-truth target. train=true runs
  // the full store/replay/update cycle per turn; train=false acts greedily
  // and leaves all state untouched.
  EpisodeRecord run_episode(int32_t user, int32_t target, bool train);

  // Ranked next action for interactive use: ask, or recommend a ranked list.
  EnvAction infer_next_action(const ConversationState& state);

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

  const AgentConfig& config() const { return cfg_; }
  ParamStore& online_params() { return online_; }
  const ParamStore& online_params() const { return online_; }
  ParamStore& target_params() { return target_; }
  const ParamStore& target_params() const { return target_; }
  ReplayBuffer& buffer() { return buffer_; }
  double epsilon() const { return epsilon_; }
  void set_epsilon(double e) { epsilon_ = e; }
  double beta() const;
  int64_t episodes_done() const { return episodes_done_; }
  void set_episodes_done(int64_t n) { episodes_done_ = n; }
  const KnowledgeGraph& graph() const { return *g_; }
  const EmbeddingTable& embeddings() const { return *emb_; }

 private:
  const KnowledgeGraph* g_;
  const EmbeddingTable* emb_;
  AgentConfig cfg_;
  ParamStore online_;  // gcn.*, tf.*, head.*
  ParamStore target_;  // head.* only
  AdamOptimizer opt_;
  ReplayBuffer buffer_;
  Rng act_rng_, buffer_rng_;
  double epsilon_;
  int64_t episodes_done_ = 0;
  uint64_t seed_;
};

}  // namespace unicorn
