#include "unicorn/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "unicorn/checkpoint.hpp"

namespace unicorn {

// ---------------------------------------------------------------------------
// Replay buffer

namespace {

int pow2_at_least(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

ReplayBuffer::ReplayBuffer(int capacity, double alpha, double eps_prio)
    : capacity_(capacity), alpha_(alpha), eps_prio_(eps_prio) {
  if (capacity < 1) throw std::invalid_argument("replay capacity must be positive");
  leaf_base_ = pow2_at_least(capacity);
  sum_.assign(2 * leaf_base_, 0.0);
  max_.assign(2 * leaf_base_, 0.0);
  entries_.resize(capacity);
}

void ReplayBuffer::set_leaf(int slot, double value) {
  int i = leaf_base_ + slot;
  sum_[i] = value;
  max_[i] = value;
  for (i >>= 1; i >= 1; i >>= 1) {
    sum_[i] = sum_[2 * i] + sum_[2 * i + 1];
    max_[i] = std::max(max_[2 * i], max_[2 * i + 1]);
  }
}

int ReplayBuffer::store(Experience exp) {
  int slot = next_;
  entries_[slot] = std::move(exp);
  set_leaf(slot, max_priority());
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  return slot;
}

void ReplayBuffer::update_priority(int slot, double abs_td) {
  set_leaf(slot, std::pow(std::abs(abs_td) + eps_prio_, alpha_));
}

void ReplayBuffer::set_transformed_priority(int slot, double value) {
  if (value <= 0.0) throw std::invalid_argument("priority must be positive");
  set_leaf(slot, value);
}

std::vector<ReplayBuffer::Draw> ReplayBuffer::sample(int batch, Rng& rng) const {
  if (size_ == 0) throw std::logic_error("sampling from an empty replay buffer");
  double total = sum_[1];
  std::vector<Draw> draws;
  draws.reserve(batch);
  for (int b = 0; b < batch; ++b) {
    double u = rng.uniform() * total;
    int i = 1;
    while (i < leaf_base_) {
      int left = 2 * i;
      if (u < sum_[left]) {
        i = left;
      } else {
        u -= sum_[left];
        i = left + 1;
      }
    }
    int slot = std::min(i - leaf_base_, size_ - 1);
    draws.push_back({slot, sum_[leaf_base_ + slot] / total});
  }
  return draws;
}

// ---------------------------------------------------------------------------
// Dueling heads

void init_head_params(ParamStore& ps, int dim, int hidden, Rng& rng) {
  ps.add("head.value.w1", xavier_uniform(dim, hidden, rng));
  ps.add("head.value.b1", Matrix::Zero(1, hidden));
  ps.add("head.value.w2", xavier_uniform(hidden, 1, rng));
  ps.add("head.value.b2", Matrix::Zero(1, 1));
  ps.add("head.adv.w1", xavier_uniform(2 * dim, hidden, rng));
  ps.add("head.adv.b1", Matrix::Zero(1, hidden));
  ps.add("head.adv.w2", xavier_uniform(hidden, 1, rng));
  ps.add("head.adv.b2", Matrix::Zero(1, 1));
}

double q_value(const Vector& state_rep, const Vector& action_rep, const ParamStore& heads,
               bool value_on_state) {
  auto mlp = [&](const std::string& prefix, const Eigen::RowVectorXd& x) {
    Eigen::RowVectorXd h =
        (x * heads.value(prefix + ".w1") + heads.value(prefix + ".b1")).cwiseMax(0.0);
    return (h * heads.value(prefix + ".w2") + heads.value(prefix + ".b2"))(0, 0);
  };
  Eigen::RowVectorXd vin = (value_on_state ? state_rep : action_rep).transpose();
  Eigen::RowVectorXd ain(state_rep.size() + action_rep.size());
  ain << state_rep.transpose(), action_rep.transpose();
  return mlp("head.value", vin) + mlp("head.adv", ain);
}

namespace {

struct HeadVars {
  TVar vw1, vb1, vw2, vb2;
  TVar aw1, ab1, aw2, ab2;
};

HeadVars map_head_vars(const ParamStore& ps, const std::vector<TVar>& attached) {
  auto at = [&](const char* n) { return attached[ps.find(n)]; };
  return {at("head.value.w1"), at("head.value.b1"), at("head.value.w2"), at("head.value.b2"),
          at("head.adv.w1"),   at("head.adv.b1"),   at("head.adv.w2"),   at("head.adv.b2")};
}

TVar mlp2(Tape& t, TVar x, TVar w1, TVar b1, TVar w2, TVar b2) {
  return t.add_rowvec(t.mm(t.relu(t.add_rowvec(t.mm(x, w1), b1)), w2), b2);
}

std::vector<int> counts_to_offsets(const std::vector<int>& counts) {
  std::vector<int> offsets(counts.size() + 1, 0);
  for (size_t i = 0; i < counts.size(); ++i) offsets[i + 1] = offsets[i] + counts[i];
  return offsets;
}

// Q for every action row: value head plus advantage head on [state, action],
// one state row per segment of `counts` action rows. Per-state work runs on
// the state rows and is repeated afterwards; the advantage input never gets
// materialized, its first layer is split into a state and an action half.
TVar head_q(Tape& t, TVar states, TVar actions, const std::vector<int>& counts,
            const HeadVars& h, bool canonical, bool value_on_state) {
  int dim = static_cast<int>(t.val(states).cols());
  int adim = static_cast<int>(t.val(actions).cols());
  TVar v = value_on_state
               ? t.repeat_segments(mlp2(t, states, h.vw1, h.vb1, h.vw2, h.vb2), counts)
               : mlp2(t, actions, h.vw1, h.vb1, h.vw2, h.vb2);
  TVar aw1_s = t.slice_rows(h.aw1, 0, dim);
  TVar aw1_a = t.slice_rows(h.aw1, dim, adim);
  TVar pre = t.add(t.repeat_segments(t.mm(states, aw1_s), counts), t.mm(actions, aw1_a));
  TVar a = t.add_rowvec(t.mm(t.relu(t.add_rowvec(pre, h.ab1)), h.aw2), h.ab2);
  TVar q = t.add(v, a);
  if (canonical) {
    TVar mean = t.segment_mean(a, counts_to_offsets(counts));
    q = t.sub(q, t.repeat_segments(mean, counts));
  }
  return q;
}

// Everything needed to encode one conversation state and read off the rows
// for its accepted attributes and a chosen set of action nodes.
struct SampleCtx {
  WeightedSubgraph sg;
  CsrMatrix lam;
  std::vector<int> global_nodes;
  std::vector<int> acc_rows;
  std::vector<int> act_rows;
  std::vector<int64_t> act_global;  // argmax tie-break order
};

int local_row_of(const WeightedSubgraph& sg, const ConversationState& st, bool is_item,
                 int32_t index) {
  if (is_item) {
    auto it = std::lower_bound(st.cand_items.begin(), st.cand_items.end(), index);
    if (it == st.cand_items.end() || *it != index)
      throw std::logic_error("action item is not a candidate");
    return sg.items_begin + static_cast<int>(it - st.cand_items.begin());
  }
  auto it = std::lower_bound(st.cand_attrs.begin(), st.cand_attrs.end(), index);
  if (it == st.cand_attrs.end() || *it != index)
    throw std::logic_error("action attribute is not a candidate");
  return sg.attrs_begin + static_cast<int>(it - st.cand_attrs.begin());
}

SampleCtx build_ctx(const KnowledgeGraph& g, const EmbeddingTable& emb,
                    const ConversationState& st,
                    const std::vector<std::pair<bool, int32_t>>& actions) {
  SampleCtx ctx;
  ctx.sg = build_subgraph(g, emb, st);
  ctx.lam = normalize_adjacency(adjacency_csr(ctx.sg));
  ctx.global_nodes.reserve(ctx.sg.nodes.size());
  for (const NodeId& n : ctx.sg.nodes) ctx.global_nodes.push_back(g.global_index(n));
  for (int i = 0; i < ctx.sg.accepted_count; ++i) ctx.acc_rows.push_back(ctx.sg.accepted_begin + i);
  ctx.act_rows.reserve(actions.size());
  ctx.act_global.reserve(actions.size());
  for (const auto& [is_item, index] : actions) {
    ctx.act_rows.push_back(local_row_of(ctx.sg, st, is_item, index));
    ctx.act_global.push_back(
        g.global_index(is_item ? item_node(index) : attr_node(index)));
  }
  return ctx;
}

std::vector<std::pair<bool, int32_t>> space_actions(const ActionSpace& space) {
  std::vector<std::pair<bool, int32_t>> acts;
  acts.reserve(space.size());
  for (const auto& sa : space.item_actions) acts.emplace_back(true, sa.index);
  for (const auto& sa : space.attr_actions) acts.emplace_back(false, sa.index);
  return acts;
}

struct BatchEncoded {
  TVar states;   // one row per sample
  TVar actions;  // stacked action rows, grouped by sample
  std::vector<int> counts;
};

// Encodes a set of states in one pass. When gw0/gb0 are valid they hold the
// whole entity table already multiplied by the first GCN layer's weights, so
// each sample only gathers its rows; otherwise the products run per sample.
// The last GCN layer is evaluated only at the accepted and action rows, with
// the aggregation (a sparse row selection) applied before the weight product.
BatchEncoded encode_ctxs(Tape& t, const std::vector<const SampleCtx*>& ctxs,
                         const Matrix& entity, const EncoderVars& ev,
                         const EncoderConfig& cfg, TVar gw0, TVar gb0) {
  int L = cfg.gcn_layers;
  if (L < 1) throw std::invalid_argument("need at least one aggregation layer");
  std::vector<TVar> z_acc, h_acc, z_act, h_act;
  std::vector<int> acc_counts, act_counts;
  for (const SampleCtx* c : ctxs) {
    TVar xw, xb;
    if (gw0.valid()) {
      xw = t.gather_rows(gw0, c->global_nodes);
      xb = t.gather_rows(gb0, c->global_nodes);
    } else {
      Matrix feats(static_cast<int>(c->global_nodes.size()), entity.cols());
      for (size_t i = 0; i < c->global_nodes.size(); ++i)
        feats.row(static_cast<int>(i)) = entity.row(c->global_nodes[i]);
      TVar x0 = t.constant(std::move(feats));
      xw = t.mm(x0, ev.gcn_w[0]);
      xb = t.mm(x0, ev.gcn_b[0]);
    }
    if (L == 1) {
      z_acc.push_back(t.spmm_rows(&c->lam, c->acc_rows, xw));
      h_acc.push_back(t.gather_rows(xb, c->acc_rows));
      z_act.push_back(t.spmm_rows(&c->lam, c->act_rows, xw));
      h_act.push_back(t.gather_rows(xb, c->act_rows));
    } else {
      TVar h = t.relu(t.add(t.spmm(&c->lam, xw), xb));
      for (int l = 1; l + 1 < L; ++l)
        h = gcn_layer_tape(t, &c->lam, h, ev.gcn_w[l], ev.gcn_b[l]);
      z_acc.push_back(t.spmm_rows(&c->lam, c->acc_rows, h));
      h_acc.push_back(t.gather_rows(h, c->acc_rows));
      z_act.push_back(t.spmm_rows(&c->lam, c->act_rows, h));
      h_act.push_back(t.gather_rows(h, c->act_rows));
    }
    acc_counts.push_back(static_cast<int>(c->acc_rows.size()));
    act_counts.push_back(static_cast<int>(c->act_rows.size()));
  }
  TVar acc_out, act_out;
  if (L == 1) {
    acc_out = t.relu(t.add(t.vstack(z_acc), t.vstack(h_acc)));
    act_out = t.relu(t.add(t.vstack(z_act), t.vstack(h_act)));
  } else {
    TVar w = ev.gcn_w[L - 1], b = ev.gcn_b[L - 1];
    acc_out = t.relu(t.add(t.mm(t.vstack(z_acc), w), t.mm(t.vstack(h_acc), b)));
    act_out = t.relu(t.add(t.mm(t.vstack(z_act), w), t.mm(t.vstack(h_act), b)));
  }
  TVar seq = transformer_forward_batch_tape(t, acc_out, counts_to_offsets(acc_counts), ev, cfg);
  BatchEncoded out;
  out.states = t.segment_mean(seq, counts_to_offsets(acc_counts));
  out.actions = act_out;
  out.counts = std::move(act_counts);
  return out;
}

int argmax_with_ties(const Matrix& q, int begin, int count, const std::vector<int64_t>& gids) {
  int best = 0;
  for (int i = 1; i < count; ++i) {
    double qi = q(begin + i, 0), qb = q(begin + best, 0);
    if (qi > qb || (qi == qb && gids[i] < gids[best])) best = i;
  }
  return best;
}

constexpr const char* kTargetPrefix = "target.";

}  // namespace

// ---------------------------------------------------------------------------
// Agent

Agent::Agent(const KnowledgeGraph& g, const EmbeddingTable& emb, AgentConfig cfg, uint64_t seed)
    : g_(&g),
      emb_(&emb),
      cfg_(cfg),
      opt_(cfg.learning_rate),
      buffer_(cfg.buffer_capacity, cfg.per_alpha, cfg.per_eps),
      act_rng_(derive_seed(seed, "agent.act")),
      buffer_rng_(derive_seed(seed, "agent.buffer")),
      epsilon_(cfg.eps_start),
      seed_(seed) {
  if (emb.dim != cfg.encoder.dim)
    throw std::invalid_argument("embedding dim does not match encoder dim");
  Rng init_rng(derive_seed(seed, "agent.init"));
  init_encoder_params(online_, cfg_.encoder, init_rng);
  init_head_params(online_, cfg_.encoder.dim, cfg_.hidden, init_rng);
  for (const auto& e : online_.entries())
    if (e.name.rfind("head.", 0) == 0) target_.add(e.name, e.value);
}

double Agent::beta() const {
  double frac = cfg_.beta_anneal_episodes > 0
                    ? std::min(1.0, static_cast<double>(episodes_done_) / cfg_.beta_anneal_episodes)
                    : 1.0;
  return cfg_.per_beta_start + (cfg_.per_beta_end - cfg_.per_beta_start) * frac;
}

std::vector<double> Agent::action_q_values(const ConversationState& state,
                                           const ActionSpace& space) {
  if (space.empty()) throw std::invalid_argument("empty action space");
  SampleCtx ctx = build_ctx(*g_, *emb_, state, space_actions(space));
  Tape t;
  auto attached = online_.attach(t, false);
  EncoderVars ev = map_encoder_vars(online_, attached, cfg_.encoder);
  HeadVars hv = map_head_vars(online_, attached);
  BatchEncoded enc = encode_ctxs(t, {&ctx}, emb_->entity, ev, cfg_.encoder, TVar{}, TVar{});
  TVar q = head_q(t, enc.states, enc.actions, enc.counts, hv, cfg_.canonical_dueling,
                  cfg_.value_on_state);
  const Matrix& qv = t.val(q);
  std::vector<double> out(qv.rows());
  for (int i = 0; i < qv.rows(); ++i) out[i] = qv(i, 0);
  return out;
}

Agent::Decision Agent::act(const ConversationState& state, const ActionSpace& space,
                           double epsilon) {
  if (space.empty()) throw std::invalid_argument("empty action space");
  int n_items = static_cast<int>(space.item_actions.size());
  Decision dec;
  if (epsilon > 0.0 && act_rng_.uniform() < epsilon) {
    dec.explored = true;
    int pick = static_cast<int>(act_rng_.uniform_int(space.size()));
    if (pick < n_items) {
      dec.is_item = true;
      dec.index = space.item_actions[pick].index;
      std::vector<int32_t> items;
      items.reserve(n_items);
      for (const auto& sa : space.item_actions) items.push_back(sa.index);
      std::rotate(items.begin(), items.begin() + pick, items.begin() + pick + 1);
      dec.env_action = RecommendAction{std::move(items)};
    } else {
      dec.is_item = false;
      dec.index = space.attr_actions[pick - n_items].index;
      dec.env_action = AskAction{dec.index};
    }
    return dec;
  }
  std::vector<double> qs = action_q_values(state, space);
  std::vector<int64_t> gids;
  gids.reserve(space.size());
  for (const auto& sa : space.item_actions) gids.push_back(g_->global_index(item_node(sa.index)));
  for (const auto& sa : space.attr_actions) gids.push_back(g_->global_index(attr_node(sa.index)));
  int best = 0;
  for (int i = 1; i < static_cast<int>(qs.size()); ++i)
    if (qs[i] > qs[best] || (qs[i] == qs[best] && gids[i] < gids[best])) best = i;
  if (best < n_items) {
    dec.is_item = true;
    dec.index = space.item_actions[best].index;
    std::vector<int> order(n_items);
    for (int i = 0; i < n_items; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (qs[a] != qs[b]) return qs[a] > qs[b];
      return gids[a] < gids[b];
    });
    std::vector<int32_t> items;
    items.reserve(n_items);
    for (int i : order) items.push_back(space.item_actions[i].index);
    dec.env_action = RecommendAction{std::move(items)};
  } else {
    dec.is_item = false;
    dec.index = space.attr_actions[best - n_items].index;
    dec.env_action = AskAction{dec.index};
  }
  return dec;
}

double Agent::compute_target(const Experience& exp) {
  if (exp.terminal || exp.next_space.empty()) return exp.reward;
  SampleCtx ctx = build_ctx(*g_, *emb_, exp.next_state, space_actions(exp.next_space));
  Tape t;
  auto online_vars = online_.attach(t, false);
  auto target_vars = target_.attach(t, false);
  EncoderVars ev = map_encoder_vars(online_, online_vars, cfg_.encoder);
  HeadVars hv_online = map_head_vars(online_, online_vars);
  HeadVars hv_target = map_head_vars(target_, target_vars);
  BatchEncoded enc = encode_ctxs(t, {&ctx}, emb_->entity, ev, cfg_.encoder, TVar{}, TVar{});
  TVar q_online = head_q(t, enc.states, enc.actions, enc.counts, hv_online,
                         cfg_.canonical_dueling, cfg_.value_on_state);
  int pick = argmax_with_ties(t.val(q_online), 0, enc.counts[0], ctx.act_global);
  TVar q_target = head_q(t, enc.states, enc.actions, enc.counts, hv_target,
                         cfg_.canonical_dueling, cfg_.value_on_state);
  return exp.reward + cfg_.gamma * t.val(q_target)(pick, 0);
}

double g_build_secs = 0.0, g_encode_secs = 0.0, g_backward_secs = 0.0, g_step_secs = 0.0;
namespace {
struct ScopedTimer {
  double& acc;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  explicit ScopedTimer(double& a) : acc(a) {}
  ~ScopedTimer() { acc += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};
}  // namespace

TrainStepStats Agent::train_step() {
  if (buffer_.size() < cfg_.batch_size) return {};
  ScopedTimer st_all(g_step_secs);
  auto draws = buffer_.sample(cfg_.batch_size, buffer_rng_);

  // Draws repeat slots, heavily so while the buffer is small. Repeats share
  // the TD error, so fold them into one sample with their weights summed.
  std::vector<int> slots;
  std::vector<double> probs, mult;
  std::unordered_map<int, int> slot_pos;
  slots.reserve(draws.size());
  for (const auto& d : draws) {
    auto [it, fresh] = slot_pos.try_emplace(d.slot, static_cast<int>(slots.size()));
    if (fresh) {
      slots.push_back(d.slot);
      probs.push_back(d.prob);
      mult.push_back(1.0);
    } else {
      mult[it->second] += 1.0;
    }
  }
  int batch = static_cast<int>(slots.size());

  Tape t;
  auto online_vars = online_.attach(t, true);
  auto target_vars = target_.attach(t, false);
  EncoderVars ev = map_encoder_vars(online_, online_vars, cfg_.encoder);
  HeadVars hv_online = map_head_vars(online_, online_vars);
  HeadVars hv_target = map_head_vars(target_, target_vars);

  TVar entity = t.constant(emb_->entity);
  TVar gw0 = t.mm(entity, ev.gcn_w[0]);
  TVar gb0 = t.mm(entity, ev.gcn_b[0]);

  // Decision-side contexts. The canonical form needs the whole action set to
  // subtract the mean advantage; the default form only scores the taken one.
  std::vector<std::unique_ptr<SampleCtx>> s_store;
  std::vector<const SampleCtx*> s_ctxs;
  std::vector<int> chosen_flat;  // row of the taken action within stacked actions
  int flat = 0;
  for (int slot : slots) {
    const Experience& exp = buffer_.at(slot);
    std::vector<std::pair<bool, int32_t>> acts;
    int chosen_pos = 0;
    if (cfg_.canonical_dueling) {
      acts = space_actions(exp.space);
      for (size_t i = 0; i < acts.size(); ++i)
        if (acts[i].first == exp.action_is_item && acts[i].second == exp.action)
          chosen_pos = static_cast<int>(i);
    } else {
      acts = {{exp.action_is_item, exp.action}};
    }
    s_store.push_back(
        std::make_unique<SampleCtx>(build_ctx(*g_, *emb_, exp.state, acts)));
    s_ctxs.push_back(s_store.back().get());
    chosen_flat.push_back(flat + chosen_pos);
    flat += static_cast<int>(acts.size());
  }
  BatchEncoded enc_s = encode_ctxs(t, s_ctxs, emb_->entity, ev, cfg_.encoder, gw0, gb0);
  TVar q_all = head_q(t, enc_s.states, enc_s.actions, enc_s.counts, hv_online,
                      cfg_.canonical_dueling, cfg_.value_on_state);
  TVar q_sa = cfg_.canonical_dueling ? t.gather_rows(q_all, chosen_flat) : q_all;

  // Next-side contexts for the double-Q targets; the loss never reaches these
  // nodes so the backward sweep skips them.
  std::vector<std::unique_ptr<SampleCtx>> n_store;
  std::vector<const SampleCtx*> n_ctxs;
  std::vector<int> n_of_sample(batch, -1);
  for (int i = 0; i < batch; ++i) {
    const Experience& exp = buffer_.at(slots[i]);
    if (exp.terminal || exp.next_space.empty()) continue;
    n_of_sample[i] = static_cast<int>(n_ctxs.size());
    n_store.push_back(std::make_unique<SampleCtx>(
        build_ctx(*g_, *emb_, exp.next_state, space_actions(exp.next_space))));
    n_ctxs.push_back(n_store.back().get());
  }
  std::vector<double> q_next(n_ctxs.size(), 0.0);
  if (!n_ctxs.empty()) {
    BatchEncoded enc_n = encode_ctxs(t, n_ctxs, emb_->entity, ev, cfg_.encoder, gw0, gb0);
    TVar qn_online = head_q(t, enc_n.states, enc_n.actions, enc_n.counts, hv_online,
                            cfg_.canonical_dueling, cfg_.value_on_state);
    const Matrix& qo = t.val(qn_online);
    std::vector<int> pick_rows(n_ctxs.size());
    int begin = 0;
    for (size_t s = 0; s < n_ctxs.size(); ++s) {
      int pick = argmax_with_ties(qo, begin, enc_n.counts[s], n_ctxs[s]->act_global);
      pick_rows[s] = begin + pick;
      begin += enc_n.counts[s];
    }
    if (cfg_.canonical_dueling) {
      // The mean-advantage correction needs the whole action set.
      TVar qn_target = head_q(t, enc_n.states, enc_n.actions, enc_n.counts, hv_target,
                              true, cfg_.value_on_state);
      const Matrix& qt = t.val(qn_target);
      for (size_t s = 0; s < n_ctxs.size(); ++s) q_next[s] = qt(pick_rows[s], 0);
    } else {
      // The greedy action is already fixed, so the target head only has to
      // evaluate that one row per sample.
      std::vector<int> ones(n_ctxs.size(), 1);
      TVar a_star = t.gather_rows(enc_n.actions, pick_rows);
      TVar qn_target =
          head_q(t, enc_n.states, a_star, ones, hv_target, false, cfg_.value_on_state);
      const Matrix& qt = t.val(qn_target);
      for (size_t s = 0; s < n_ctxs.size(); ++s) q_next[s] = qt(static_cast<int>(s), 0);
    }
  }

  // Targets are constants: the TD error only differentiates the decision side.
  Matrix y(batch, 1);
  for (int i = 0; i < batch; ++i) {
    const Experience& exp = buffer_.at(slots[i]);
    y(i, 0) = (n_of_sample[i] < 0) ? exp.reward
                                   : exp.reward + cfg_.gamma * q_next[n_of_sample[i]];
  }

  double beta_now = beta();
  Matrix w(batch, 1);
  double wmax = 0.0;
  for (int i = 0; i < batch; ++i) {
    w(i, 0) = std::pow(buffer_.size() * probs[i], -beta_now);
    wmax = std::max(wmax, w(i, 0));
  }
  for (int i = 0; i < batch; ++i) w(i, 0) *= mult[i];
  w /= wmax * static_cast<double>(draws.size());

  TVar diff = t.sub(q_sa, t.constant(y));
  TVar loss = t.sum_all(t.cmul_const(t.cmul(diff, diff), w));
  TVar reg{};
  for (TVar p : online_vars) reg = reg.valid() ? t.add(reg, t.sumsq(p)) : t.sumsq(p);
  loss = t.add(loss, t.scale(reg, cfg_.l2));

  t.backward(loss);
  std::vector<Matrix> grads;
  grads.reserve(online_vars.size());
  for (TVar p : online_vars) grads.push_back(t.grad(p));
  opt_.step(online_, grads);

  const Matrix& d = t.val(diff);
  for (int i = 0; i < batch; ++i) buffer_.update_priority(slots[i], std::abs(d(i, 0)));

  return {true, t.scalar(loss)};
}

void Agent::soft_update() {
  for (const auto& e : target_.entries()) {
    Matrix& tgt = target_.value(e.name);
    tgt = cfg_.tau * online_.value(e.name) + (1.0 - cfg_.tau) * tgt;
  }
}

EpisodeRecord Agent::run_episode(int32_t user, int32_t target, bool train) {
  EpisodeRecord rec;
  rec.user = user;
  rec.target = target;
  rec.epsilon = train ? epsilon_ : 0.0;
  ConversationState state = env_reset(*g_, user, target, act_rng_);
  while (true) {
    if (state.cand_items.empty()) break;
    ActionSpace space = build_action_space(*g_, *emb_, state, cfg_.k_items, cfg_.k_attrs);
    Decision dec = act(state, space, train ? epsilon_ : 0.0);
    StepOutcome out = env_step(*g_, state, dec.env_action, target, cfg_.rewards, cfg_.max_turns);
    TrainStepStats stats;
    if (train) {
      Experience exp;
      exp.state = state;
      exp.space = space;
      exp.action_is_item = dec.is_item;
      exp.action = dec.index;
      exp.reward = out.reward;
      exp.next_state = out.next;
      if (!out.terminal)
        exp.next_space = build_action_space(*g_, *emb_, out.next, cfg_.k_items, cfg_.k_attrs);
      exp.terminal = out.terminal;
      buffer_.store(std::move(exp));
      stats = train_step();
      soft_update();
    }
    rec.turns.push_back({state.turn, !dec.is_item, dec.index, dec.explored, out.reward,
                         stats.ran ? stats.loss : std::numeric_limits<double>::quiet_NaN()});
    rec.total_reward += out.reward;
    state = out.next;
    if (out.terminal) {
      rec.success = out.success;
      rec.target_position = out.target_position;
      break;
    }
  }
  rec.turns_used = state.turn;
  if (train) {
    ++episodes_done_;
    epsilon_ = std::max(cfg_.eps_floor, epsilon_ * cfg_.eps_decay);
  }
  return rec;
}

EnvAction Agent::infer_next_action(const ConversationState& state) {
  ActionSpace space = build_action_space(*g_, *emb_, state, cfg_.k_items, cfg_.k_attrs);
  return act(state, space, 0.0).env_action;
}

void Agent::save_checkpoint(const std::string& path) const {
  std::vector<std::pair<std::string, const Matrix*>> tensors;
  tensors.emplace_back("emb.entity", &emb_->entity);
  tensors.emplace_back("emb.rel.interact", &emb_->rel_interact);
  tensors.emplace_back("emb.rel.belong", &emb_->rel_belong);
  for (const auto& e : online_.entries()) tensors.emplace_back(e.name, &e.value);
  std::vector<std::string> target_names;  // keep prefixed names alive
  target_names.reserve(target_.size());
  for (const auto& e : target_.entries()) target_names.push_back(kTargetPrefix + e.name);
  for (int i = 0; i < target_.size(); ++i)
    tensors.emplace_back(target_names[i], &target_.entries()[i].value);
  save_tensor_file(path, tensors);

  nlohmann::ordered_json meta;
  meta["episode"] = episodes_done_;
  meta["epsilon"] = epsilon_;
  meta["beta"] = beta();
  meta["seed"] = seed_;
  std::ofstream out(path + ".json");
  if (!out) throw CheckpointError("cannot write metadata: " + path + ".json");
  out << meta.dump(2) << "\n";
}

void Agent::load_checkpoint(const std::string& path) {
  auto tensors = load_tensor_file(path);
  auto find = [&](const std::string& name) -> const Matrix* {
    for (const auto& [n, m] : tensors)
      if (n == name) return &m;
    return nullptr;
  };
  auto assign = [&](ParamStore& ps, const std::string& stored, const std::string& local) {
    const Matrix* m = find(stored);
    if (!m) throw CheckpointError("missing tensor: " + stored);
    Matrix& dst = ps.value(local);
    if (m->rows() != dst.rows() || m->cols() != dst.cols())
      throw CheckpointError("shape mismatch for tensor: " + stored);
    dst = *m;
  };
  for (const auto& e : online_.entries()) assign(online_, e.name, e.name);
  for (const auto& e : target_.entries()) assign(target_, kTargetPrefix + e.name, e.name);
  for (const auto& [n, m] : tensors) {
    if (n.rfind("emb.", 0) == 0) continue;
    bool known = online_.contains(n) ||
                 (n.rfind(kTargetPrefix, 0) == 0 && target_.contains(n.substr(7)));
    if (!known) throw CheckpointError("unexpected tensor: " + n);
  }

  std::ifstream in(path + ".json");
  if (!in) throw CheckpointError("missing metadata: " + path + ".json");
  nlohmann::json meta = nlohmann::json::parse(in, nullptr, true);
  episodes_done_ = meta.at("episode").get<int64_t>();
  epsilon_ = meta.at("epsilon").get<double>();
}

}  // namespace unicorn
