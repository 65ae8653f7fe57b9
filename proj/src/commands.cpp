#include "unicorn/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>

#include <json.hpp>

#include "unicorn/agent.hpp"
#include "unicorn/checkpoint.hpp"
#include "unicorn/embeddings.hpp"
#include "unicorn/env.hpp"
#include "unicorn/eval.hpp"
#include "unicorn/simulator.hpp"
#include "unicorn/transe.hpp"

namespace unicorn {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  return f;
}

void write_config_echo(const RunConfig& cfg, const std::string& path) {
  auto f = open_out(path);
  f << "# config hash " << cfg.hash() << "\n" << cfg.canonical_string();
}

Dataset load_from_dir(const std::string& data_dir) {
  return load_dataset(data_dir + "/interactions.tsv", data_dir + "/attributes.tsv");
}

nlohmann::ordered_json pairs_to_json(const std::vector<std::pair<int32_t, int32_t>>& pairs,
                                     const KnowledgeGraph& g) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [u, v] : pairs) arr.push_back({g.user_id(u), g.item_id(v)});
  return arr;
}

// Embeddings for a baseline policy: the dedicated pretrain artifact when
// given, otherwise the copy stored inside an agent checkpoint.
EmbeddingTable baseline_embeddings(const RunConfig& cfg, const KnowledgeGraph& g) {
  if (!cfg.embeddings.empty()) return EmbeddingTable::load(cfg.embeddings, g);
  if (!cfg.checkpoint.empty()) return EmbeddingTable::load(cfg.checkpoint, g);
  throw ConfigError("policy '" + cfg.policy + "' needs --embeddings (or --checkpoint)");
}

}  // namespace

SplitSet split_interactions(const InteractionSet& interactions, uint64_t split_seed,
                            double train_frac, double valid_frac) {
  if (train_frac <= 0.0 || valid_frac <= 0.0 || train_frac + valid_frac >= 1.0)
    throw ConfigError("split fractions must be positive and sum below 1");
  auto pairs = interactions.pairs;
  Rng rng(derive_seed(split_seed, "split"));
  rng.shuffle(pairs);
  const auto n = static_cast<int64_t>(pairs.size());
  const auto n_train = static_cast<int64_t>(train_frac * static_cast<double>(n) + 0.5);
  const auto n_valid = static_cast<int64_t>(valid_frac * static_cast<double>(n) + 0.5);
  const auto n_test = n - n_train - n_valid;
  if (n_train <= 0 || n_valid <= 0 || n_test <= 0)
    throw DataError("too few interactions to split: " + std::to_string(n));
  SplitSet s;
  s.train.assign(pairs.begin(), pairs.begin() + n_train);
  s.valid.assign(pairs.begin() + n_train, pairs.begin() + n_train + n_valid);
  s.test.assign(pairs.begin() + n_train + n_valid, pairs.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.valid.begin(), s.valid.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

const std::vector<std::pair<int32_t, int32_t>>& split_by_name(const SplitSet& split,
                                                              const std::string& name) {
  if (name == "train") return split.train;
  if (name == "valid") return split.valid;
  if (name == "test") return split.test;
  throw ConfigError("unknown split '" + name + "' (train, valid, test)");
}

void write_split_manifest(const std::string& path, const SplitSet& split,
                          const KnowledgeGraph& g) {
  nlohmann::ordered_json j;
  j["counts"] = {{"train", split.train.size()},
                 {"valid", split.valid.size()},
                 {"test", split.test.size()}};
  j["train"] = pairs_to_json(split.train, g);
  j["valid"] = pairs_to_json(split.valid, g);
  j["test"] = pairs_to_json(split.test, g);
  open_out(path) << j.dump(2) << "\n";
}

int cmd_synth(const SynthSpec& spec, const std::string& out_dir) {
  write_synth_dataset(spec, out_dir);
  const SynthData data = generate_synth(spec);
  std::cout << "wrote " << out_dir << ": " << spec.n_users << " users, " << spec.n_items
            << " items, " << spec.n_attrs << " attributes (" << data.n_super << " super, " << data.n_universal << " universal, "
            << data.n_sub << " sub), " << data.interactions.size() << " interactions\n";
  return 0;
}

int cmd_pretrain(const RunConfig& cfg) {
  Dataset ds = load_from_dir(cfg.data_dir);
  const SplitSet split =
      split_interactions(ds.interactions, cfg.split_seed, cfg.train_frac, cfg.valid_frac);
  ds.graph.set_interactions(split.train);

  const EmbeddingTable emb = train_embeddings(ds.graph, cfg.transe_config());

  ensure_dir(cfg.out_dir);
  const std::string path =
      cfg.embeddings.empty() ? cfg.out_dir + "/embeddings.ckpt" : cfg.embeddings;
  emb.save(path);
  write_split_manifest(cfg.out_dir + "/split.json", split, ds.graph);
  write_config_echo(cfg, cfg.out_dir + "/pretrain_config.txt");

  const auto triplets = graph_triplets(ds.graph);
  const double mr = mean_rank(ds.graph, emb, triplets, cfg.transe_norm);
  double random_mr = 0.0;
  for (const auto& t : triplets) {
    const int32_t pool = t.rel == Relation::Interact ? ds.graph.n_users() : ds.graph.n_items();
    random_mr += (static_cast<double>(pool) + 1.0) / 2.0;
  }
  if (!triplets.empty()) random_mr /= static_cast<double>(triplets.size());
  std::cout << "trained embeddings on " << triplets.size() << " triplets ("
            << split.train.size() << " train interactions)\n"
            << "mean rank " << fmt(mr) << " (random baseline " << fmt(random_mr) << ")\n"
            << "saved " << path << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.embeddings.empty()) throw ConfigError("train needs --embeddings");
  Dataset ds = load_from_dir(cfg.data_dir);
  const SplitSet split =
      split_interactions(ds.interactions, cfg.split_seed, cfg.train_frac, cfg.valid_frac);
  ds.graph.set_interactions(split.train);
  const EmbeddingTable emb = EmbeddingTable::load(cfg.embeddings, ds.graph);

  Agent agent(ds.graph, emb, cfg.agent_config(), cfg.seed);
  SessionStream stream(split_by_name(split, cfg.train_split),
                       derive_seed(cfg.seed, "train.sessions"), true);

  ensure_dir(cfg.out_dir);
  auto log = open_out(cfg.out_dir + "/train_log.tsv");
  log << "episode\tuser\ttarget\tsuccess\tturns\tposition\treward\tepsilon\tloss\tsr100\n";

  std::vector<int> recent;  // success window for the moving rate
  double sr100 = 0.0;
  for (int e = 1; e <= cfg.episodes; ++e) {
    const auto [user, target] = stream.next();
    const EpisodeRecord rec = agent.run_episode(user, target, true);

    recent.push_back(rec.success ? 1 : 0);
    if (recent.size() > 100) recent.erase(recent.begin());
    sr100 = 0.0;
    for (int s : recent) sr100 += s;
    sr100 /= static_cast<double>(recent.size());

    double loss_sum = 0.0;
    int loss_n = 0;
    for (const auto& t : rec.turns)
      if (!std::isnan(t.loss)) {
        loss_sum += t.loss;
        ++loss_n;
      }
    const double mean_loss =
        loss_n > 0 ? loss_sum / loss_n : std::numeric_limits<double>::quiet_NaN();

    log << e << '\t' << ds.graph.user_id(user) << '\t' << ds.graph.item_id(target) << '\t'
        << (rec.success ? 1 : 0) << '\t' << rec.turns_used << '\t' << rec.target_position
        << '\t' << fmt(rec.total_reward) << '\t' << fmt(rec.epsilon) << '\t' << fmt(mean_loss)
        << '\t' << fmt(sr100) << '\n';
    if (cfg.log_every > 0 && e % cfg.log_every == 0)
      std::cout << "episode " << e << "/" << cfg.episodes << " sr100 " << fmt(sr100)
                << " epsilon " << fmt(agent.epsilon()) << "\n";
  }

  const std::string ckpt = cfg.checkpoint.empty() ? cfg.out_dir + "/agent.ckpt" : cfg.checkpoint;
  agent.save_checkpoint(ckpt);
  write_split_manifest(cfg.out_dir + "/split.json", split, ds.graph);
  write_config_echo(cfg, cfg.out_dir + "/train_config.txt");
  std::cout << "trained " << cfg.episodes << " episodes on split '" << cfg.train_split
            << "', final sr100 " << fmt(sr100) << "\nsaved " << ckpt << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  Dataset ds = load_from_dir(cfg.data_dir);
  const SplitSet split =
      split_interactions(ds.interactions, cfg.split_seed, cfg.train_frac, cfg.valid_frac);
  ds.graph.set_interactions(split.train);
  const auto& pairs = split_by_name(split, cfg.eval_split);

  std::unique_ptr<EmbeddingTable> emb;
  std::unique_ptr<Agent> agent;
  std::unique_ptr<Policy> policy;
  if (cfg.policy == "agent") {
    if (cfg.checkpoint.empty()) throw ConfigError("policy 'agent' needs --checkpoint");
    emb = std::make_unique<EmbeddingTable>(EmbeddingTable::load(cfg.checkpoint, ds.graph));
    agent = std::make_unique<Agent>(ds.graph, *emb, cfg.agent_config(), cfg.seed);
    agent->load_checkpoint(cfg.checkpoint);
    policy = std::make_unique<AgentPolicy>(*agent);
  } else if (cfg.policy == "abs-greedy") {
    emb = std::make_unique<EmbeddingTable>(baseline_embeddings(cfg, ds.graph));
    policy = std::make_unique<AbsGreedyPolicy>(ds.graph, *emb, cfg.k_items);
  } else if (cfg.policy == "max-entropy") {
    emb = std::make_unique<EmbeddingTable>(baseline_embeddings(cfg, ds.graph));
    policy = std::make_unique<MaxEntropyPolicy>(ds.graph, *emb, cfg.k_items, cfg.max_turns,
                                                derive_seed(cfg.seed, "eval.maxent"));
  } else if (cfg.policy == "random") {
    emb = std::make_unique<EmbeddingTable>(baseline_embeddings(cfg, ds.graph));
    policy = std::make_unique<RandomPolicy>(ds.graph, *emb, cfg.k_items, cfg.k_attrs,
                                            derive_seed(cfg.seed, "eval.random"));
  } else {
    throw ConfigError("unknown policy '" + cfg.policy +
                      "' (agent, abs-greedy, max-entropy, random)");
  }

  const auto results =
      run_evaluation(ds.graph, pairs, *policy, cfg.reward_scheme(), cfg.max_turns, cfg.seed);
  const MetricReport report = aggregate(results, cfg.max_turns, cfg.k_items);

  ensure_dir(cfg.out_dir);
  nlohmann::ordered_json j;
  j["policy"] = cfg.policy;
  j["split"] = cfg.eval_split;
  j["n_sessions"] = report.n_sessions;
  auto sr = nlohmann::ordered_json::object();
  for (const auto& [turn, rate] : report.sr_at) sr[std::to_string(turn)] = rate;
  j["sr_at"] = sr;
  j["at"] = report.at;
  j["hdcg"] = report.hdcg;
  j["seed"] = cfg.seed;
  j["config_hash"] = cfg.hash();
  open_out(cfg.out_dir + "/eval_" + cfg.policy + ".json") << j.dump(2) << "\n";

  auto csv = open_out(cfg.out_dir + "/sr_" + cfg.policy + ".csv");
  csv << "turn,sr\n";
  for (const auto& [turn, rate] : report.sr_at) csv << turn << ',' << fmt(rate) << '\n';

  std::cout << "policy " << cfg.policy << " on split '" << cfg.eval_split << "' ("
            << report.n_sessions << " sessions)\n";
  for (int t : {5, 10, cfg.max_turns})
    if (report.sr_at.count(t))
      std::cout << "  SR@" << t << " " << fmt(report.sr_at.at(t)) << "\n";
  std::cout << "  AT " << fmt(report.at) << "\n  hDCG " << fmt(report.hdcg) << "\n";
  return 0;
}

int cmd_interactive(const RunConfig& cfg, std::istream& in, std::ostream& out) {
  if (cfg.checkpoint.empty()) throw ConfigError("interactive mode needs --checkpoint");
  Dataset ds = load_from_dir(cfg.data_dir);
  const EmbeddingTable emb = EmbeddingTable::load(cfg.checkpoint, ds.graph);
  Agent agent(ds.graph, emb, cfg.agent_config(), cfg.seed);
  agent.load_checkpoint(cfg.checkpoint);
  const KnowledgeGraph& g = ds.graph;

  auto read_token = [&](const char* prompt, std::string& tok) {
    out << prompt << std::flush;
    return static_cast<bool>(in >> tok);
  };

  std::string tok;
  int32_t user = -1;
  while (user < 0) {
    if (!read_token("user id: ", tok)) return 0;
    try {
      user = g.user_index(tok);
    } catch (const DataError&) {
      out << "unknown user '" << tok << "'\n";
    }
  }
  int32_t first_attr = -1;
  while (first_attr < 0) {
    if (!read_token("attribute you are looking for: ", tok)) return 0;
    try {
      first_attr = g.attr_index(tok);
    } catch (const DataError&) {
      out << "unknown attribute '" << tok << "'\n";
    }
  }

  ConversationState state = initial_state(g, user, first_attr);
  const RewardScheme rewards = cfg.reward_scheme();
  while (true) {
    if (state.cand_items.empty()) {
      out << "no items match your answers, ending the session\n";
      return 0;
    }
    const EnvAction action = agent.infer_next_action(state);
    StepOutcome outcome;
    if (std::holds_alternative<AskAction>(action)) {
      const int32_t attr = std::get<AskAction>(action).attr;
      if (!read_token(("do you like '" + g.attr_id(attr) + "'? [y/n] ").c_str(), tok)) return 0;
      const bool liked = !tok.empty() && (tok[0] == 'y' || tok[0] == 'Y');
      outcome = apply_ask(g, state, attr, liked, rewards, cfg.max_turns);
    } else {
      const auto& items = std::get<RecommendAction>(action).items;
      out << "how about:\n";
      for (size_t i = 0; i < items.size(); ++i)
        out << "  " << (i + 1) << ". " << g.item_id(items[i]) << "\n";
      if (!read_token("pick one (0 = none of these): ", tok)) return 0;
      int pick = 0;
      try {
        pick = std::stoi(tok);
      } catch (const std::exception&) {
        pick = 0;
      }
      if (pick < 1 || pick > static_cast<int>(items.size())) pick = 0;
      outcome = apply_recommend(g, state, items, pick, rewards, cfg.max_turns);
    }
    if (outcome.success) {
      out << "great, enjoy " << g.item_id(std::get<RecommendAction>(action).items[outcome.target_position - 1])
          << "!\n";
      return 0;
    }
    if (outcome.terminal) {
      out << "out of turns, sorry we could not find a match\n";
      return 0;
    }
    state = std::move(outcome.next);
  }
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  const auto tensors = load_tensor_file(path);
  size_t total = 0;
  for (const auto& [name, m] : tensors) {
    out << name << "  " << m.rows() << "x" << m.cols() << "\n";
    total += static_cast<size_t>(m.rows()) * static_cast<size_t>(m.cols());
  }
  out << tensors.size() << " tensors, " << total << " values\n";
  std::ifstream sidecar(path + ".json", std::ios::binary);
  if (sidecar) {
    out << "sidecar " << path << ".json:\n";
    out << sidecar.rdbuf();
  }
  return 0;
}

}  // namespace unicorn
