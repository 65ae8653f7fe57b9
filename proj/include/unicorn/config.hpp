#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "unicorn/agent.hpp"
#include "unicorn/transe.hpp"

namespace unicorn {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every tunable, flattened. Precedence: defaults, then config file, then
// command-line flags, then the UNICORN_SEED environment variable.
struct RunConfig {
  uint64_t seed = 42;
  uint64_t split_seed = 42;  // kept apart so test sets survive seed sweeps

  std::string data_dir = "data";
  std::string embeddings;   // embedding checkpoint (pretrain output)
  std::string checkpoint;   // agent checkpoint
  std::string out_dir = ".";
  std::string policy = "agent";      // agent | abs-greedy | max-entropy | random
  std::string train_split = "valid";  // split driving online training
  std::string eval_split = "test";
  int episodes = 1000;
  int log_every = 1;

  int dim = 64;
  int hidden = 100;
  int gcn_layers = 2;
  int tf_layers = 1;
  int heads = 1;
  int ffn_dim = 64;
  bool positional_encoding = true;

  int k_items = 10;
  int k_attrs = 10;
  int max_turns = 15;

  int buffer = 50000;
  int batch = 128;
  double lr = 1e-4;
  double l2 = 1e-6;
  double gamma = 0.999;
  double tau = 0.01;
  double eps_start = 1.0;
  double eps_decay = 0.999;
  double eps_floor = 0.01;
  double per_alpha = 0.6;
  double per_beta_start = 0.4;
  double per_beta_end = 1.0;
  double per_eps = 1e-5;
  bool canonical_dueling = false;
  bool value_on_state = false;

  double reward_rec_suc = 1.0;
  double reward_rec_fail = -0.1;
  double reward_ask_suc = 0.01;
  double reward_ask_fail = -0.1;
  double reward_quit = -0.3;

  double train_frac = 0.7;
  double valid_frac = 0.15;

  int transe_epochs = 200;
  double transe_margin = 1.0;
  int transe_norm = 2;
  double transe_lr = 0.02;
  int transe_batch = 64;
  int transe_negatives = 1;

  void set(const std::string& key, const std::string& value);
  void apply_file(const std::string& path);
  void apply_env();  // UNICORN_SEED

  std::string canonical_string() const;  // sorted key=value lines
  std::string hash() const;              // FNV-1a of the canonical string, hex

  AgentConfig agent_config() const;
  TransEConfig transe_config() const;
  RewardScheme reward_scheme() const;
};

}  // namespace unicorn
