#include "unicorn/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace unicorn {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean for " + key + ": " + v);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": " + v);
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad unsigned integer for " + key + ": " + v);
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": " + v);
  }
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") seed = parse_u64(key, value);
  else if (key == "split_seed") split_seed = parse_u64(key, value);
  else if (key == "data_dir") data_dir = value;
  else if (key == "embeddings") embeddings = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "policy") policy = value;
  else if (key == "train_split") train_split = value;
  else if (key == "eval_split") eval_split = value;
  else if (key == "episodes") episodes = parse_int(key, value);
  else if (key == "log_every") log_every = parse_int(key, value);
  else if (key == "dim") dim = parse_int(key, value);
  else if (key == "hidden") hidden = parse_int(key, value);
  else if (key == "gcn_layers") gcn_layers = parse_int(key, value);
  else if (key == "tf_layers") tf_layers = parse_int(key, value);
  else if (key == "heads") heads = parse_int(key, value);
  else if (key == "ffn_dim") ffn_dim = parse_int(key, value);
  else if (key == "positional_encoding") positional_encoding = parse_bool(key, value);
  else if (key == "k_items") k_items = parse_int(key, value);
  else if (key == "k_attrs") k_attrs = parse_int(key, value);
  else if (key == "max_turns") max_turns = parse_int(key, value);
  else if (key == "buffer") buffer = parse_int(key, value);
  else if (key == "batch") batch = parse_int(key, value);
  else if (key == "lr") lr = parse_double(key, value);
  else if (key == "l2") l2 = parse_double(key, value);
  else if (key == "gamma") gamma = parse_double(key, value);
  else if (key == "tau") tau = parse_double(key, value);
  else if (key == "eps_start") eps_start = parse_double(key, value);
  else if (key == "eps_decay") eps_decay = parse_double(key, value);
  else if (key == "eps_floor") eps_floor = parse_double(key, value);
  else if (key == "per_alpha") per_alpha = parse_double(key, value);
  else if (key == "per_beta_start") per_beta_start = parse_double(key, value);
  else if (key == "per_beta_end") per_beta_end = parse_double(key, value);
  else if (key == "per_eps") per_eps = parse_double(key, value);
  else if (key == "canonical_dueling") canonical_dueling = parse_bool(key, value);
  else if (key == "value_on_state") value_on_state = parse_bool(key, value);
  else if (key == "reward_rec_suc") reward_rec_suc = parse_double(key, value);
  else if (key == "reward_rec_fail") reward_rec_fail = parse_double(key, value);
  else if (key == "reward_ask_suc") reward_ask_suc = parse_double(key, value);
  else if (key == "reward_ask_fail") reward_ask_fail = parse_double(key, value);
  else if (key == "reward_quit") reward_quit = parse_double(key, value);
  else if (key == "train_frac") train_frac = parse_double(key, value);
  else if (key == "valid_frac") valid_frac = parse_double(key, value);
  else if (key == "transe_epochs") transe_epochs = parse_int(key, value);
  else if (key == "transe_margin") transe_margin = parse_double(key, value);
  else if (key == "transe_norm") transe_norm = parse_int(key, value);
  else if (key == "transe_lr") transe_lr = parse_double(key, value);
  else if (key == "transe_batch") transe_batch = parse_int(key, value);
  else if (key == "transe_negatives") transe_negatives = parse_int(key, value);
  else throw ConfigError("unknown config key: " + key);
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    set(key, value);
  }
}

void RunConfig::apply_env() {
  if (const char* s = std::getenv("UNICORN_SEED")) seed = parse_u64("UNICORN_SEED", s);
}

std::string RunConfig::canonical_string() const {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(seed);
  kv["split_seed"] = std::to_string(split_seed);
  kv["data_dir"] = data_dir;
  kv["embeddings"] = embeddings;
  kv["checkpoint"] = checkpoint;
  kv["out_dir"] = out_dir;
  kv["policy"] = policy;
  kv["train_split"] = train_split;
  kv["eval_split"] = eval_split;
  kv["episodes"] = std::to_string(episodes);
  kv["log_every"] = std::to_string(log_every);
  kv["dim"] = std::to_string(dim);
  kv["hidden"] = std::to_string(hidden);
  kv["gcn_layers"] = std::to_string(gcn_layers);
  kv["tf_layers"] = std::to_string(tf_layers);
  kv["heads"] = std::to_string(heads);
  kv["ffn_dim"] = std::to_string(ffn_dim);
  kv["positional_encoding"] = positional_encoding ? "true" : "false";
  kv["k_items"] = std::to_string(k_items);
  kv["k_attrs"] = std::to_string(k_attrs);
  kv["max_turns"] = std::to_string(max_turns);
  kv["buffer"] = std::to_string(buffer);
  kv["batch"] = std::to_string(batch);
  kv["lr"] = fmt_double(lr);
  kv["l2"] = fmt_double(l2);
  kv["gamma"] = fmt_double(gamma);
  kv["tau"] = fmt_double(tau);
  kv["eps_start"] = fmt_double(eps_start);
  kv["eps_decay"] = fmt_double(eps_decay);
  kv["eps_floor"] = fmt_double(eps_floor);
  kv["per_alpha"] = fmt_double(per_alpha);
  kv["per_beta_start"] = fmt_double(per_beta_start);
  kv["per_beta_end"] = fmt_double(per_beta_end);
  kv["per_eps"] = fmt_double(per_eps);
  kv["canonical_dueling"] = canonical_dueling ? "true" : "false";
  kv["value_on_state"] = value_on_state ? "true" : "false";
  kv["reward_rec_suc"] = fmt_double(reward_rec_suc);
  kv["reward_rec_fail"] = fmt_double(reward_rec_fail);
  kv["reward_ask_suc"] = fmt_double(reward_ask_suc);
  kv["reward_ask_fail"] = fmt_double(reward_ask_fail);
  kv["reward_quit"] = fmt_double(reward_quit);
  kv["train_frac"] = fmt_double(train_frac);
  kv["valid_frac"] = fmt_double(valid_frac);
  kv["transe_epochs"] = std::to_string(transe_epochs);
  kv["transe_margin"] = fmt_double(transe_margin);
  kv["transe_norm"] = std::to_string(transe_norm);
  kv["transe_lr"] = fmt_double(transe_lr);
  kv["transe_batch"] = std::to_string(transe_batch);
  kv["transe_negatives"] = std::to_string(transe_negatives);
  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  return out.str();
}

std::string RunConfig::hash() const {
  std::string s = canonical_string();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

AgentConfig RunConfig::agent_config() const {
  AgentConfig a;
  a.encoder.dim = dim;
  a.encoder.gcn_layers = gcn_layers;
  a.encoder.tf_layers = tf_layers;
  a.encoder.heads = heads;
  a.encoder.ffn_dim = ffn_dim;
  a.encoder.positional_encoding = positional_encoding;
  a.hidden = hidden;
  a.gamma = gamma;
  a.tau = tau;
  a.eps_start = eps_start;
  a.eps_decay = eps_decay;
  a.eps_floor = eps_floor;
  a.batch_size = batch;
  a.learning_rate = lr;
  a.l2 = l2;
  a.max_turns = max_turns;
  a.k_items = k_items;
  a.k_attrs = k_attrs;
  a.buffer_capacity = buffer;
  a.per_alpha = per_alpha;
  a.per_beta_start = per_beta_start;
  a.per_beta_end = per_beta_end;
  a.beta_anneal_episodes = episodes;
  a.per_eps = per_eps;
  a.canonical_dueling = canonical_dueling;
  a.value_on_state = value_on_state;
  a.rewards = reward_scheme();
  return a;
}

TransEConfig RunConfig::transe_config() const {
  TransEConfig t;
  t.dim = dim;
  t.margin = transe_margin;
  t.norm = transe_norm;
  t.epochs = transe_epochs;
  t.batch_size = transe_batch;
  t.learning_rate = transe_lr;
  t.negatives_per_positive = transe_negatives;
  t.seed = derive_seed(seed, "transe");
  return t;
}

RewardScheme RunConfig::reward_scheme() const {
  RewardScheme r;
  r.rec_suc = reward_rec_suc;
  r.rec_fail = reward_rec_fail;
  r.ask_suc = reward_ask_suc;
  r.ask_fail = reward_ask_fail;
  r.quit = reward_quit;
  return r;
}

}  // namespace unicorn
