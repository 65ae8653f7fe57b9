#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unicorn/checkpoint.hpp"
#include "unicorn/commands.hpp"

namespace {

std::vector<std::string> config_keys() {
  std::istringstream in(unicorn::RunConfig().canonical_string());
  std::vector<std::string> keys;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) keys.push_back(line.substr(0, eq));
  }
  return keys;
}

std::string kebab(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return key;
}

// One --flag per config key, applied on top of --config in resolve(). Flag
// values stay strings so RunConfig::set owns all parsing and error messages.
struct RunArgs {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void add_run_flags(CLI::App* cmd, RunArgs& args) {
  cmd->add_option("--config", args.config_path, "config file with key = value lines");
  for (const auto& key : config_keys())
    args.options[key] =
        cmd->add_option("--" + kebab(key), args.values[key], "config key " + key);
}

unicorn::RunConfig resolve(const RunArgs& args) {
  unicorn::RunConfig cfg;
  if (!args.config_path.empty()) cfg.apply_file(args.config_path);
  for (const auto& [key, opt] : args.options)
    if (opt->count() > 0) cfg.set(key, args.values.at(key));
  cfg.apply_env();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph-grounded conversational recommender"};
  app.require_subcommand(1);

  unicorn::SynthSpec spec;
  std::string synth_out = "data";
  auto* synth = app.add_subcommand("synth", "generate a clustered synthetic dataset");
  synth->add_option("--n-users", spec.n_users, "user count");
  synth->add_option("--n-items", spec.n_items, "item count");
  synth->add_option("--n-attrs", spec.n_attrs, "attribute count");
  synth->add_option("--seed", spec.seed, "generator seed");
  synth->add_option("--out-dir", synth_out, "output directory");

  RunArgs pretrain_args, train_args, eval_args, interactive_args;
  auto* pretrain =
      app.add_subcommand("pretrain", "train graph embeddings on the train split");
  add_run_flags(pretrain, pretrain_args);
  auto* train = app.add_subcommand("train", "train the conversational policy");
  add_run_flags(train, train_args);
  auto* eval = app.add_subcommand("eval", "evaluate a policy on a held-out split");
  add_run_flags(eval, eval_args);
  auto* interactive = app.add_subcommand("interactive", "drive a session by hand");
  add_run_flags(interactive, interactive_args);

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect-checkpoint", "list checkpoint contents");
  inspect->add_option("path", inspect_path, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 5;
  }

  try {
    if (synth->parsed()) {
      if (std::getenv("UNICORN_SEED")) {
        unicorn::RunConfig env_cfg;
        env_cfg.apply_env();
        spec.seed = env_cfg.seed;
      }
      return unicorn::cmd_synth(spec, synth_out);
    }
    if (pretrain->parsed()) return unicorn::cmd_pretrain(resolve(pretrain_args));
    if (train->parsed()) return unicorn::cmd_train(resolve(train_args));
    if (eval->parsed()) return unicorn::cmd_eval(resolve(eval_args));
    if (interactive->parsed())
      return unicorn::cmd_interactive(resolve(interactive_args), std::cin, std::cout);
    if (inspect->parsed()) return unicorn::cmd_inspect(inspect_path, std::cout);
  } catch (const unicorn::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const unicorn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const unicorn::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
