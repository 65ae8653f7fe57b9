#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "unicorn/config.hpp"
#include "unicorn/graph.hpp"
#include "unicorn/synth.hpp"

namespace unicorn {

struct SplitSet {
  std::vector<std::pair<int32_t, int32_t>> train, valid, test;
};

// Seeded shuffle, then rounded cuts. Each resulting split must be non-empty.
// The split seed is deliberately separate from the run seed so that seed
// sweeps keep evaluating against the same held-out pairs.
SplitSet split_interactions(const InteractionSet& interactions, uint64_t split_seed,
                            double train_frac, double valid_frac);

const std::vector<std::pair<int32_t, int32_t>>& split_by_name(const SplitSet& split,
                                                              const std::string& name);

void write_split_manifest(const std::string& path, const SplitSet& split,
                          const KnowledgeGraph& g);

int cmd_synth(const SynthSpec& spec, const std::string& out_dir);
int cmd_pretrain(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_interactive(const RunConfig& cfg, std::istream& in, std::ostream& out);
int cmd_inspect(const std::string& path, std::ostream& out);

}  // namespace unicorn
