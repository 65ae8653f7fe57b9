#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace unicorn {

struct SynthSpec {
  int n_users = 30;
  int n_items = 60;
  int n_attrs = 15;
  uint64_t seed = 7;
};

// Synthetic world shaped like a two-level taxonomy with filler attributes.
// Two super attributes split the catalog into two families, the first few sub
// attributes of each family split most of its items into sizeable clusters,
// and universal attributes are carried by every item. The tail of each family
// is generic: no cluster points at those items, each carries one of the
// family's leftover "tiny" sub attributes instead, shared by so few items
// that asking for it is almost always answered no. A universal answer is
// always yes and prunes nothing, a super answer narrows to one family, and
// the right cluster answer pins the item to a dozen candidates, so sessions
// reward policies that climb the taxonomy and then work through the short
// list instead of gambling on lucky hits. Users favor one family and a couple
// of its clusters, which gives the pretrained embeddings a real but noisy
// ranking signal.
struct SynthData {
  int n_super = 0;
  int n_universal = 0;
  int n_sub = 0;
  std::vector<std::vector<int>> item_attrs;       // sorted attr indices per item
  std::vector<int> item_family;                   // family index per item
  std::vector<int> item_sub;                      // cluster attr per item, -1 if generic
  std::vector<int> item_tiny;                     // tiny tag attr per item, -1 if clustered
  std::vector<int> user_family;                   // home family per user
  std::vector<int> user_center;                   // favorite cluster attr per user
  std::vector<std::pair<int, int>> interactions;  // (user, item), sorted
};

SynthData generate_synth(const SynthSpec& spec);

// Writes interactions.tsv, attributes.tsv and manifest.json into out_dir.
void write_synth_dataset(const SynthSpec& spec, const std::string& out_dir);

}  // namespace unicorn
