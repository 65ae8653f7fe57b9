#include "unicorn/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "unicorn/rng.hpp"

namespace unicorn {

namespace {

constexpr double kUniversalShare = 0.6;  // share of attributes carried by every item
constexpr double kGenericShare = 0.33;    // share of each family's items with no sub attribute
constexpr double kMajorShare = 0.5;      // share of items (and subs) in the major family
constexpr double kMajorHomeProb = 0.5;   // share of users whose home is the major family
constexpr double kHomeFamilyProb = 0.85; // chance an interaction stays in the home family
constexpr double kCenterProb = 0.3;      // chance it lands on the favorite cluster
constexpr double kNeighborProb = 0.2;    // chance it lands next to the favorite cluster
constexpr double kGenericProb = 0.2;     // chance it lands on a generic item of the family
constexpr int kMinInteractions = 8;      // interactions per user
constexpr int kMaxInteractions = 12;

}  // namespace

SynthData generate_synth(const SynthSpec& spec) {
  if (spec.n_users < 1 || spec.n_items < 10 || spec.n_attrs < 6)
    throw std::invalid_argument("synth needs >=1 user, >=10 items, >=6 attributes");
  SynthData data;
  data.n_super = 2;
  data.n_universal = std::max(
      1, std::min(spec.n_attrs - data.n_super - 2,
                  static_cast<int>(std::lround(kUniversalShare * spec.n_attrs))));
  data.n_sub = spec.n_attrs - data.n_super - data.n_universal;
  const int n_super = data.n_super;
  const int n_universal = data.n_universal;
  const int n_sub = data.n_sub;

  // Attr layout: supers first, then universals, then subs. The major family
  // gets most of the items and a matching share of the sub attributes, so
  // cluster sizes stay comparable across families.
  const int sub_base = n_super + n_universal;
  const int major_subs = std::min(
      n_sub - 1, std::max(1, static_cast<int>(std::lround(kMajorShare * n_sub))));
  const int major_items = std::min(
      spec.n_items - 1,
      std::max(1, static_cast<int>(std::lround(kMajorShare * spec.n_items))));
  std::vector<std::vector<int>> family_subs(n_super);
  for (int s = 0; s < n_sub; ++s) family_subs[s < major_subs ? 0 : 1].push_back(sub_base + s);

  // Items fill the major family first and round-robin over the family's
  // clusters, so every cluster holds a handful of interchangeable items. The
  // tail of each family is generic: those items carry only the family and
  // universal attributes, so no sub attribute ever singles them out.
  const std::array<int, 2> family_count = {major_items, spec.n_items - major_items};
  std::array<int, 2> family_generics = {0, 0};
  for (int f = 0; f < 2; ++f) {
    const int want = static_cast<int>(std::lround(kGenericShare * family_count[f]));
    const int n_clusters = static_cast<int>(family_subs[f].size());
    family_generics[f] = std::clamp(want, 0, std::max(0, family_count[f] - n_clusters));
  }
  data.item_attrs.resize(spec.n_items);
  data.item_family.resize(spec.n_items);
  data.item_sub.resize(spec.n_items);
  std::vector<int> family_fill(n_super, 0);
  for (int v = 0; v < spec.n_items; ++v) {
    const int f = v < major_items ? 0 : 1;
    const int pos_in_family = f == 0 ? v : v - major_items;
    const bool generic = pos_in_family >= family_count[f] - family_generics[f];
    data.item_family[v] = f;
    std::vector<int> attrs = {f};
    if (generic) {
      data.item_sub[v] = -1;
    } else {
      const auto& subs = family_subs[f];
      const int sub = subs[family_fill[f]++ % subs.size()];
      data.item_sub[v] = sub;
      attrs.push_back(sub);
    }
    for (int uattr = n_super; uattr < n_super + n_universal; ++uattr) attrs.push_back(uattr);
    std::sort(attrs.begin(), attrs.end());
    data.item_attrs[v] = std::move(attrs);
  }

  std::vector<std::vector<int>> sub_items(spec.n_attrs);
  std::array<std::vector<int>, 2> family_items, generic_items;
  for (int v = 0; v < spec.n_items; ++v) {
    family_items[data.item_family[v]].push_back(v);
    if (data.item_sub[v] >= 0)
      sub_items[data.item_sub[v]].push_back(v);
    else
      generic_items[data.item_family[v]].push_back(v);
  }

  // Each user has a home family and a favorite cluster in it. Interactions
  // mostly stay in the home family, concentrated on the favorite cluster, its
  // neighbors and the family's generic items, with occasional trips abroad.
  Rng user_rng(derive_seed(spec.seed, "synth.users"));
  data.user_family.resize(spec.n_users);
  data.user_center.resize(spec.n_users);
  const int major_homes = std::min(
      spec.n_users - (spec.n_users > 1 ? 1 : 0),
      std::max(1, static_cast<int>(std::lround(kMajorHomeProb * spec.n_users))));
  for (int u = 0; u < spec.n_users; ++u) {
    const int home = u < major_homes ? 0 : 1;
    const auto& home_subs = family_subs[home];
    const int center_pos = static_cast<int>(user_rng.uniform_int(home_subs.size()));
    data.user_family[u] = home;
    data.user_center[u] = home_subs[center_pos];
    const int want =
        kMinInteractions +
        static_cast<int>(user_rng.uniform_int(kMaxInteractions - kMinInteractions + 1));
    std::vector<int> picked;
    int attempts = 0;
    while (static_cast<int>(picked.size()) < want && attempts < 200 * want) {
      ++attempts;
      int f = home;
      if (user_rng.uniform() >= kHomeFamilyProb) f = 1 - home;
      const std::vector<int>* pool = &family_items[f];
      if (f == home) {
        const auto& subs = family_subs[f];
        const double roll = user_rng.uniform();
        if (roll < kCenterProb) {
          pool = &sub_items[subs[center_pos]];
        } else if (roll < kCenterProb + kNeighborProb) {
          int pos = center_pos + (user_rng.uniform() < 0.5 ? 1 : -1);
          pos = (pos % static_cast<int>(subs.size()) + static_cast<int>(subs.size())) %
                static_cast<int>(subs.size());
          pool = &sub_items[subs[pos]];
        } else if (roll < kCenterProb + kNeighborProb + kGenericProb &&
                   !generic_items[f].empty()) {
          pool = &generic_items[f];
        }
      }
      if (pool->empty()) continue;
      const int v = (*pool)[user_rng.uniform_int(pool->size())];
      auto it = std::lower_bound(picked.begin(), picked.end(), v);
      if (it == picked.end() || *it != v) picked.insert(it, v);
    }
    for (int v : picked) data.interactions.emplace_back(u, v);
  }
  return data;
}

void write_synth_dataset(const SynthSpec& spec, const std::string& out_dir) {
  SynthData data = generate_synth(spec);
  std::filesystem::create_directories(out_dir);

  std::ofstream attrs(out_dir + "/attributes.tsv");
  if (!attrs) throw std::runtime_error("cannot write " + out_dir + "/attributes.tsv");
  for (int v = 0; v < spec.n_items; ++v) {
    attrs << "v" << v << "\t";
    for (size_t i = 0; i < data.item_attrs[v].size(); ++i) {
      if (i) attrs << ",";
      attrs << "p" << data.item_attrs[v][i];
    }
    attrs << "\n";
  }

  std::ofstream inter(out_dir + "/interactions.tsv");
  if (!inter) throw std::runtime_error("cannot write " + out_dir + "/interactions.tsv");
  for (const auto& [u, v] : data.interactions) inter << "u" << u << "\tv" << v << "\n";

  nlohmann::ordered_json manifest;
  manifest["n_users"] = spec.n_users;
  manifest["n_items"] = spec.n_items;
  manifest["n_attrs"] = spec.n_attrs;
  manifest["seed"] = spec.seed;
  manifest["n_super"] = data.n_super;
  manifest["n_universal"] = data.n_universal;
  manifest["n_sub"] = data.n_sub;
  manifest["n_interactions"] = data.interactions.size();
  manifest["item_family"] = data.item_family;
  manifest["item_sub"] = data.item_sub;
  manifest["user_family"] = data.user_family;
  manifest["user_center"] = data.user_center;
  std::ofstream mf(out_dir + "/manifest.json");
  if (!mf) throw std::runtime_error("cannot write " + out_dir + "/manifest.json");
  mf << manifest.dump(2) << "\n";
}

}  // namespace unicorn
