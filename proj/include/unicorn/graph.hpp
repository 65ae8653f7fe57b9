#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "unicorn/ids.hpp"

namespace unicorn {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Heterogeneous user/item/attribute graph. String ids from the input files are
// interned into dense per-kind indices in order of first appearance. Adjacency
// lists are kept sorted so set operations and iteration are deterministic.
class KnowledgeGraph {
 public:
  int32_t n_users() const { return static_cast<int32_t>(user_ids_.size()); }
  int32_t n_items() const { return static_cast<int32_t>(item_ids_.size()); }
  int32_t n_attrs() const { return static_cast<int32_t>(attr_ids_.size()); }
  int32_t node_count() const { return n_users() + n_items() + n_attrs(); }

  // Flat node index: users, then items, then attributes.
  int32_t global_index(NodeId n) const;
  NodeId node_at(int32_t global) const;

  const std::string& user_id(int32_t i) const { return user_ids_[i]; }
  const std::string& item_id(int32_t i) const { return item_ids_[i]; }
  const std::string& attr_id(int32_t i) const { return attr_ids_[i]; }
  int32_t user_index(const std::string& id) const;
  int32_t item_index(const std::string& id) const;
  int32_t attr_index(const std::string& id) const;

  const std::vector<int32_t>& items_of_user(int32_t u) const { return user_items_[u]; }
  const std::vector<int32_t>& users_of_item(int32_t v) const { return item_users_[v]; }
  const std::vector<int32_t>& attrs_of_item(int32_t v) const { return item_attrs_[v]; }
  const std::vector<int32_t>& items_of_attr(int32_t p) const { return attr_items_[p]; }

  bool item_has_attr(int32_t item, int32_t attr) const;

  // Replaces the user-item adjacency, e.g. to restrict the graph to the
  // training split before embedding pretraining.
  void set_interactions(const std::vector<std::pair<int32_t, int32_t>>& pairs);

  // Construction used by the loader and by tests.
  int32_t intern_user(const std::string& id);
  int32_t intern_item(const std::string& id);
  int32_t intern_attr(const std::string& id);
  void set_item_attrs(int32_t item, std::vector<int32_t> attrs);

 private:
  std::vector<std::string> user_ids_, item_ids_, attr_ids_;
  std::unordered_map<std::string, int32_t> user_lookup_, item_lookup_, attr_lookup_;
  std::vector<std::vector<int32_t>> user_items_, item_users_, item_attrs_, attr_items_;
};

struct InteractionSet {
  std::vector<std::pair<int32_t, int32_t>> pairs;  // (user, item)
};

struct Dataset {
  KnowledgeGraph graph;
  InteractionSet interactions;
};

// interactions file: `user_id<TAB>item_id` per line.
// attributes file:   `item_id<TAB>attr_id[,attr_id...]` per line.
Dataset load_dataset(const std::string& interactions_path, const std::string& attributes_path);

// Items carrying every accepted attribute, minus rejected items. Sorted.
std::vector<int32_t> candidate_items(const KnowledgeGraph& g,
                                     const std::vector<int32_t>& accepted_attrs,
                                     const std::vector<int32_t>& rejected_items);

// Attributes of at least one candidate item, minus accepted and rejected
// attributes. Sorted.
std::vector<int32_t> candidate_attributes(const KnowledgeGraph& g,
                                          const std::vector<int32_t>& cand_items,
                                          const std::vector<int32_t>& accepted_attrs,
                                          const std::vector<int32_t>& rejected_attrs);

}  // namespace unicorn
