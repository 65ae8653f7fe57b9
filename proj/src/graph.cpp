#include "unicorn/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace unicorn {

namespace {

int32_t intern(const std::string& id, std::vector<std::string>& ids,
               std::unordered_map<std::string, int32_t>& lookup) {
  auto it = lookup.find(id);
  if (it != lookup.end()) return it->second;
  int32_t idx = static_cast<int32_t>(ids.size());
  ids.push_back(id);
  lookup.emplace(id, idx);
  return idx;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

int32_t KnowledgeGraph::global_index(NodeId n) const {
  switch (n.kind) {
    case NodeKind::User: return n.index;
    case NodeKind::Item: return n_users() + n.index;
    case NodeKind::Attribute: return n_users() + n_items() + n.index;
  }
  throw std::logic_error("bad node kind");
}

NodeId KnowledgeGraph::node_at(int32_t global) const {
  if (global < n_users()) return user_node(global);
  global -= n_users();
  if (global < n_items()) return item_node(global);
  global -= n_items();
  if (global < n_attrs()) return attr_node(global);
  throw std::out_of_range("global node index out of range");
}

int32_t KnowledgeGraph::user_index(const std::string& id) const {
  auto it = user_lookup_.find(id);
  if (it == user_lookup_.end()) throw DataError("unknown user id: " + id);
  return it->second;
}

int32_t KnowledgeGraph::item_index(const std::string& id) const {
  auto it = item_lookup_.find(id);
  if (it == item_lookup_.end()) throw DataError("unknown item id: " + id);
  return it->second;
}

int32_t KnowledgeGraph::attr_index(const std::string& id) const {
  auto it = attr_lookup_.find(id);
  if (it == attr_lookup_.end()) throw DataError("unknown attribute id: " + id);
  return it->second;
}

bool KnowledgeGraph::item_has_attr(int32_t item, int32_t attr) const {
  const auto& a = item_attrs_[item];
  return std::binary_search(a.begin(), a.end(), attr);
}

int32_t KnowledgeGraph::intern_user(const std::string& id) {
  int32_t idx = intern(id, user_ids_, user_lookup_);
  if (idx >= static_cast<int32_t>(user_items_.size())) user_items_.resize(idx + 1);
  return idx;
}

int32_t KnowledgeGraph::intern_item(const std::string& id) {
  int32_t idx = intern(id, item_ids_, item_lookup_);
  if (idx >= static_cast<int32_t>(item_users_.size())) {
    item_users_.resize(idx + 1);
    item_attrs_.resize(idx + 1);
  }
  return idx;
}

int32_t KnowledgeGraph::intern_attr(const std::string& id) {
  int32_t idx = intern(id, attr_ids_, attr_lookup_);
  if (idx >= static_cast<int32_t>(attr_items_.size())) attr_items_.resize(idx + 1);
  return idx;
}

void KnowledgeGraph::set_item_attrs(int32_t item, std::vector<int32_t> attrs) {
  std::sort(attrs.begin(), attrs.end());
  attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());
  if (attrs.empty()) throw DataError("item " + item_ids_[item] + " has no attributes");
  for (int32_t p : attrs) {
    auto& lst = attr_items_[p];
    lst.insert(std::upper_bound(lst.begin(), lst.end(), item), item);
  }
  item_attrs_[item] = std::move(attrs);
}

void KnowledgeGraph::set_interactions(const std::vector<std::pair<int32_t, int32_t>>& pairs) {
  for (auto& lst : user_items_) lst.clear();
  for (auto& lst : item_users_) lst.clear();
  for (auto [u, v] : pairs) {
    if (u < 0 || u >= n_users() || v < 0 || v >= n_items())
      throw DataError("interaction pair out of range");
    user_items_[u].push_back(v);
    item_users_[v].push_back(u);
  }
  for (auto& lst : user_items_) {
    std::sort(lst.begin(), lst.end());
    lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
  }
  for (auto& lst : item_users_) {
    std::sort(lst.begin(), lst.end());
    lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
  }
}

Dataset load_dataset(const std::string& interactions_path, const std::string& attributes_path) {
  Dataset ds;
  KnowledgeGraph& g = ds.graph;

  std::ifstream attrs_in(attributes_path);
  if (!attrs_in) throw DataError("cannot open attributes file: " + attributes_path);
  std::string line;
  int lineno = 0;
  std::set<int32_t> seen_items;
  while (std::getline(attrs_in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
      throw DataError(attributes_path + ":" + std::to_string(lineno) + ": expected `item<TAB>attrs`");
    int32_t item = g.intern_item(cols[0]);
    if (!seen_items.insert(item).second)
      throw DataError(attributes_path + ":" + std::to_string(lineno) + ": item redefined: " + cols[0]);
    std::vector<int32_t> attrs;
    std::stringstream ss(cols[1]);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty())
        throw DataError(attributes_path + ":" + std::to_string(lineno) + ": empty attribute id");
      attrs.push_back(g.intern_attr(tok));
    }
    g.set_item_attrs(item, std::move(attrs));
  }

  std::ifstream inter_in(interactions_path);
  if (!inter_in) throw DataError("cannot open interactions file: " + interactions_path);
  lineno = 0;
  std::set<std::pair<int32_t, int32_t>> seen_pairs;
  while (std::getline(inter_in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
      throw DataError(interactions_path + ":" + std::to_string(lineno) + ": expected `user<TAB>item`");
    int32_t u = g.intern_user(cols[0]);
    int32_t v;
    try {
      v = g.item_index(cols[1]);
    } catch (const DataError&) {
      throw DataError(interactions_path + ":" + std::to_string(lineno) +
                      ": interaction references item absent from attributes file: " + cols[1]);
    }
    if (seen_pairs.emplace(u, v).second) ds.interactions.pairs.emplace_back(u, v);
  }

  g.set_interactions(ds.interactions.pairs);
  return ds;
}

std::vector<int32_t> candidate_items(const KnowledgeGraph& g,
                                     const std::vector<int32_t>& accepted_attrs,
                                     const std::vector<int32_t>& rejected_items) {
  if (accepted_attrs.empty()) throw std::invalid_argument("candidate_items: no accepted attributes");

  // Intersect adjacency lists, starting from the smallest.
  int32_t smallest = accepted_attrs[0];
  for (int32_t p : accepted_attrs)
    if (g.items_of_attr(p).size() < g.items_of_attr(smallest).size()) smallest = p;

  std::vector<int32_t> out;
  for (int32_t v : g.items_of_attr(smallest)) {
    if (std::binary_search(rejected_items.begin(), rejected_items.end(), v)) continue;
    bool all = true;
    for (int32_t p : accepted_attrs) {
      if (p == smallest) continue;
      if (!g.item_has_attr(v, p)) {
        all = false;
        break;
      }
    }
    if (all) out.push_back(v);
  }
  return out;  // already sorted: adjacency lists are sorted
}

std::vector<int32_t> candidate_attributes(const KnowledgeGraph& g,
                                          const std::vector<int32_t>& cand_items,
                                          const std::vector<int32_t>& accepted_attrs,
                                          const std::vector<int32_t>& rejected_attrs) {
  std::set<int32_t> pool;
  for (int32_t v : cand_items)
    for (int32_t p : g.attrs_of_item(v)) pool.insert(p);
  std::vector<int32_t> out;
  for (int32_t p : pool) {
    if (std::find(accepted_attrs.begin(), accepted_attrs.end(), p) != accepted_attrs.end()) continue;
    if (std::binary_search(rejected_attrs.begin(), rejected_attrs.end(), p)) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace unicorn
