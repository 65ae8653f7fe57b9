#pragma once

#include <string>

#include "unicorn/graph.hpp"
#include "unicorn/linalg.hpp"

namespace unicorn {

enum class Relation { Interact = 0, Belong = 1 };

// Pretrained node embeddings, rows indexed by the graph's flat node order
// (users, items, attributes), plus one translation vector per relation.
struct EmbeddingTable {
  int dim = 0;
  int32_t n_users = 0, n_items = 0, n_attrs = 0;
  Matrix entity;        // node_count x dim
  Matrix rel_interact;  // 1 x dim
  Matrix rel_belong;    // 1 x dim

  static EmbeddingTable zeros(const KnowledgeGraph& g, int dim);

  int32_t global(NodeId n) const;
  Eigen::Ref<const Eigen::RowVectorXd> row(NodeId n) const { return entity.row(global(n)); }
  const Matrix& relation(Relation r) const {
    return r == Relation::Interact ? rel_interact : rel_belong;
  }

  void save(const std::string& path) const;
  // Shape-checks against the graph.
  static EmbeddingTable load(const std::string& path, const KnowledgeGraph& g);
};

}  // namespace unicorn
