#include "unicorn/embeddings.hpp"

#include "unicorn/checkpoint.hpp"

namespace unicorn {

EmbeddingTable EmbeddingTable::zeros(const KnowledgeGraph& g, int dim) {
  EmbeddingTable t;
  t.dim = dim;
  t.n_users = g.n_users();
  t.n_items = g.n_items();
  t.n_attrs = g.n_attrs();
  t.entity = Matrix::Zero(g.node_count(), dim);
  t.rel_interact = Matrix::Zero(1, dim);
  t.rel_belong = Matrix::Zero(1, dim);
  return t;
}

int32_t EmbeddingTable::global(NodeId n) const {
  switch (n.kind) {
    case NodeKind::User: return n.index;
    case NodeKind::Item: return n_users + n.index;
    case NodeKind::Attribute: return n_users + n_items + n.index;
  }
  throw std::logic_error("bad node kind");
}

void EmbeddingTable::save(const std::string& path) const {
  save_tensor_file(path, {{"emb.entity", &entity},
                          {"emb.rel.interact", &rel_interact},
                          {"emb.rel.belong", &rel_belong}});
}

EmbeddingTable EmbeddingTable::load(const std::string& path, const KnowledgeGraph& g) {
  auto tensors = load_tensor_file(path);
  EmbeddingTable t;
  t.n_users = g.n_users();
  t.n_items = g.n_items();
  t.n_attrs = g.n_attrs();
  bool have_entity = false, have_int = false, have_bel = false;
  for (auto& [name, m] : tensors) {
    if (name == "emb.entity") {
      t.entity = std::move(m);
      have_entity = true;
    } else if (name == "emb.rel.interact") {
      t.rel_interact = std::move(m);
      have_int = true;
    } else if (name == "emb.rel.belong") {
      t.rel_belong = std::move(m);
      have_bel = true;
    }
  }
  if (!have_entity || !have_int || !have_bel)
    throw CheckpointError("embedding checkpoint missing tensors: " + path);
  if (t.entity.rows() != g.node_count())
    throw CheckpointError("embedding checkpoint does not match graph size: " + path);
  if (t.rel_interact.cols() != t.entity.cols() || t.rel_belong.cols() != t.entity.cols() ||
      t.rel_interact.rows() != 1 || t.rel_belong.rows() != 1)
    throw CheckpointError("embedding checkpoint has inconsistent shapes: " + path);
  t.dim = static_cast<int>(t.entity.cols());
  return t;
}

}  // namespace unicorn
