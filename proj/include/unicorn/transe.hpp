#pragma once

#include <cstdint>
#include <vector>

#include "unicorn/embeddings.hpp"
#include "unicorn/graph.hpp"

namespace unicorn {

struct TransEConfig {
  int dim = 64;
  double margin = 1.0;
  int norm = 2;  // 1 or 2
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 0.02;
  int negatives_per_positive = 1;
  uint64_t seed = 0;
};

// Heads and tails are flat node indices. Interactions are stored as
// (item, interact, user), attribute memberships as (attribute, belong, item).
struct Triplet {
  int32_t head;
  Relation rel;
  int32_t tail;
};

std::vector<Triplet> graph_triplets(const KnowledgeGraph& g);

double transe_score(const Eigen::RowVectorXd& h, const Eigen::RowVectorXd& r,
                    const Eigen::RowVectorXd& t, int norm);

// max(0, margin + d(pos) - d(neg)). When grad_* are non-null, accumulates the
// gradient of this single term into them (entity rows and the relation row).
double hinge_term(const EmbeddingTable& emb, const Triplet& pos, const Triplet& neg,
                  double margin, int norm, Matrix* grad_entity, Matrix* grad_rel_interact,
                  Matrix* grad_rel_belong);

EmbeddingTable train_embeddings(const KnowledgeGraph& g, const TransEConfig& cfg);

// Mean rank of the true tail among all same-kind tails (1-based; ties count
// half). A random embedding scores about (candidates + 1) / 2.
double mean_rank(const KnowledgeGraph& g, const EmbeddingTable& emb,
                 const std::vector<Triplet>& triplets, int norm);

}  // namespace unicorn
