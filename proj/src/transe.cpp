#include "unicorn/transe.hpp"

#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>

#include "unicorn/rng.hpp"

namespace unicorn {

namespace {

struct KindRange {
  int32_t begin, count;
};

KindRange head_range(const KnowledgeGraph& g, Relation r) {
  if (r == Relation::Interact) return {g.n_users(), g.n_items()};
  return {g.n_users() + g.n_items(), g.n_attrs()};
}

KindRange tail_range(const KnowledgeGraph& g, Relation r) {
  if (r == Relation::Interact) return {0, g.n_users()};
  return {g.n_users(), g.n_items()};
}

uint64_t triplet_key(const Triplet& t) {
  return (static_cast<uint64_t>(t.head) << 33) | (static_cast<uint64_t>(t.rel) << 32) |
         static_cast<uint64_t>(static_cast<uint32_t>(t.tail));
}

void project_to_unit_ball(Matrix& entity, int32_t row) {
  double n = entity.row(row).norm();
  if (n > 1.0) entity.row(row) /= n;
}

}  // namespace

std::vector<Triplet> graph_triplets(const KnowledgeGraph& g) {
  std::vector<Triplet> out;
  for (int32_t v = 0; v < g.n_items(); ++v) {
    int32_t vg = g.n_users() + v;
    for (int32_t u : g.users_of_item(v)) out.push_back({vg, Relation::Interact, u});
    for (int32_t p : g.attrs_of_item(v))
      out.push_back({g.n_users() + g.n_items() + p, Relation::Belong, vg});
  }
  return out;
}

double transe_score(const Eigen::RowVectorXd& h, const Eigen::RowVectorXd& r,
                    const Eigen::RowVectorXd& t, int norm) {
  Eigen::RowVectorXd d = h + r - t;
  if (norm == 1) return d.lpNorm<1>();
  if (norm == 2) return d.norm();
  throw std::invalid_argument("norm must be 1 or 2");
}

namespace {

// d(h + r - t) and its gradient direction w.r.t. (h + r - t).
double distance_and_dir(const EmbeddingTable& emb, const Triplet& t, int norm,
                        Eigen::RowVectorXd& dir) {
  Eigen::RowVectorXd diff =
      emb.entity.row(t.head) + emb.relation(t.rel).row(0) - emb.entity.row(t.tail);
  if (norm == 1) {
    dir = diff.array().sign();
    return diff.lpNorm<1>();
  }
  double d = diff.norm();
  dir = d > 1e-12 ? Eigen::RowVectorXd(diff / d) : Eigen::RowVectorXd::Zero(diff.cols());
  return d;
}

}  // namespace

double hinge_term(const EmbeddingTable& emb, const Triplet& pos, const Triplet& neg,
                  double margin, int norm, Matrix* grad_entity, Matrix* grad_rel_interact,
                  Matrix* grad_rel_belong) {
  Eigen::RowVectorXd dir_pos, dir_neg;
  double d_pos = distance_and_dir(emb, pos, norm, dir_pos);
  double d_neg = distance_and_dir(emb, neg, norm, dir_neg);
  double loss = margin + d_pos - d_neg;
  if (loss <= 0.0) return 0.0;
  if (grad_entity) {
    grad_entity->row(pos.head) += dir_pos;
    grad_entity->row(pos.tail) -= dir_pos;
    grad_entity->row(neg.head) -= dir_neg;
    grad_entity->row(neg.tail) += dir_neg;
    Matrix* gr_pos = pos.rel == Relation::Interact ? grad_rel_interact : grad_rel_belong;
    Matrix* gr_neg = neg.rel == Relation::Interact ? grad_rel_interact : grad_rel_belong;
    gr_pos->row(0) += dir_pos;
    gr_neg->row(0) -= dir_neg;
  }
  return loss;
}

EmbeddingTable train_embeddings(const KnowledgeGraph& g, const TransEConfig& cfg) {
  EmbeddingTable emb = EmbeddingTable::zeros(g, cfg.dim);
  Rng rng(cfg.seed);
  double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  for (int r = 0; r < emb.entity.rows(); ++r)
    for (int c = 0; c < cfg.dim; ++c) emb.entity(r, c) = rng.uniform_range(-bound, bound);
  for (int c = 0; c < cfg.dim; ++c) {
    emb.rel_interact(0, c) = rng.uniform_range(-bound, bound);
    emb.rel_belong(0, c) = rng.uniform_range(-bound, bound);
  }
  emb.rel_interact /= emb.rel_interact.norm();
  emb.rel_belong /= emb.rel_belong.norm();
  for (int r = 0; r < emb.entity.rows(); ++r) project_to_unit_ball(emb.entity, r);

  std::vector<Triplet> triplets = graph_triplets(g);
  if (triplets.empty()) return emb;

  std::set<uint64_t> positives;
  for (const auto& t : triplets) positives.insert(triplet_key(t));

  auto corrupt = [&](const Triplet& t) -> std::optional<Triplet> {
    for (int attempt = 0; attempt < 100; ++attempt) {
      Triplet neg = t;
      bool corrupt_head = rng.uniform() < 0.5;
      KindRange range = corrupt_head ? head_range(g, t.rel) : tail_range(g, t.rel);
      if (range.count <= 1) continue;
      int32_t pick = range.begin + static_cast<int32_t>(rng.uniform_int(range.count));
      (corrupt_head ? neg.head : neg.tail) = pick;
      if (!positives.count(triplet_key(neg))) return neg;
    }
    return std::nullopt;
  };

  std::vector<size_t> order(triplets.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  Matrix grad_entity = Matrix::Zero(emb.entity.rows(), cfg.dim);
  Matrix grad_ri = Matrix::Zero(1, cfg.dim);
  Matrix grad_rb = Matrix::Zero(1, cfg.dim);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<int32_t> touched;
      bool any = false;
      for (size_t i = start; i < end; ++i) {
        const Triplet& pos = triplets[order[i]];
        for (int k = 0; k < cfg.negatives_per_positive; ++k) {
          auto neg = corrupt(pos);
          if (!neg) continue;
          double l = hinge_term(emb, pos, *neg, cfg.margin, cfg.norm, &grad_entity, &grad_ri,
                                &grad_rb);
          if (l > 0.0) {
            any = true;
            touched.insert(touched.end(), {pos.head, pos.tail, neg->head, neg->tail});
          }
        }
      }
      if (!any) continue;
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (int32_t row : touched) {
        emb.entity.row(row) -= cfg.learning_rate * grad_entity.row(row);
        grad_entity.row(row).setZero();
        project_to_unit_ball(emb.entity, row);
      }
      emb.rel_interact -= cfg.learning_rate * grad_ri;
      emb.rel_belong -= cfg.learning_rate * grad_rb;
      grad_ri.setZero();
      grad_rb.setZero();
    }
  }
  return emb;
}

double mean_rank(const KnowledgeGraph& g, const EmbeddingTable& emb,
                 const std::vector<Triplet>& triplets, int norm) {
  if (triplets.empty()) throw std::invalid_argument("mean_rank on empty triplet list");
  double total = 0.0;
  for (const auto& t : triplets) {
    Eigen::RowVectorXd base = emb.entity.row(t.head) + emb.relation(t.rel).row(0);
    double d_true = (base - emb.entity.row(t.tail)).norm();
    if (norm == 1) d_true = (base - emb.entity.row(t.tail)).lpNorm<1>();
    KindRange range = tail_range(g, t.rel);
    int better = 0, ties = 0;
    for (int32_t c = range.begin; c < range.begin + range.count; ++c) {
      if (c == t.tail) continue;
      double d = norm == 1 ? (base - emb.entity.row(c)).lpNorm<1>()
                           : (base - emb.entity.row(c)).norm();
      if (d < d_true) ++better;
      else if (d == d_true) ++ties;
    }
    total += 1.0 + better + 0.5 * ties;
  }
  return total / static_cast<double>(triplets.size());
}

}  // namespace unicorn
