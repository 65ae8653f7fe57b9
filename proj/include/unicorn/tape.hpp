#pragma once

#include <vector>

#include "unicorn/linalg.hpp"

namespace unicorn {

struct TVar {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over dense matrices. Forward values are computed
// eagerly as the expression is built; backward() runs one reverse sweep over
// the nodes reachable from the loss. Gradients only propagate into subtrees
// that contain a differentiable leaf, so constant inputs (embeddings, frozen
// targets) cost nothing extra.
class Tape {
 public:
  TVar leaf(Matrix v, bool needs_grad = false);
  TVar constant(Matrix v) { return leaf(std::move(v), false); }

  TVar mm(TVar a, TVar b);     // A * B
  TVar mm_nt(TVar a, TVar b);  // A * B^T
  TVar add(TVar a, TVar b);
  TVar sub(TVar a, TVar b);
  TVar cmul(TVar a, TVar b);                    // elementwise
  TVar cmul_const(TVar a, const Matrix& c);     // elementwise by a constant
  TVar add_rowvec(TVar x, TVar b);              // broadcast 1 x d bias over rows
  TVar scale(TVar a, double c);
  TVar relu(TVar a);
  TVar softmax_rows(TVar a);
  TVar layernorm_rows(TVar x, TVar gamma, TVar beta, double eps = 1e-5);

  // Sparse matrices are borrowed; the caller keeps them alive until backward.
  TVar spmm(const CsrMatrix* m, TVar x);
  TVar spmm_rows(const CsrMatrix* m, std::vector<int> rows, TVar x);

  TVar gather_rows(TVar x, std::vector<int> idx);
  TVar vstack(const std::vector<TVar>& parts);
  TVar slice_rows(TVar x, int begin, int len);
  TVar slice_cols(TVar x, int begin, int len);
  TVar hconcat(const std::vector<TVar>& parts);
  // offsets has one entry per segment plus a trailing total; segment s covers
  // rows [offsets[s], offsets[s+1]).
  TVar segment_mean(TVar x, std::vector<int> offsets);
  TVar repeat_segments(TVar x, std::vector<int> counts);
  TVar sum_all(TVar a);
  TVar sumsq(TVar a);

  const Matrix& val(TVar v) const { return nodes_[v.id].val; }
  double scalar(TVar v) const;
  // Valid after backward(); zero matrix for nodes the loss does not reach.
  const Matrix& grad(TVar v) const;

  void backward(TVar loss);

  size_t size() const { return nodes_.size(); }

 private:
  enum class Op : uint8_t {
    Leaf, Mm, MmNt, Add, Sub, CMul, CMulConst, AddRowvec, Scale, Relu,
    SoftmaxRows, LayerNormRows, Spmm, SpmmRows, GatherRows, VStack,
    SliceRows, SliceCols, HConcat, SegmentMean, RepeatSegments, SumAll, SumSq,
  };

  struct Node {
    Matrix val;
    Matrix grad;
    Op op = Op::Leaf;
    bool needs_grad = false;
    bool has_grad = false;
    int a = -1, b = -1, c = -1;
    int iaux = -1;   // index into int_aux_
    int maux = -1;   // index into mat_aux_
    int saux = -1;   // index into scalar_aux_
    int csr = -1;    // index into csr_aux_
    std::vector<int> parents;  // for VStack / HConcat
  };

  int push(Node n);
  TVar wrap(int id) const { return TVar{id}; }
  Matrix& grad_ref(int id);
  void backward_node(int i);
  bool node_needs(int id) const { return id >= 0 && nodes_[id].needs_grad; }

  std::vector<Node> nodes_;
  std::vector<std::vector<int>> int_aux_;
  std::vector<Matrix> mat_aux_;
  std::vector<double> scalar_aux_;
  std::vector<const CsrMatrix*> csr_aux_;
  Matrix zero_;
};

}  // namespace unicorn
