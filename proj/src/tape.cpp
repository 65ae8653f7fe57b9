#include "unicorn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace unicorn {

namespace {
void require(bool cond, const char* msg) {
  if (!cond) throw std::logic_error(msg);
}
}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

double Tape::scalar(TVar v) const {
  const Matrix& m = nodes_[v.id].val;
  require(m.rows() == 1 && m.cols() == 1, "scalar() on non 1x1 node");
  return m(0, 0);
}

const Matrix& Tape::grad(TVar v) const {
  const Node& n = nodes_[v.id];
  if (n.has_grad) return n.grad;
  if (zero_.rows() != n.val.rows() || zero_.cols() != n.val.cols())
    const_cast<Tape*>(this)->zero_ = Matrix::Zero(n.val.rows(), n.val.cols());
  return zero_;
}

Matrix& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.val.rows(), n.val.cols());
    n.has_grad = true;
  }
  return n.grad;
}

TVar Tape::leaf(Matrix v, bool needs_grad) {
  Node n;
  n.val = std::move(v);
  n.op = Op::Leaf;
  n.needs_grad = needs_grad;
  return wrap(push(std::move(n)));
}

TVar Tape::mm(TVar a, TVar b) {
  require(val(a).cols() == val(b).rows(), "mm shape mismatch");
  Node n;
  n.val.noalias() = val(a) * val(b);
  n.op = Op::Mm;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = node_needs(a.id) || node_needs(b.id);
  return wrap(push(std::move(n)));
}

TVar Tape::mm_nt(TVar a, TVar b) {
  require(val(a).cols() == val(b).cols(), "mm_nt shape mismatch");
  Node n;
  n.val.noalias() = val(a) * val(b).transpose();
  n.op = Op::MmNt;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = node_needs(a.id) || node_needs(b.id);
  return wrap(push(std::move(n)));
}

TVar Tape::add(TVar a, TVar b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(), "add shape mismatch");
  Node n;
  n.val = val(a) + val(b);
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = node_needs(a.id) || node_needs(b.id);
  return wrap(push(std::move(n)));
}

TVar Tape::sub(TVar a, TVar b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(), "sub shape mismatch");
  Node n;
  n.val = val(a) - val(b);
  n.op = Op::Sub;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = node_needs(a.id) || node_needs(b.id);
  return wrap(push(std::move(n)));
}

TVar Tape::cmul(TVar a, TVar b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(), "cmul shape mismatch");
  Node n;
  n.val = val(a).cwiseProduct(val(b));
  n.op = Op::CMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = node_needs(a.id) || node_needs(b.id);
  return wrap(push(std::move(n)));
}

TVar Tape::cmul_const(TVar a, const Matrix& c) {
  require(val(a).rows() == c.rows() && val(a).cols() == c.cols(), "cmul_const shape mismatch");
  Node n;
  n.val = val(a).cwiseProduct(c);
  n.op = Op::CMulConst;
  n.a = a.id;
  n.maux = static_cast<int>(mat_aux_.size());
  mat_aux_.push_back(c);
  n.needs_grad = node_needs(a.id);
  return wrap(push(std::move(n)));
}

TVar Tape::add_rowvec(TVar x, TVar b) {
  require(val(b).rows() == 1 && val(b).cols() == val(x).cols(), "add_rowvec shape mismatch");
  Node n;
  n.val = val(x).rowwise() + val(b).row(0);
  n.op = Op::AddRowvec;
  n.a = x.id;
  n.b = b.id;
  n.needs_grad = node_needs(x.id) || node_needs(b.id);
  return wrap(push(std::move(n)));
}

TVar Tape::scale(TVar a, double c) {
  Node n;
  n.val = val(a) * c;
  n.op = Op::Scale;
  n.a = a.id;
  n.saux = static_cast<int>(scalar_aux_.size());
  scalar_aux_.push_back(c);
  n.needs_grad = node_needs(a.id);
  return wrap(push(std::move(n)));
}

TVar Tape::relu(TVar a) {
  Node n;
  n.val = val(a).cwiseMax(0.0);
  n.op = Op::Relu;
  n.a = a.id;
  n.needs_grad = node_needs(a.id);
  return wrap(push(std::move(n)));
}

TVar Tape::softmax_rows(TVar a) {
  const Matrix& x = val(a);
  Matrix y(x.rows(), x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    double mx = x.row(r).maxCoeff();
    Eigen::RowVectorXd e = (x.row(r).array() - mx).exp();
    y.row(r) = e / e.sum();
  }
  Node n;
  n.val = std::move(y);
  n.op = Op::SoftmaxRows;
  n.a = a.id;
  n.needs_grad = node_needs(a.id);
  return wrap(push(std::move(n)));
}

TVar Tape::layernorm_rows(TVar x, TVar gamma, TVar beta, double eps) {
  const Matrix& xm = val(x);
  int d = static_cast<int>(xm.cols());
  require(val(gamma).rows() == 1 && val(gamma).cols() == d, "layernorm gamma shape");
  require(val(beta).rows() == 1 && val(beta).cols() == d, "layernorm beta shape");
  Matrix xhat(xm.rows(), d);
  Matrix inv_std(xm.rows(), 1);
  for (int r = 0; r < xm.rows(); ++r) {
    double mu = xm.row(r).mean();
    double var = (xm.row(r).array() - mu).square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xm.row(r).array() - mu) * is;
    inv_std(r, 0) = is;
  }
  Node n;
  n.val = (xhat.array().rowwise() * val(gamma).row(0).array()).rowwise() +
          val(beta).row(0).array();
  n.op = Op::LayerNormRows;
  n.a = x.id;
  n.b = gamma.id;
  n.c = beta.id;
  n.maux = static_cast<int>(mat_aux_.size());
  mat_aux_.push_back(std::move(xhat));
  mat_aux_.push_back(std::move(inv_std));
  n.needs_grad = node_needs(x.id) || node_needs(gamma.id) || node_needs(beta.id);
  return wrap(push(std::move(n)));
}

TVar Tape::spmm(const CsrMatrix* m, TVar x) {
  require(m->cols == val(x).rows(), "spmm shape mismatch");
  Node n;
  n.val = m->multiply(val(x));
  n.op = Op::Spmm;
  n.a = x.id;
  n.csr = static_cast<int>(csr_aux_.size());
  csr_aux_.push_back(m);
  n.needs_grad = node_needs(x.id);
  return wrap(push(std::move(n)));
}

TVar Tape::spmm_rows(const CsrMatrix* m, std::vector<int> rows, TVar x) {
  require(m->cols == val(x).rows(), "spmm_rows shape mismatch");
  Node n;
  n.val = m->multiply_rows(rows, val(x));
  n.op = Op::SpmmRows;
  n.a = x.id;
  n.csr = static_cast<int>(csr_aux_.size());
  csr_aux_.push_back(m);
  n.iaux = static_cast<int>(int_aux_.size());
  int_aux_.push_back(std::move(rows));
  n.needs_grad = node_needs(x.id);
  return wrap(push(std::move(n)));
}

TVar Tape::gather_rows(TVar x, std::vector<int> idx) {
  const Matrix& xm = val(x);
  Matrix y(static_cast<int>(idx.size()), xm.cols());
  for (size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] >= 0 && idx[i] < xm.rows(), "gather_rows index out of range");
    y.row(static_cast<int>(i)) = xm.row(idx[i]);
  }
  Node n;
  n.val = std::move(y);
  n.op = Op::GatherRows;
  n.a = x.id;
  n.iaux = static_cast<int>(int_aux_.size());
  int_aux_.push_back(std::move(idx));
  n.needs_grad = node_needs(x.id);
  return wrap(push(std::move(n)));
}

TVar Tape::vstack(const std::vector<TVar>& parts) {
  require(!parts.empty(), "vstack of nothing");
  int cols = static_cast<int>(val(parts[0]).cols());
  int rows = 0;
  for (TVar p : parts) {
    require(val(p).cols() == cols, "vstack col mismatch");
    rows += static_cast<int>(val(p).rows());
  }
  Matrix y(rows, cols);
  int off = 0;
  Node n;
  n.needs_grad = false;
  for (TVar p : parts) {
    int r = static_cast<int>(val(p).rows());
    y.middleRows(off, r) = val(p);
    off += r;
    n.parents.push_back(p.id);
    n.needs_grad = n.needs_grad || node_needs(p.id);
  }
  n.val = std::move(y);
  n.op = Op::VStack;
  return wrap(push(std::move(n)));
}

TVar Tape::slice_rows(TVar x, int begin, int len) {
  require(begin >= 0 && len >= 0 && begin + len <= val(x).rows(), "slice_rows out of range");
  Node n;
  n.val = val(x).middleRows(begin, len);
  n.op = Op::SliceRows;
  n.a = x.id;
  n.iaux = static_cast<int>(int_aux_.size());
  int_aux_.push_back({begin, len});
  n.needs_grad = node_needs(x.id);
  return wrap(push(std::move(n)));
}

TVar Tape::slice_cols(TVar x, int begin, int len) {
  require(begin >= 0 && len >= 0 && begin + len <= val(x).cols(), "slice_cols out of range");
  Node n;
  n.val = val(x).middleCols(begin, len);
  n.op = Op::SliceCols;
  n.a = x.id;
  n.iaux = static_cast<int>(int_aux_.size());
  int_aux_.push_back({begin, len});
  n.needs_grad = node_needs(x.id);
  return wrap(push(std::move(n)));
}

TVar Tape::hconcat(const std::vector<TVar>& parts) {
  require(!parts.empty(), "hconcat of nothing");
  int rows = static_cast<int>(val(parts[0]).rows());
  int cols = 0;
  for (TVar p : parts) {
    require(val(p).rows() == rows, "hconcat row mismatch");
    cols += static_cast<int>(val(p).cols());
  }
  Matrix y(rows, cols);
  int off = 0;
  Node n;
  n.needs_grad = false;
  for (TVar p : parts) {
    int c = static_cast<int>(val(p).cols());
    y.middleCols(off, c) = val(p);
    off += c;
    n.parents.push_back(p.id);
    n.needs_grad = n.needs_grad || node_needs(p.id);
  }
  n.val = std::move(y);
  n.op = Op::HConcat;
  return wrap(push(std::move(n)));
}

TVar Tape::segment_mean(TVar x, std::vector<int> offsets) {
  require(offsets.size() >= 2, "segment_mean needs at least one segment");
  require(offsets.back() == val(x).rows(), "segment_mean offsets must cover all rows");
  int s_count = static_cast<int>(offsets.size()) - 1;
  Matrix y = Matrix::Zero(s_count, val(x).cols());
  for (int s = 0; s < s_count; ++s) {
    int len = offsets[s + 1] - offsets[s];
    require(len > 0, "segment_mean empty segment");
    y.row(s) = val(x).middleRows(offsets[s], len).colwise().mean();
  }
  Node n;
  n.val = std::move(y);
  n.op = Op::SegmentMean;
  n.a = x.id;
  n.iaux = static_cast<int>(int_aux_.size());
  int_aux_.push_back(std::move(offsets));
  n.needs_grad = node_needs(x.id);
  return wrap(push(std::move(n)));
}

TVar Tape::repeat_segments(TVar x, std::vector<int> counts) {
  require(static_cast<int>(counts.size()) == val(x).rows(), "repeat_segments count mismatch");
  int total = 0;
  for (int c : counts) {
    require(c >= 0, "repeat_segments negative count");
    total += c;
  }
  Matrix y(total, val(x).cols());
  int off = 0;
  for (size_t s = 0; s < counts.size(); ++s)
    for (int k = 0; k < counts[s]; ++k) y.row(off++) = val(x).row(static_cast<int>(s));
  Node n;
  n.val = std::move(y);
  n.op = Op::RepeatSegments;
  n.a = x.id;
  n.iaux = static_cast<int>(int_aux_.size());
  int_aux_.push_back(std::move(counts));
  n.needs_grad = node_needs(x.id);
  return wrap(push(std::move(n)));
}

TVar Tape::sum_all(TVar a) {
  Node n;
  n.val = Matrix::Constant(1, 1, val(a).sum());
  n.op = Op::SumAll;
  n.a = a.id;
  n.needs_grad = node_needs(a.id);
  return wrap(push(std::move(n)));
}

TVar Tape::sumsq(TVar a) {
  Node n;
  n.val = Matrix::Constant(1, 1, val(a).squaredNorm());
  n.op = Op::SumSq;
  n.a = a.id;
  n.needs_grad = node_needs(a.id);
  return wrap(push(std::move(n)));
}

void Tape::backward(TVar loss) {
  Node& ln = nodes_[loss.id];
  require(ln.val.rows() == 1 && ln.val.cols() == 1, "backward from non-scalar");

  // Mark ancestors of the loss.
  std::vector<char> reach(nodes_.size(), 0);
  std::vector<int> stack{loss.id};
  reach[loss.id] = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    const Node& n = nodes_[i];
    auto visit = [&](int p) {
      if (p >= 0 && !reach[p]) {
        reach[p] = 1;
        stack.push_back(p);
      }
    };
    visit(n.a);
    visit(n.b);
    visit(n.c);
    for (int p : n.parents) visit(p);
  }

  grad_ref(loss.id)(0, 0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (!reach[i] || !nodes_[i].needs_grad || !nodes_[i].has_grad) continue;
    backward_node(i);
  }
}

void Tape::backward_node(int i) {
  Node& n = nodes_[i];
  const Matrix& g = n.grad;
  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::Mm:
      if (node_needs(n.a)) grad_ref(n.a).noalias() += g * nodes_[n.b].val.transpose();
      if (node_needs(n.b)) grad_ref(n.b).noalias() += nodes_[n.a].val.transpose() * g;
      break;
    case Op::MmNt:
      if (node_needs(n.a)) grad_ref(n.a).noalias() += g * nodes_[n.b].val;
      if (node_needs(n.b)) grad_ref(n.b).noalias() += g.transpose() * nodes_[n.a].val;
      break;
    case Op::Add:
      if (node_needs(n.a)) grad_ref(n.a) += g;
      if (node_needs(n.b)) grad_ref(n.b) += g;
      break;
    case Op::Sub:
      if (node_needs(n.a)) grad_ref(n.a) += g;
      if (node_needs(n.b)) grad_ref(n.b) -= g;
      break;
    case Op::CMul:
      if (node_needs(n.a)) grad_ref(n.a) += g.cwiseProduct(nodes_[n.b].val);
      if (node_needs(n.b)) grad_ref(n.b) += g.cwiseProduct(nodes_[n.a].val);
      break;
    case Op::CMulConst:
      if (node_needs(n.a)) grad_ref(n.a) += g.cwiseProduct(mat_aux_[n.maux]);
      break;
    case Op::AddRowvec:
      if (node_needs(n.a)) grad_ref(n.a) += g;
      if (node_needs(n.b)) grad_ref(n.b) += g.colwise().sum();
      break;
    case Op::Scale:
      if (node_needs(n.a)) grad_ref(n.a) += scalar_aux_[n.saux] * g;
      break;
    case Op::Relu:
      if (node_needs(n.a))
        grad_ref(n.a) += g.cwiseProduct((n.val.array() > 0.0).cast<double>().matrix());
      break;
    case Op::SoftmaxRows:
      if (node_needs(n.a)) {
        Matrix& ga = grad_ref(n.a);
        for (int r = 0; r < n.val.rows(); ++r) {
          double dot = g.row(r).dot(n.val.row(r));
          ga.row(r) += (g.row(r).array() - dot).matrix().cwiseProduct(n.val.row(r));
        }
      }
      break;
    case Op::LayerNormRows: {
      const Matrix& xhat = mat_aux_[n.maux];
      const Matrix& inv_std = mat_aux_[n.maux + 1];
      if (node_needs(n.b)) grad_ref(n.b) += g.cwiseProduct(xhat).colwise().sum();
      if (node_needs(n.c)) grad_ref(n.c) += g.colwise().sum();
      if (node_needs(n.a)) {
        Matrix& ga = grad_ref(n.a);
        const Eigen::RowVectorXd gamma = nodes_[n.b].val.row(0);
        for (int r = 0; r < n.val.rows(); ++r) {
          Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(gamma);
          double m1 = dxhat.mean();
          double m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
          ga.row(r) += inv_std(r, 0) *
                       (dxhat.array() - m1 - xhat.row(r).array() * m2).matrix();
        }
      }
      break;
    }
    case Op::Spmm:
      if (node_needs(n.a)) csr_aux_[n.csr]->add_transpose_multiply(g, grad_ref(n.a));
      break;
    case Op::SpmmRows:
      if (node_needs(n.a))
        csr_aux_[n.csr]->add_transpose_multiply_rows(int_aux_[n.iaux], g, grad_ref(n.a));
      break;
    case Op::GatherRows:
      if (node_needs(n.a)) {
        Matrix& ga = grad_ref(n.a);
        const auto& idx = int_aux_[n.iaux];
        for (size_t k = 0; k < idx.size(); ++k) ga.row(idx[k]) += g.row(static_cast<int>(k));
      }
      break;
    case Op::VStack: {
      int off = 0;
      for (int p : n.parents) {
        int r = static_cast<int>(nodes_[p].val.rows());
        if (node_needs(p)) grad_ref(p) += g.middleRows(off, r);
        off += r;
      }
      break;
    }
    case Op::SliceRows:
      if (node_needs(n.a)) {
        const auto& bl = int_aux_[n.iaux];
        grad_ref(n.a).middleRows(bl[0], bl[1]) += g;
      }
      break;
    case Op::SliceCols:
      if (node_needs(n.a)) {
        const auto& bl = int_aux_[n.iaux];
        grad_ref(n.a).middleCols(bl[0], bl[1]) += g;
      }
      break;
    case Op::HConcat: {
      int off = 0;
      for (int p : n.parents) {
        int c = static_cast<int>(nodes_[p].val.cols());
        if (node_needs(p)) grad_ref(p) += g.middleCols(off, c);
        off += c;
      }
      break;
    }
    case Op::SegmentMean:
      if (node_needs(n.a)) {
        Matrix& ga = grad_ref(n.a);
        const auto& off = int_aux_[n.iaux];
        for (int s = 0; s + 1 < static_cast<int>(off.size()); ++s) {
          int len = off[s + 1] - off[s];
          for (int r = off[s]; r < off[s + 1]; ++r) ga.row(r) += g.row(s) / len;
        }
      }
      break;
    case Op::RepeatSegments:
      if (node_needs(n.a)) {
        Matrix& ga = grad_ref(n.a);
        const auto& counts = int_aux_[n.iaux];
        int off = 0;
        for (size_t s = 0; s < counts.size(); ++s) {
          for (int k = 0; k < counts[s]; ++k) ga.row(static_cast<int>(s)) += g.row(off + k);
          off += counts[s];
        }
      }
      break;
    case Op::SumAll:
      if (node_needs(n.a))
        grad_ref(n.a).array() += g(0, 0);
      break;
    case Op::SumSq:
      if (node_needs(n.a)) grad_ref(n.a) += 2.0 * g(0, 0) * nodes_[n.a].val;
      break;
  }
}

}  // namespace unicorn
