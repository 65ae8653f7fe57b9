#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "unicorn/linalg.hpp"
#include "unicorn/rng.hpp"
#include "unicorn/tape.hpp"

namespace unicorn {

// Ordered, named collection of dense parameter tensors. Order is insertion
// order and is the canonical order for optimizer state and checkpoints.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Matrix value;
  };

  int add(std::string name, Matrix value) {
    if (index_.count(name)) throw std::logic_error("duplicate tensor name: " + name);
    int id = static_cast<int>(entries_.size());
    index_[name] = id;
    entries_.push_back({std::move(name), std::move(value)});
    return id;
  }

  int find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no tensor named " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  Matrix& value(int id) { return entries_[id].value; }
  const Matrix& value(int id) const { return entries_[id].value; }
  Matrix& value(const std::string& name) { return entries_[find(name)].value; }
  const Matrix& value(const std::string& name) const { return entries_[find(name)].value; }
  const std::string& name(int id) const { return entries_[id].name; }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }

  std::vector<TVar> attach(Tape& tape, bool needs_grad = true) const {
    std::vector<TVar> vars;
    vars.reserve(entries_.size());
    for (const auto& e : entries_) vars.push_back(tape.leaf(e.value, needs_grad));
    return vars;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, int> index_;
};

inline Matrix xavier_uniform(int rows, int cols, Rng& rng) {
  double bound = std::sqrt(6.0 / (rows + cols));
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform_range(-bound, bound);
  return m;
}

class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& params, const std::vector<Matrix>& grads) {
    if (m_.empty()) {
      for (int i = 0; i < params.size(); ++i) {
        m_.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
        v_.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
      }
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (int i = 0; i < params.size(); ++i) {
      const Matrix& g = grads[i];
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
      params.value(i).array() -=
          lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
    }
  }

  int64_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace unicorn
