#include "unicorn/linalg.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace unicorn {

CsrMatrix CsrMatrix::from_triplets(int rows, int cols,
                                   std::vector<std::tuple<int, int, double>> entries) {
  std::sort(entries.begin(), entries.end());
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  m.col_idx.reserve(entries.size());
  m.values.reserve(entries.size());
  int prev_r = -1, prev_c = -1;
  for (const auto& [r, c, v] : entries) {
    if (r < 0 || r >= rows || c < 0 || c >= cols) throw std::out_of_range("csr entry out of range");
    if (r == prev_r && c == prev_c) throw std::invalid_argument("duplicate csr entry");
    prev_r = r;
    prev_c = c;
    m.row_ptr[r + 1]++;
    m.col_idx.push_back(c);
    m.values.push_back(v);
  }
  for (int r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

double CsrMatrix::at(int r, int c) const {
  for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
    if (col_idx[k] == c) return values[k];
  return 0.0;
}

// The dense operands are column major, so all four products sweep one output
// column at a time and walk the nonzeros inside; per element the accumulation
// stays in nonzero order.

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

// The dense operands are column major, which makes the natural row-wise
// accumulation strided. Each product stages its operands row major once, runs
// contiguous row AXPYs, and converts back; per element the accumulation stays
// in nonzero order.

Matrix CsrMatrix::multiply(const Matrix& x) const {
  const RowMajor xr = x;
  RowMajor y = RowMajor::Zero(rows, x.cols());
  const int c = static_cast<int>(x.cols());
  for (int r = 0; r < rows; ++r) {
    double* yp = y.data() + static_cast<ptrdiff_t>(r) * c;
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const double v = values[k];
      const double* xp = xr.data() + static_cast<ptrdiff_t>(col_idx[k]) * c;
      for (int j = 0; j < c; ++j) yp[j] += v * xp[j];
    }
  }
  return y;
}

Matrix CsrMatrix::multiply_rows(const std::vector<int>& row_subset, const Matrix& x) const {
  const RowMajor xr = x;
  const int n = static_cast<int>(row_subset.size());
  const int c = static_cast<int>(x.cols());
  RowMajor y = RowMajor::Zero(n, c);
  for (int i = 0; i < n; ++i) {
    const int r = row_subset[i];
    double* yp = y.data() + static_cast<ptrdiff_t>(i) * c;
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const double v = values[k];
      const double* xp = xr.data() + static_cast<ptrdiff_t>(col_idx[k]) * c;
      for (int j = 0; j < c; ++j) yp[j] += v * xp[j];
    }
  }
  return y;
}

void CsrMatrix::add_transpose_multiply(const Matrix& g, Matrix& out) const {
  const RowMajor gr = g;
  RowMajor acc = out;
  const int c = static_cast<int>(g.cols());
  for (int r = 0; r < rows; ++r) {
    const double* gp = gr.data() + static_cast<ptrdiff_t>(r) * c;
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const double v = values[k];
      double* op = acc.data() + static_cast<ptrdiff_t>(col_idx[k]) * c;
      for (int j = 0; j < c; ++j) op[j] += v * gp[j];
    }
  }
  out = acc;
}

void CsrMatrix::add_transpose_multiply_rows(const std::vector<int>& row_subset, const Matrix& g,
                                            Matrix& out) const {
  const RowMajor gr = g;
  RowMajor acc = out;
  const int n = static_cast<int>(row_subset.size());
  const int c = static_cast<int>(g.cols());
  for (int i = 0; i < n; ++i) {
    const int r = row_subset[i];
    const double* gp = gr.data() + static_cast<ptrdiff_t>(i) * c;
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const double v = values[k];
      double* op = acc.data() + static_cast<ptrdiff_t>(col_idx[k]) * c;
      for (int j = 0; j < c; ++j) op[j] += v * gp[j];
    }
  }
  out = acc;
}

}  // namespace unicorn
