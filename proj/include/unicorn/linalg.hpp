#pragma once

#include <Eigen/Core>
#include <vector>

namespace unicorn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Minimal CSR matrix. Enough for normalized adjacencies at this scale; values
// are stored row-major with sorted column indices per row.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;  // size rows + 1
  std::vector<int> col_idx;
  std::vector<double> values;

  static CsrMatrix from_triplets(int rows, int cols,
                                 std::vector<std::tuple<int, int, double>> entries);

  int nnz() const { return static_cast<int>(col_idx.size()); }
  double at(int r, int c) const;

  // y = A * x
  Matrix multiply(const Matrix& x) const;
  // y = A(rows_subset, :) * x
  Matrix multiply_rows(const std::vector<int>& row_subset, const Matrix& x) const;
  // y += A^T * g
  void add_transpose_multiply(const Matrix& g, Matrix& out) const;
  // out += A(rows_subset, :)^T * g  (g has one row per subset entry)
  void add_transpose_multiply_rows(const std::vector<int>& row_subset, const Matrix& g,
                                   Matrix& out) const;
};

}  // namespace unicorn
