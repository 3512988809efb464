#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace empnet {

// Dense row-major matrix of 64-bit reals. Immutable-by-convention value type:
// every operation below returns a fresh matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);  // zero-filled
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Primitive operations. All throw DimensionError on incompatible shapes.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double c);

// x (m×h) plus a single row (1×h) added to every row of x.
Matrix add_row_broadcast(const Matrix& x, const Matrix& row);

Matrix tanh_map(const Matrix& m);
Matrix sigmoid_map(const Matrix& m);

// Row-wise softmax with per-row max subtraction; each output row is a
// probability vector for any finite input.
Matrix row_softmax(const Matrix& m);

// Elementwise ln(max(x, floor)).
Matrix log_clamped(const Matrix& m, double floor);

// Columns of all parts juxtaposed in order; parts must share a row count.
Matrix concat_cols(std::span<const Matrix> parts);
Matrix concat_cols(std::initializer_list<Matrix> parts);

// Arithmetic column means, 1×cols.
Matrix mean_rows(const Matrix& m);

// Rows [first, first+count) as a new matrix.
Matrix slice_rows(const Matrix& m, std::size_t first, std::size_t count);

// Sum of all entries as a 1×1 matrix.
Matrix sum_all(const Matrix& m);

}  // namespace empnet
