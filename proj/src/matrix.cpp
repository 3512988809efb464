#include "empnet/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "empnet/error.hpp"

namespace empnet {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a) +
                       " and " + shape_str(b));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                         " does not equal " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer rows");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_fail("matmul", a, b);
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_fail("add", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_fail("sub", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_fail("hadamard", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
  return out;
}

Matrix scale(const Matrix& m, double c) {
  Matrix out = m;
  for (double& v : out.data()) v *= c;
  return out;
}

Matrix add_row_broadcast(const Matrix& x, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != x.cols()) shape_fail("add_row_broadcast", x, row);
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += row(0, j);
  return out;
}

Matrix tanh_map(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = std::tanh(v);
  return out;
}

Matrix sigmoid_map(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  return out;
}

Matrix row_softmax(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double mx = m(i, 0);
    for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double e = std::exp(m(i, j) - mx);
      out(i, j) = e;
      sum += e;
    }
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= sum;
  }
  return out;
}

Matrix log_clamped(const Matrix& m, double floor) {
  Matrix out = m;
  for (double& v : out.data()) v = std::log(std::max(v, floor));
  return out;
}

Matrix concat_cols(std::span<const Matrix> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: empty part list");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Matrix& p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", parts.front(), p);
    cols += p.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t off = 0;
    for (const Matrix& p : parts) {
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, off + j) = p(i, j);
      off += p.cols();
    }
  }
  return out;
}

Matrix concat_cols(std::initializer_list<Matrix> parts) {
  return concat_cols(std::span<const Matrix>(parts.begin(), parts.size()));
}

Matrix mean_rows(const Matrix& m) {
  if (m.rows() == 0) throw DimensionError("mean_rows: empty matrix");
  Matrix out(1, m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, j);
    out(0, j) = s / static_cast<double>(m.rows());
  }
  return out;
}

Matrix slice_rows(const Matrix& m, std::size_t first, std::size_t count) {
  if (first + count > m.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(first) + ", " +
                         std::to_string(first + count) + ") exceeds " +
                         std::to_string(m.rows()) + " rows");
  }
  Matrix out(count, m.cols());
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(first + i, j);
  return out;
}

Matrix sum_all(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v;
  Matrix out(1, 1);
  out(0, 0) = s;
  return out;
}

}  // namespace empnet
