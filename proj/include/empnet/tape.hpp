#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "empnet/matrix.hpp"

namespace empnet {

// A named trainable tensor. value and grad always share a shape; grad starts
// at zero and accumulates additively across backward passes until cleared.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

// Handle to a node on a Tape. Only meaningful for the tape that produced it.
class Var {
 public:
  Var() = default;
  bool valid() const { return id_ != kInvalid; }

 private:
  friend class Tape;
  explicit Var(std::uint32_t id) : id_(id) {}
  static constexpr std::uint32_t kInvalid = ~std::uint32_t{0};
  std::uint32_t id_ = kInvalid;
};

// Append-only record of primitive operations over one forward pass.
// backward() evaluates exact reverse-mode derivatives of a scalar output with
// respect to every Parameter that was touched; a parameter recorded several
// times contributes the sum of its path derivatives.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Leaves. input() takes a constant; param() registers a trainable leaf and
  // returns the same node if called again with the same parameter.
  Var input(Matrix value);
  Var param(Parameter& p);

  // Primitives. Each records one node and returns its handle.
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var add_row(Var x, Var row);  // broadcast a 1×h row over the rows of x
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var row_softmax(Var x);
  Var log_clamped(Var x, double floor);
  Var concat_cols(std::span<const Var> parts);
  Var mean_rows(Var x);
  Var slice_rows(Var x, std::size_t first, std::size_t count);
  Var transpose(Var x);
  Var scale(Var x, double c);
  Var sum(Var x);  // 1×1

  // x·w + b broadcast over rows; two recorded primitives.
  Var affine(Var x, Var w, Var b) { return add_row(matmul(x, w), b); }

  const Matrix& value(Var v) const;
  double scalar(Var v) const;  // value of a 1×1 node

  // Reverse-mode pass from a 1×1 node. Accumulates into Parameter::grad.
  // A tape can be walked backward once; a second call throws StaleTapeError.
  void backward(Var loss);

  // Recomputes every recorded operation from the stored leaves and returns
  // the value of `v`; bit-identical to the original forward computation.
  double replay(Var v) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kInput,
    kParam,
    kMatMul,
    kAdd,
    kSub,
    kHadamard,
    kAddRow,
    kTanh,
    kSigmoid,
    kRowSoftmax,
    kLogClamped,
    kConcatCols,
    kMeanRows,
    kSliceRows,
    kTranspose,
    kScale,
    kSum,
  };

  struct Node {
    Op op;
    std::vector<std::uint32_t> inputs;
    Matrix value;
    double aux = 0.0;        // scale factor or log floor
    std::size_t index = 0;   // slice_rows offset
    Parameter* parameter = nullptr;
  };

  Var push(Node n);
  const Node& node(Var v) const;
  Matrix eval(const Node& n, const std::vector<Matrix>& values) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  bool consumed_ = false;
};

// Per-parameter gradient check report.
struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<std::pair<std::string, double>> per_param;
};

// Central-difference check of the gradients currently stored in the given
// parameters against a deterministic loss functional. For each entry the
// relative error is |g - fd| / max(1e-6, |g| + |fd|). Preconditions: eps > 0
// (ValidationError otherwise) and a deterministic `loss_fn` (two baseline
// evaluations are compared; DeterminismError if they differ).
GradCheckReport finite_diff_check(const std::function<double()>& loss_fn,
                                  std::span<Parameter* const> params, double eps);

}  // namespace empnet
