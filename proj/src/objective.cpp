#include "empnet/objective.hpp"

#include <cmath>
#include <string>

#include "empnet/error.hpp"

namespace empnet {

namespace {

void require_row_count(const Matrix& m, std::size_t n, const char* what) {
  if (m.rows() != n) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(n) +
                         " rows, got " + std::to_string(m.rows()));
  }
}

Matrix one_hot_rows(std::span<const int> labels, std::size_t classes) {
  Matrix y(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || static_cast<std::size_t>(c) >= classes) {
      throw ValidationError("cross_entropy: class " + std::to_string(c) +
                            " outside [0, " + std::to_string(classes) + ")");
    }
    y(i, static_cast<std::size_t>(c)) = 1.0;
  }
  return y;
}

}  // namespace

double cross_entropy(const Matrix& y_hat, int y) {
  require_row_count(y_hat, 1, "cross_entropy");
  if (y < 0 || static_cast<std::size_t>(y) >= y_hat.cols()) {
    throw ValidationError("cross_entropy: class " + std::to_string(y) + " outside [0, " +
                          std::to_string(y_hat.cols()) + ")");
  }
  return -std::log(std::max(y_hat(0, static_cast<std::size_t>(y)), kLossEps));
}

double cross_entropy(const Matrix& y_hat, std::span<const int> labels) {
  require_row_count(y_hat, labels.size(), "cross_entropy");
  if (labels.empty()) throw ValidationError("cross_entropy: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    total += cross_entropy(slice_rows(y_hat, i, 1), labels[i]);
  return total / static_cast<double>(labels.size());
}

double kl_loss(const Matrix& y_hat_dis, const Matrix& y_dis, KlDirection direction) {
  if (!y_hat_dis.same_shape(y_dis)) {
    throw DimensionError("kl_loss: " + std::to_string(y_hat_dis.cols()) + " vs " +
                         std::to_string(y_dis.cols()) + " topics");
  }
  if (y_hat_dis.rows() == 0) throw ValidationError("kl_loss: empty batch");
  const Matrix& a = direction == KlDirection::kPredictedFirst ? y_hat_dis : y_dis;
  const Matrix& b = direction == KlDirection::kPredictedFirst ? y_dis : y_hat_dis;
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aj = a(i, j);
      if (aj == 0.0) continue;  // 0 * ln(0/b) := 0
      total += aj * (std::log(std::max(aj, kLossEps)) - std::log(std::max(b(i, j), kLossEps)));
    }
  return total / static_cast<double>(a.rows());
}

double total_loss(double l_s, double l_t, const LossWeights& w) {
  if (w.w_s < 0.0 || w.w_t < 0.0) throw ValidationError("total_loss: negative weight");
  return w.w_s * l_s + w.w_t * l_t;
}

Var cross_entropy_node(Tape& t, Var y_hat, std::span<const int> labels) {
  const Matrix& probs = t.value(y_hat);
  require_row_count(probs, labels.size(), "cross_entropy_node");
  if (labels.empty()) throw ValidationError("cross_entropy_node: empty batch");
  Matrix onehot = one_hot_rows(labels, probs.cols());
  Var picked = t.hadamard(t.input(std::move(onehot)), t.log_clamped(y_hat, kLossEps));
  return t.scale(t.sum(picked), -1.0 / static_cast<double>(labels.size()));
}

Var kl_node(Tape& t, Var y_hat_dis, const Matrix& y_dis, KlDirection direction) {
  const Matrix& probs = t.value(y_hat_dis);
  if (!probs.same_shape(y_dis)) {
    throw DimensionError("kl_node: " + std::to_string(probs.cols()) + " vs " +
                         std::to_string(y_dis.cols()) + " topics");
  }
  if (probs.rows() == 0) throw ValidationError("kl_node: empty batch");
  const double inv_n = 1.0 / static_cast<double>(probs.rows());
  if (direction == KlDirection::kPredictedFirst) {
    Var log_ratio = t.sub(t.log_clamped(y_hat_dis, kLossEps),
                          t.input(log_clamped(y_dis, kLossEps)));
    return t.scale(t.sum(t.hadamard(y_hat_dis, log_ratio)), inv_n);
  }
  // Reverse direction: sum_j y_j * (ln y_j - ln yhat_j); only the second term
  // depends on the prediction.
  Var cross = t.hadamard(t.input(y_dis), t.log_clamped(y_hat_dis, kLossEps));
  double entropy = 0.0;  // sum_j y_j ln y_j, constant w.r.t. the network
  for (std::size_t i = 0; i < y_dis.rows(); ++i)
    for (std::size_t j = 0; j < y_dis.cols(); ++j) {
      const double yj = y_dis(i, j);
      if (yj > 0.0) entropy += yj * std::log(yj);
    }
  Var scaled = t.scale(t.sum(cross), -inv_n);
  return t.add(scaled, t.input(Matrix(1, 1, {entropy * inv_n})));
}

Var total_node(Tape& t, Var l_s, Var l_t, const LossWeights& w) {
  if (w.w_s < 0.0 || w.w_t < 0.0) throw ValidationError("total_node: negative weight");
  return t.add(t.scale(l_s, w.w_s), t.scale(l_t, w.w_t));
}

}  // namespace empnet
