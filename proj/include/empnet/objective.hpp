#pragma once

#include <span>
#include <vector>

#include "empnet/matrix.hpp"
#include "empnet/tape.hpp"

namespace empnet {

// Floor applied inside every log in the objective.
inline constexpr double kLossEps = 1e-12;

struct LossWeights {
  double w_s = 0.84;
  double w_t = 0.16;
  bool operator==(const LossWeights&) const = default;
};

// Which way the topic divergence points. kPredictedFirst is KL(yhat || y),
// the form used by the training objective; kTargetFirst is the reverse,
// exposed for experimentation only.
enum class KlDirection { kPredictedFirst, kTargetFirst };

struct LossReport {
  double l_s = 0.0;
  double l_t = 0.0;
  double total = 0.0;
  std::vector<double> sample_ce;  // one entry per sample
  std::vector<double> sample_kl;  // empty when no topic targets were given
};

// -ln(max(y_hat[y], eps)) for a single probability row.
double cross_entropy(const Matrix& y_hat, int y);

// Mean of the row-wise cross entropies; labels.size() must equal y_hat.rows().
double cross_entropy(const Matrix& y_hat, std::span<const int> labels);

// Sum_j a_j * ln(a_j / max(b_j, eps)) with 0*ln(0) := 0, where (a, b) is
// (yhat, y) or (y, yhat) depending on direction. Rows are matched pairwise
// and the mean over rows is returned.
double kl_loss(const Matrix& y_hat_dis, const Matrix& y_dis,
               KlDirection direction = KlDirection::kPredictedFirst);

double total_loss(double l_s, double l_t, const LossWeights& w);

// Differentiable counterparts recorded on a tape. y_hat nodes carry
// probability rows (e.g. a row_softmax output); targets enter as constants.
Var cross_entropy_node(Tape& t, Var y_hat, std::span<const int> labels);
Var kl_node(Tape& t, Var y_hat_dis, const Matrix& y_dis,
            KlDirection direction = KlDirection::kPredictedFirst);
Var total_node(Tape& t, Var l_s, Var l_t, const LossWeights& w);

}  // namespace empnet
