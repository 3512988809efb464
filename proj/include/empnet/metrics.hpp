#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "empnet/dataio.hpp"
#include "empnet/network.hpp"

namespace empnet {

// Which of the three per-sample ratings a model predicts.
enum class LabelTarget { kEe, kEr, kCr };

LabelTarget parse_label_target(const std::string& name);  // "ee" | "er" | "cr"
std::string to_string(LabelTarget t);
int label_of(const Labels& l, LabelTarget t);

// rows = true class, cols = predicted class.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, 3>, 3> counts{};
  std::int64_t total() const;
  std::int64_t trace() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth);

double accuracy(std::span<const int> pred, std::span<const int> truth);

// Per-class F1 = 2PR/(P+R) with the zero conventions (P or R is 0 when its
// denominator is 0, F1 is 0 when P+R is 0), weighted by true-class support.
double weighted_f1(std::span<const int> pred, std::span<const int> truth);
// Unweighted mean over the three classes; reported alongside for transparency.
double macro_f1(std::span<const int> pred, std::span<const int> truth);

struct EvalReport {
  LabelTarget label_target = LabelTarget::kEe;
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  ConfusionMatrix confusion;
  std::size_t n = 0;
  bool operator==(const EvalReport&) const = default;
};

// Highest-probability class; ties break toward the lowest index.
int argmax_class(const Matrix& row);

// Evaluation-mode forward over every sample. Deterministic; dimension
// mismatches name the offending field before any forward pass runs.
EvalReport evaluate(ModelParams& p, const Dataset& ds, LabelTarget target);

}  // namespace empnet
