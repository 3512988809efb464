#include "empnet/metrics.hpp"

#include <string>

#include "empnet/error.hpp"

namespace empnet {

namespace {

constexpr int kClasses = 3;

void check_pair(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    throw DimensionError("metrics: pred has " + std::to_string(pred.size()) +
                         " entries, truth has " + std::to_string(truth.size()));
  }
  if (pred.empty()) throw ValidationError("metrics: empty prediction list");
}

struct F1Breakdown {
  std::array<double, kClasses> f1{};
  std::array<std::int64_t, kClasses> support{};
  std::int64_t n = 0;
};

F1Breakdown f1_from_confusion(const ConfusionMatrix& cm) {
  F1Breakdown out;
  out.n = cm.total();
  for (int c = 0; c < kClasses; ++c) {
    std::int64_t tp = cm.counts[c][c], fp = 0, fn = 0;
    for (int o = 0; o < kClasses; ++o) {
      if (o == c) continue;
      fp += cm.counts[o][c];
      fn += cm.counts[c][o];
    }
    const double p = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
    const double r = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
    out.f1[c] = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    out.support[c] = tp + fn;
  }
  return out;
}

}  // namespace

LabelTarget parse_label_target(const std::string& name) {
  if (name == "ee") return LabelTarget::kEe;
  if (name == "er") return LabelTarget::kEr;
  if (name == "cr") return LabelTarget::kCr;
  throw ValidationError("unknown label target '" + name + "' (expected ee, er, or cr)");
}

std::string to_string(LabelTarget t) {
  switch (t) {
    case LabelTarget::kEe: return "ee";
    case LabelTarget::kEr: return "er";
    case LabelTarget::kCr: return "cr";
  }
  throw ValidationError("invalid label target");
}

int label_of(const Labels& l, LabelTarget t) {
  switch (t) {
    case LabelTarget::kEe: return l.ee;
    case LabelTarget::kEr: return l.er;
    case LabelTarget::kCr: return l.cr;
  }
  throw ValidationError("invalid label target");
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t n = 0;
  for (const auto& row : counts)
    for (std::int64_t c : row) n += c;
  return n;
}

std::int64_t ConfusionMatrix::trace() const {
  return counts[0][0] + counts[1][1] + counts[2][2];
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth) {
  check_pair(pred, truth);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= kClasses || pred[i] < 0 || pred[i] >= kClasses) {
      throw ValidationError("metrics: class id out of range at position " + std::to_string(i));
    }
    ++cm.counts[truth[i]][pred[i]];
  }
  return cm;
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  check_pair(pred, truth);
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return double(hits) / double(pred.size());
}

double weighted_f1(std::span<const int> pred, std::span<const int> truth) {
  const F1Breakdown b = f1_from_confusion(confusion(pred, truth));
  double out = 0.0;
  for (int c = 0; c < kClasses; ++c) out += double(b.support[c]) / double(b.n) * b.f1[c];
  return out;
}

double macro_f1(std::span<const int> pred, std::span<const int> truth) {
  const F1Breakdown b = f1_from_confusion(confusion(pred, truth));
  return (b.f1[0] + b.f1[1] + b.f1[2]) / kClasses;
}

int argmax_class(const Matrix& row) {
  if (row.rows() != 1 || row.cols() == 0) {
    throw DimensionError("argmax_class: expected a nonempty single row");
  }
  int best = 0;
  for (std::size_t j = 1; j < row.cols(); ++j) {
    if (row(0, j) > row(0, best)) best = int(j);
  }
  return best;
}

EvalReport evaluate(ModelParams& p, const Dataset& ds, LabelTarget target) {
  if (ds.samples.empty()) throw ValidationError("evaluate: dataset has no samples");
  const Dims& want = p.config().dims;
  auto check = [](const char* field, std::size_t got, std::size_t expect) {
    if (got != expect) {
      throw DimensionError(std::string("evaluate: dataset ") + field + "=" +
                           std::to_string(got) + " but the model expects " +
                           std::to_string(expect));
    }
  };
  check("d_t", ds.dims.d_t, want.d_t);
  check("d_a", ds.dims.d_a, want.d_a);
  check("d_v", ds.dims.d_v, want.d_v);

  EvalReport rep;
  rep.label_target = target;
  rep.n = ds.samples.size();
  std::vector<int> pred(ds.samples.size()), truth(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    Forward f = forward(ds.samples[i], p, /*training_mode=*/false, /*dropout_seed=*/0);
    pred[i] = argmax_class(f.tape.value(f.empathy));
    truth[i] = label_of(ds.samples[i].labels, target);
  }
  rep.confusion = confusion(pred, truth);
  rep.accuracy = double(rep.confusion.trace()) / double(rep.n);
  const F1Breakdown b = f1_from_confusion(rep.confusion);
  for (int c = 0; c < kClasses; ++c) {
    rep.weighted_f1 += double(b.support[c]) / double(b.n) * b.f1[c];
  }
  rep.macro_f1 = (b.f1[0] + b.f1[1] + b.f1[2]) / kClasses;
  return rep;
}

}  // namespace empnet
