#include "empnet/ablation.hpp"

#include <algorithm>
#include <cstdio>

#include "empnet/error.hpp"

namespace empnet {

AblationSuite parse_ablation_suite(const std::string& name) {
  if (name == "modality") return AblationSuite::kModality;
  if (name == "sdat") return AblationSuite::kSdat;
  throw ValidationError("unknown ablation suite: " + name);
}

std::string to_string(AblationSuite s) {
  return s == AblationSuite::kModality ? "modality" : "sdat";
}

namespace {

struct ModalityVariant {
  const char* name;
  bool text, audio, video;
};

// Unimodal, bimodal, trimodal — the table's row order.
constexpr ModalityVariant kModalityVariants[] = {
    {"text", true, false, false},
    {"audio", false, true, false},
    {"video", false, false, true},
    {"text+audio", true, true, false},
    {"text+video", true, false, true},
    {"audio+video", false, true, true},
    {"text+audio+video", true, true, true},
};

AblationRow run_variant(const std::string& name, const TrainConfig& cfg, const Dataset& train_ds,
                        const Dataset& val_ds, const Dataset& eval_ds, bool want_kl) {
  TrainRun run = train(train_ds, val_ds, cfg);
  ModelParams params = restore_best(run.final_state);
  EvalReport rep = evaluate(params, eval_ds, cfg.label_target);
  AblationRow row;
  row.variant = name;
  row.accuracy = rep.accuracy;
  row.weighted_f1 = rep.weighted_f1;
  if (want_kl && !run.history.empty()) row.train_topic_kl = run.history.back().l_t;
  return row;
}

std::string fixed(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

}  // namespace

std::vector<AblationRow> run_ablation(AblationSuite suite, const TrainConfig& base,
                                      const Dataset& train_ds, const Dataset& val_ds,
                                      const Dataset& eval_ds) {
  validate(base);
  std::vector<AblationRow> rows;
  if (suite == AblationSuite::kModality) {
    for (const ModalityVariant& v : kModalityVariants) {
      TrainConfig cfg = base;
      cfg.use_text = v.text;
      cfg.use_audio = v.audio;
      cfg.use_video = v.video;
      rows.push_back(run_variant(v.name, cfg, train_ds, val_ds, eval_ds, false));
    }
    return rows;
  }
  if (!base.sdat_enabled)
    throw ValidationError("sdat suite compares topic-loss weights; enable topic supervision");
  if (base.weights.w_t <= 0.0)
    throw ValidationError("sdat suite needs a positive topic-loss weight in the base config");
  for (const double w_t : {0.0, base.weights.w_t}) {
    TrainConfig cfg = base;
    cfg.weights.w_t = w_t;
    const std::string name =
        w_t == 0.0 ? "without-topic-supervision" : "with-topic-supervision";
    rows.push_back(run_variant(name, cfg, train_ds, val_ds, eval_ds, true));
  }
  return rows;
}

std::string render_ablation_table(const std::vector<AblationRow>& rows) {
  const bool kl = std::any_of(rows.begin(), rows.end(),
                              [](const AblationRow& r) { return r.train_topic_kl.has_value(); });
  std::size_t name_w = std::string("variant").size();
  for (const AblationRow& r : rows) name_w = std::max(name_w, r.variant.size());

  std::string out;
  auto line = [&](const std::string& name, const std::string& acc, const std::string& f1,
                  const std::string& k) {
    out += name;
    out.append(name_w - name.size() + 2, ' ');
    out.append(acc.size() < 8 ? 8 - acc.size() : 0, ' ');
    out += acc;
    out.append(f1.size() < 13 ? 13 - f1.size() : 0, ' ');
    out += f1;
    if (kl) {
      out.append(k.size() < 10 ? 10 - k.size() : 0, ' ');
      out += k;
    }
    out += '\n';
  };
  line("variant", "accuracy", "weighted_f1", "train_kl");
  for (const AblationRow& r : rows)
    line(r.variant, fixed(r.accuracy), fixed(r.weighted_f1),
         r.train_topic_kl ? fixed(*r.train_topic_kl) : "-");
  return out;
}

}  // namespace empnet
