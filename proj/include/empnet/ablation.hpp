#pragma once

#include <optional>
#include <string>
#include <vector>

#include "empnet/training.hpp"

namespace empnet {

enum class AblationSuite { kModality, kSdat };
AblationSuite parse_ablation_suite(const std::string& name);
std::string to_string(AblationSuite s);

struct AblationRow {
  std::string variant;
  double accuracy = 0.0;     // on the held-out evaluation split
  double weighted_f1 = 0.0;  // same split
  // Final-epoch mean train-set topic KL; set only by the sdat suite.
  std::optional<double> train_topic_kl;
  bool operator==(const AblationRow&) const = default;
};

// Trains one model per variant from the shared base config, scores the
// best-validation weights on eval_ds, and returns one row per variant.
//
// modality suite: 7 rows, unimodal then bimodal then trimodal, by flipping
// the use_* switches (absent modalities drop out before fusion). sdat suite:
// 2 rows, topic-loss weight 0 then base.weights.w_t, both fitting topic
// targets so the KL diagnostic stays comparable.
std::vector<AblationRow> run_ablation(AblationSuite suite, const TrainConfig& base,
                                      const Dataset& train_ds, const Dataset& val_ds,
                                      const Dataset& eval_ds);

// Fixed-width text table; one line per row plus a header. The KL column
// appears only when some row carries it.
std::string render_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace empnet
