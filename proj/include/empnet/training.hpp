#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "empnet/dataio.hpp"
#include "empnet/lda.hpp"
#include "empnet/metrics.hpp"
#include "empnet/network.hpp"
#include "empnet/objective.hpp"

namespace empnet {

enum class Optimizer { kSgd, kAdam };
Optimizer parse_optimizer(const std::string& name);
std::string to_string(Optimizer o);

KlDirection parse_kl_direction(const std::string& name);
std::string to_string(KlDirection d);
TopicHeadInput parse_topic_input(const std::string& name);
std::string to_string(TopicHeadInput t);

struct LdaParams {
  double alpha = 0.1;
  double beta = 0.01;
  std::size_t sweeps = 500;
  bool operator==(const LdaParams&) const = default;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 60;
  double dropout_rate = 0.3;
  std::size_t topics = 10;  // K of the supervisory topic model
  std::size_t hidden = 16;
  LossWeights weights;
  LabelTarget label_target = LabelTarget::kEe;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;
  bool sdat_enabled = true;
  LdaParams lda;
  KlDirection kl_direction = KlDirection::kPredictedFirst;
  TopicHeadInput topic_input = TopicHeadInput::kProjectedText;
  bool use_text = true;
  bool use_audio = true;
  bool use_video = true;
  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& cfg);

// JSON object with defaults for absent keys; unknown keys are rejected.
TrainConfig parse_train_config(const std::string& json_text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string to_json(const TrainConfig& cfg);

NetConfig net_config(const TrainConfig& cfg, const Dims& dims);

struct OptimizerState {
  Optimizer kind = Optimizer::kAdam;
  std::int64_t steps = 0;    // bias-correction clock
  std::vector<Matrix> m, v;  // adam moments in parameter declaration order
  bool operator==(const OptimizerState&) const = default;
};

// One gradient step over already-populated grads. adam runs beta1=0.9,
// beta2=0.999, eps=1e-8 with bias correction; sgd is plain theta -= lr*g.
void optimizer_step(std::span<Parameter* const> params, double lr, OptimizerState& state);

struct TopicTargets {
  std::unordered_map<std::string, Matrix> by_id;  // sample id -> 1 x K row
  std::optional<LdaModel> model;
};

// Fits the topic model on the training documents (reads go through the
// privileged accessor) and hands back each sample's topic row. Disabled
// supervision returns an empty result without touching any document.
TopicTargets prepare_targets(const Dataset& train, const TrainConfig& cfg);

struct Checkpoint {
  TrainConfig config;
  Dims dims;
  std::uint64_t epochs_done = 0;
  OptimizerState opt;
  std::string params_blob;          // write_params image of the live weights
  std::uint64_t best_epoch = 0;     // 0 = the pre-training snapshot
  double best_val_accuracy = -1.0;  // -1 until the first validation pass
  std::string best_params_blob;
  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

ModelParams restore_params(const Checkpoint& ck);  // current weights
ModelParams restore_best(const Checkpoint& ck);    // best-validation weights

struct EpochRecord {
  std::uint64_t epoch = 0;  // 1-based
  double l_s = 0.0;
  double l_t = 0.0;
  double total = 0.0;
  double val_accuracy = 0.0;
  double val_weighted_f1 = 0.0;
  double seconds = 0.0;
};

struct TrainRun {
  TrainConfig config;
  std::vector<EpochRecord> history;  // this invocation's epochs only
  Checkpoint final_state;            // carries the best-checkpoint bookkeeping
};

// Fit topic targets, init weights, then per epoch: seeded shuffle,
// minibatches of <= batch_size, mean-of-batch gradients, one optimizer step
// per batch, validation pass. Deterministic in (data, cfg). epoch_log, when
// given, receives one JSON line per epoch.
TrainRun train(const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& cfg,
               std::ostream* epoch_log = nullptr);

// Continues a checkpoint to ck.config.epochs total epochs; bit-identical to
// the uninterrupted run.
TrainRun resume(const Checkpoint& ck, const Dataset& train_ds, const Dataset& val_ds,
                std::ostream* epoch_log = nullptr);

// Central-difference check (eps 1e-5) of the full composed loss on one
// training-mode sample at small fixed probe shapes (text 3x4, audio and
// video 2x3); the architecture hyperparameters come from the config.
GradCheckReport gradient_probe(const TrainConfig& cfg, std::uint64_t seed);

struct GridSearchResult {
  std::size_t best_k = 0;
  std::vector<std::pair<std::size_t, double>> accuracy_by_k;  // ascending K
};

// Full prepare_targets + train per candidate; best validation accuracy wins,
// ties to the smaller K.
GridSearchResult grid_search_topics(const Dataset& train_ds, const Dataset& val_ds,
                                    const TrainConfig& base,
                                    std::vector<std::size_t> candidates);

// Evaluation-mode mean topic divergence against prepared targets; used by the
// supervision ablation, which compares runs whose training never saw w_t > 0.
double mean_topic_kl(ModelParams& p, const Dataset& ds, const TopicTargets& targets,
                     KlDirection direction = KlDirection::kPredictedFirst);

}  // namespace empnet
