#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "empnet/dataio.hpp"
#include "empnet/matrix.hpp"
#include "empnet/rng.hpp"
#include "empnet/tape.hpp"

namespace empnet {

// What feeds the topic head: the pooled projected text (default) or the
// pooled raw anchor features.
enum class TopicHeadInput { kProjectedText, kRawText };

struct NetConfig {
  Dims dims;
  std::size_t hidden = 16;  // LSTM state width
  std::size_t topics = 10;  // K, matches the fitted topic model
  double dropout_rate = 0.3;
  TopicHeadInput topic_input = TopicHeadInput::kProjectedText;
  // Modality ablation switches; at least one must stay on.
  bool use_text = true;
  bool use_audio = true;
  bool use_video = true;
};

enum class Modality { kText, kAudio, kVideo };
std::string to_string(Modality m);

// The attention layout implied by the enabled modalities: the anchor carries
// the recurrence (priority text > audio > video) and meets each remaining
// modality in one attention pairing (video before audio).
struct ModalityPlan {
  Modality anchor = Modality::kText;
  std::vector<Modality> partners;
  static ModalityPlan from(const NetConfig& cfg);
};

// Every trainable tensor, owned with stable addresses and unique names.
// Weight matrices start uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
class ModelParams {
 public:
  ModelParams(const NetConfig& cfg, std::uint64_t seed);

  const NetConfig& config() const { return cfg_; }
  const ModalityPlan& plan() const { return plan_; }
  std::size_t lstm_input_width() const { return d_in_; }
  std::size_t pooled_width() const { return d_pool_; }

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.contains(name); }
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  void zero_grads();

 private:
  Parameter& add(rng::Engine& g, std::string name, std::size_t rows, std::size_t cols,
                 bool zero_init);

  NetConfig cfg_;
  ModalityPlan plan_;
  std::size_t d_in_ = 0;
  std::size_t d_pool_ = 0;
  std::deque<Parameter> store_;
  std::unordered_map<std::string, Parameter*> index_;
};

// tanh(x.w + b); aligns anchor features with one partner's width.
Var project_text_node(Tape& t, Var x, Var w, Var b);
Matrix project_text(const Matrix& x, const Matrix& w, const Matrix& b);

struct CrossModalVars {
  Var partner_to_anchor;  // attention of each partner step over anchor tokens
  Var anchor_to_partner;  // attention of each anchor token over partner steps
  Var partner_context;    // per-partner-step weighted mix of projected anchor rows
  Var fused;              // n_anchor x 2d bimodal feature
};
CrossModalVars cross_modal_combine_node(Tape& t, Var anchor_proj, Var partner);

struct CrossModalParts {
  Matrix partner_to_anchor;
  Matrix anchor_to_partner;
  Matrix partner_context;
  Matrix fused;
};
CrossModalParts cross_modal_combine(const Matrix& anchor_proj, const Matrix& partner);

// Feature-axis concatenation of the parts followed by an LSTM over the rows;
// returns the final hidden state (1 x h).
Var aggregate_node(Tape& t, std::span<const Var> parts, ModelParams& p);

// Empathy head; training mode applies inverted dropout to l_agg first.
Var predict_empathy_node(Tape& t, Var l_agg, ModelParams& p, bool training_mode,
                         std::uint64_t dropout_seed);

// Topic head over the pooled text representation.
Var predict_topics_node(Tape& t, Var pooled, ModelParams& p);

struct Forward {
  Tape tape;
  Var empathy;      // 1 x 3 probabilities
  Var topics;       // 1 x K probabilities
  Var pooled_text;  // 1 x d_pool input the topic head saw
};

// Full per-sample pass recorded on one tape: projections, attention pairings,
// LSTM aggregation, both heads. Dimension errors name the failing stage.
Forward forward(const ConversationSample& sample, ModelParams& p, bool training_mode,
                std::uint64_t dropout_seed);

// Raw parameter block serialization: (name, shape, row-major doubles) per
// parameter, in declaration order. read_params requires the exact same
// layout and restores values bit-for-bit.
void write_params(std::ostream& out, const ModelParams& p);
void read_params(std::istream& in, ModelParams& p);

}  // namespace empnet
