#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "empnet/matrix.hpp"

namespace empnet {

struct Labels {
  int ee = 0;  // empathy expression
  int er = 0;  // empathy response
  int cr = 0;  // communication quality
  bool operator==(const Labels&) const = default;
};

// One conversation clip with pre-extracted modality features. doc_tokens is
// the supervisory document; it may be absent outside the training split.
struct ConversationSample {
  std::string id;
  Matrix text;   // n_t x d_t
  Matrix audio;  // n_a x d_a
  Matrix video;  // n_v x d_v
  Labels labels;
  std::optional<std::vector<std::string>> doc_tokens;
  bool operator==(const ConversationSample&) const = default;
};

struct Dims {
  std::size_t d_t = 0;
  std::size_t d_a = 0;
  std::size_t d_v = 0;
  bool operator==(const Dims&) const = default;
};

struct Dataset {
  int schema_version = 1;
  Dims dims;
  std::vector<ConversationSample> samples;
  bool operator==(const Dataset&) const = default;
};

struct SplitSpec {
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Reads the JSON-lines file (header line, then one record per line) and
// checks every invariant eagerly. Parse failures carry the 1-based line.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// Fisher-Yates shuffle by spec.seed, then contiguous slices at
// floor(r0*n) and floor((r0+r1)*n).
SplitResult split(const Dataset& ds, const SplitSpec& spec);

enum class SynthTask {
  kUnimodalLinear,    // label = argmax of the first 3 mean-pooled text columns
  kCrossModalParity,  // label = XOR of audio/video channel-0 sign indicators
  kTopicCorrelated,   // label = dominant planted topic of the document
};

SynthTask parse_synth_task(const std::string& name);
std::string to_string(SynthTask task);

struct SynthConfig {
  SynthTask task = SynthTask::kUnimodalLinear;
  std::size_t n_samples = 128;
  std::size_t n_t = 4, n_a = 3, n_v = 3;
  Dims dims{8, 6, 6};
  std::size_t n_topics = 2;         // planted topics (topic-correlated only)
  std::size_t vocab_per_topic = 8;  // disjoint vocabulary size per topic
  std::size_t doc_len = 30;
  double noise = 0.5;  // stddev of the feature noise
};

// Deterministic in (cfg, seed); labels are re-derivable from the stored
// features/tokens by the task's stated mechanism.
Dataset synth_generate(const SynthConfig& cfg, std::uint64_t seed);

// Label re-derivation used by generator tests and honesty checks.
int derive_label(const ConversationSample& s, SynthTask task, const SynthConfig& cfg);

// Every read of the supervisory document on a training path goes through this
// accessor; the counter lets tests prove nothing privileged is touched when
// topic supervision is disabled.
const std::optional<std::vector<std::string>>& privileged_tokens(const ConversationSample& s);
std::uint64_t privileged_access_count();
void reset_privileged_access_count();

}  // namespace empnet
