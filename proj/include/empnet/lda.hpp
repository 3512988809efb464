#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "empnet/matrix.hpp"

namespace empnet {

// Dense token <-> id bijection; ids are assigned in first-seen order.
class Vocabulary {
 public:
  std::size_t add(const std::string& token);
  std::optional<std::size_t> id_of(const std::string& token) const;
  const std::string& token_of(std::size_t id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool operator==(const Vocabulary&) const = default;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

struct LdaConfig {
  std::size_t topics = 10;  // K, grid-searched default
  double alpha = 0.1;       // symmetric document-topic prior
  double beta = 0.01;       // symmetric topic-word prior
  std::size_t sweeps = 500;
  bool check_counts_every_sweep = false;  // test hook; expensive
};

// A per-document topic mixture: 1 x K probability row.
using TopicDistribution = Matrix;

struct LdaModel {
  std::size_t topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  Vocabulary vocab;
  std::vector<std::vector<std::uint32_t>> corpus;       // token ids per doc
  std::vector<std::vector<std::uint32_t>> assignments;  // z, parallel to corpus
  std::vector<std::int64_t> topic_word;                 // K x V, row-major n_{k,w}
  std::vector<std::int64_t> topic_totals;               // n_k
  std::vector<std::int64_t> doc_topic;                  // D x K, row-major n_{d,k}
  std::vector<double> log_joint_history;                // one entry per sweep
  std::vector<std::string> warnings;
  bool operator==(const LdaModel&) const = default;
};

// Collapsed Gibbs sampling. Deterministic in (docs, cfg, seed).
LdaModel lda_fit(const std::vector<std::vector<std::string>>& docs, const LdaConfig& cfg,
                 std::uint64_t seed);

// Throws if the count matrices disagree with a recount of the assignments.
void verify_counts(const LdaModel& m);

// (n_{d,j} + alpha) / (N_d + K*alpha) for a training document.
TopicDistribution doc_topic_distribution(const LdaModel& m, std::size_t d);

// Gibbs over a new document with the topic-word counts frozen. Unknown
// tokens are dropped; a document with nothing left is rejected.
TopicDistribution fold_in(const LdaModel& m, const std::vector<std::string>& doc,
                          std::size_t sweeps, std::uint64_t seed);

// n best (token, probability) pairs of topic k under (n_{k,w}+beta)/(n_k+V*beta),
// ties broken by ascending token id.
std::vector<std::pair<std::string, double>> top_words(const LdaModel& m, std::size_t k,
                                                      std::size_t n);

// Collapsed joint log probability of assignments and words (monitoring only).
double log_joint(const LdaModel& m);

// Versioned JSON container; round trip is exact.
void save_lda(const LdaModel& m, const std::filesystem::path& path);
LdaModel load_lda(const std::filesystem::path& path);

}  // namespace empnet
