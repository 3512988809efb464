#include "empnet/lda.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "empnet/error.hpp"
#include "empnet/rng.hpp"
#include "json.hpp"

namespace empnet {

using nlohmann::json;

std::size_t Vocabulary::add(const std::string& token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const std::size_t id = tokens_.size();
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

std::optional<std::size_t> Vocabulary::id_of(const std::string& token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

const std::string& Vocabulary::token_of(std::size_t id) const {
  if (id >= tokens_.size()) {
    throw ValidationError("Vocabulary: id " + std::to_string(id) + " outside [0, " +
                          std::to_string(tokens_.size()) + ")");
  }
  return tokens_[id];
}

namespace {

// Draw from unnormalized weights by cumulative walk.
std::size_t sample_index(rng::Engine& g, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng::uniform01(g) * total;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0.0) return k;
  }
  return weights.size() - 1;
}

void run_sweep(LdaModel& m, rng::Engine& g, std::vector<double>& weights) {
  const std::size_t v_size = m.vocab.size();
  const double v_beta = static_cast<double>(v_size) * m.beta;
  for (std::size_t d = 0; d < m.corpus.size(); ++d) {
    for (std::size_t pos = 0; pos < m.corpus[d].size(); ++pos) {
      const std::uint32_t w = m.corpus[d][pos];
      const std::uint32_t old_k = m.assignments[d][pos];

      --m.doc_topic[d * m.topics + old_k];
      --m.topic_word[old_k * v_size + w];
      --m.topic_totals[old_k];

      for (std::size_t k = 0; k < m.topics; ++k) {
        const double dt = static_cast<double>(m.doc_topic[d * m.topics + k]) + m.alpha;
        const double tw = static_cast<double>(m.topic_word[k * v_size + w]) + m.beta;
        const double tt = static_cast<double>(m.topic_totals[k]) + v_beta;
        weights[k] = dt * tw / tt;
      }
      const auto new_k = static_cast<std::uint32_t>(sample_index(g, weights));

      m.assignments[d][pos] = new_k;
      ++m.doc_topic[d * m.topics + new_k];
      ++m.topic_word[new_k * v_size + w];
      ++m.topic_totals[new_k];
    }
  }
}

}  // namespace

LdaModel lda_fit(const std::vector<std::vector<std::string>>& docs, const LdaConfig& cfg,
                 std::uint64_t seed) {
  if (docs.empty()) throw ValidationError("lda_fit: empty corpus");
  if (cfg.topics < 1) throw ValidationError("lda_fit: topics must be >= 1");
  if (cfg.sweeps < 1) throw ValidationError("lda_fit: sweeps must be >= 1");
  if (!(cfg.alpha > 0.0) || !(cfg.beta > 0.0)) {
    throw ValidationError("lda_fit: alpha and beta must be positive");
  }

  LdaModel m;
  m.topics = cfg.topics;
  m.alpha = cfg.alpha;
  m.beta = cfg.beta;
  m.seed = seed;

  std::size_t total_tokens = 0;
  m.corpus.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (docs[d].empty()) {
      throw ValidationError("lda_fit: document " + std::to_string(d) + " is empty");
    }
    std::vector<std::uint32_t> ids;
    ids.reserve(docs[d].size());
    for (const std::string& tok : docs[d])
      ids.push_back(static_cast<std::uint32_t>(m.vocab.add(tok)));
    total_tokens += ids.size();
    m.corpus.push_back(std::move(ids));
  }
  if (cfg.topics > total_tokens) {
    m.warnings.push_back("topics (" + std::to_string(cfg.topics) + ") exceed total token count (" +
                         std::to_string(total_tokens) + "); most topics will stay empty");
  }

  const std::size_t v_size = m.vocab.size();
  m.topic_word.assign(m.topics * v_size, 0);
  m.topic_totals.assign(m.topics, 0);
  m.doc_topic.assign(m.corpus.size() * m.topics, 0);

  rng::Engine g = rng::make_engine(rng::mix(seed, 0xfda));
  m.assignments.resize(m.corpus.size());
  for (std::size_t d = 0; d < m.corpus.size(); ++d) {
    m.assignments[d].resize(m.corpus[d].size());
    for (std::size_t pos = 0; pos < m.corpus[d].size(); ++pos) {
      const auto k = static_cast<std::uint32_t>(rng::below(g, m.topics));
      m.assignments[d][pos] = k;
      ++m.doc_topic[d * m.topics + k];
      ++m.topic_word[k * v_size + m.corpus[d][pos]];
      ++m.topic_totals[k];
    }
  }

  std::vector<double> weights(m.topics);
  m.log_joint_history.reserve(cfg.sweeps);
  for (std::size_t sweep = 0; sweep < cfg.sweeps; ++sweep) {
    run_sweep(m, g, weights);
    m.log_joint_history.push_back(log_joint(m));
    if (cfg.check_counts_every_sweep) verify_counts(m);
  }
  return m;
}

void verify_counts(const LdaModel& m) {
  const std::size_t v_size = m.vocab.size();
  std::vector<std::int64_t> tw(m.topics * v_size, 0), tt(m.topics, 0),
      dt(m.corpus.size() * m.topics, 0);
  for (std::size_t d = 0; d < m.corpus.size(); ++d) {
    if (m.assignments[d].size() != m.corpus[d].size()) {
      throw ValidationError("lda: assignments and corpus disagree at doc " + std::to_string(d));
    }
    for (std::size_t pos = 0; pos < m.corpus[d].size(); ++pos) {
      const std::uint32_t k = m.assignments[d][pos];
      if (k >= m.topics) throw ValidationError("lda: assignment outside topic range");
      ++tw[k * v_size + m.corpus[d][pos]];
      ++tt[k];
      ++dt[d * m.topics + k];
    }
  }
  if (tw != m.topic_word || tt != m.topic_totals || dt != m.doc_topic) {
    throw ValidationError("lda: count matrices disagree with a recount of the assignments");
  }
}

TopicDistribution doc_topic_distribution(const LdaModel& m, std::size_t d) {
  if (d >= m.corpus.size()) {
    throw ValidationError("doc_topic_distribution: doc " + std::to_string(d) + " outside [0, " +
                          std::to_string(m.corpus.size()) + ")");
  }
  const double n_d = static_cast<double>(m.corpus[d].size());
  const double denom = n_d + static_cast<double>(m.topics) * m.alpha;
  Matrix p(1, m.topics);
  for (std::size_t k = 0; k < m.topics; ++k)
    p(0, k) = (static_cast<double>(m.doc_topic[d * m.topics + k]) + m.alpha) / denom;
  return p;
}

TopicDistribution fold_in(const LdaModel& m, const std::vector<std::string>& doc,
                          std::size_t sweeps, std::uint64_t seed) {
  if (sweeps < 1) throw ValidationError("fold_in: sweeps must be >= 1");
  std::vector<std::uint32_t> ids;
  ids.reserve(doc.size());
  for (const std::string& tok : doc)
    if (auto id = m.vocab.id_of(tok)) ids.push_back(static_cast<std::uint32_t>(*id));
  if (ids.empty()) {
    throw ValidationError("fold_in: document is empty after dropping unknown tokens");
  }

  const std::size_t v_size = m.vocab.size();
  const double v_beta = static_cast<double>(v_size) * m.beta;
  rng::Engine g = rng::make_engine(rng::mix(seed, 0xf01d));
  std::vector<std::uint32_t> z(ids.size());
  std::vector<std::int64_t> local(m.topics, 0);
  for (std::size_t pos = 0; pos < ids.size(); ++pos) {
    z[pos] = static_cast<std::uint32_t>(rng::below(g, m.topics));
    ++local[z[pos]];
  }

  std::vector<double> weights(m.topics);
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
      const std::uint32_t w = ids[pos];
      --local[z[pos]];
      for (std::size_t k = 0; k < m.topics; ++k) {
        // Topic-word statistics stay frozen at their fitted values.
        const double dt = static_cast<double>(local[k]) + m.alpha;
        const double tw = static_cast<double>(m.topic_word[k * v_size + w]) + m.beta;
        const double tt = static_cast<double>(m.topic_totals[k]) + v_beta;
        weights[k] = dt * tw / tt;
      }
      z[pos] = static_cast<std::uint32_t>(sample_index(g, weights));
      ++local[z[pos]];
    }
  }

  const double denom =
      static_cast<double>(ids.size()) + static_cast<double>(m.topics) * m.alpha;
  Matrix p(1, m.topics);
  for (std::size_t k = 0; k < m.topics; ++k)
    p(0, k) = (static_cast<double>(local[k]) + m.alpha) / denom;
  return p;
}

std::vector<std::pair<std::string, double>> top_words(const LdaModel& m, std::size_t k,
                                                      std::size_t n) {
  if (k >= m.topics) {
    throw ValidationError("top_words: topic " + std::to_string(k) + " outside [0, " +
                          std::to_string(m.topics) + ")");
  }
  const std::size_t v_size = m.vocab.size();
  const double denom =
      static_cast<double>(m.topic_totals[k]) + static_cast<double>(v_size) * m.beta;
  std::vector<std::size_t> order(v_size);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> prob(v_size);
  for (std::size_t w = 0; w < v_size; ++w)
    prob[w] = (static_cast<double>(m.topic_word[k * v_size + w]) + m.beta) / denom;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (prob[a] != prob[b]) return prob[a] > prob[b];
    return a < b;
  });
  std::vector<std::pair<std::string, double>> out;
  out.reserve(std::min(n, v_size));
  for (std::size_t i = 0; i < std::min(n, v_size); ++i)
    out.emplace_back(m.vocab.token_of(order[i]), prob[order[i]]);
  return out;
}

double log_joint(const LdaModel& m) {
  const auto v_size = static_cast<double>(m.vocab.size());
  double lp = 0.0;
  for (std::size_t k = 0; k < m.topics; ++k) {
    lp += std::lgamma(v_size * m.beta) - v_size * std::lgamma(m.beta);
    for (std::size_t w = 0; w < m.vocab.size(); ++w)
      lp += std::lgamma(static_cast<double>(m.topic_word[k * m.vocab.size() + w]) + m.beta);
    lp -= std::lgamma(static_cast<double>(m.topic_totals[k]) + v_size * m.beta);
  }
  const auto kd = static_cast<double>(m.topics);
  for (std::size_t d = 0; d < m.corpus.size(); ++d) {
    lp += std::lgamma(kd * m.alpha) - kd * std::lgamma(m.alpha);
    for (std::size_t k = 0; k < m.topics; ++k)
      lp += std::lgamma(static_cast<double>(m.doc_topic[d * m.topics + k]) + m.alpha);
    lp -= std::lgamma(static_cast<double>(m.corpus[d].size()) + kd * m.alpha);
  }
  return lp;
}

void save_lda(const LdaModel& m, const std::filesystem::path& path) {
  json j{{"format", "empnet-lda"},
         {"version", 1},
         {"topics", m.topics},
         {"alpha", m.alpha},
         {"beta", m.beta},
         {"seed", m.seed},
         {"vocab", m.vocab.tokens()},
         {"corpus", m.corpus},
         {"assignments", m.assignments},
         {"topic_word", m.topic_word},
         {"topic_totals", m.topic_totals},
         {"doc_topic", m.doc_topic},
         {"log_joint_history", m.log_joint_history},
         {"warnings", m.warnings}};
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write model file: " + path.string());
  out << j.dump() << "\n";
  if (!out) throw ValidationError("failed writing model file: " + path.string());
}

LdaModel load_lda(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("malformed model file");
  if (j.value("format", "") != "empnet-lda" || j.value("version", 0) != 1) {
    throw ValidationError("unrecognized model container");
  }
  LdaModel m;
  m.topics = j.at("topics").get<std::size_t>();
  m.alpha = j.at("alpha").get<double>();
  m.beta = j.at("beta").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& tok : j.at("vocab")) m.vocab.add(tok.get<std::string>());
  m.corpus = j.at("corpus").get<std::vector<std::vector<std::uint32_t>>>();
  m.assignments = j.at("assignments").get<std::vector<std::vector<std::uint32_t>>>();
  m.topic_word = j.at("topic_word").get<std::vector<std::int64_t>>();
  m.topic_totals = j.at("topic_totals").get<std::vector<std::int64_t>>();
  m.doc_topic = j.at("doc_topic").get<std::vector<std::int64_t>>();
  m.log_joint_history = j.at("log_joint_history").get<std::vector<double>>();
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (m.topic_word.size() != m.topics * m.vocab.size() || m.topic_totals.size() != m.topics ||
      m.doc_topic.size() != m.corpus.size() * m.topics) {
    throw ValidationError("model container has inconsistent count shapes");
  }
  verify_counts(m);
  return m;
}

}  // namespace empnet
