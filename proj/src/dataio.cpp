#include "empnet/dataio.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>

#include "empnet/error.hpp"
#include "empnet/rng.hpp"
#include "json.hpp"

namespace empnet {

using nlohmann::json;

namespace {

std::atomic<std::uint64_t> g_privileged_reads{0};

Matrix parse_matrix(const json& j, const char* field, std::size_t line) {
  if (!j.is_array() || j.empty()) {
    throw ParseError(std::string(field) + ": expected a non-empty array of rows", line);
  }
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<double> data;
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.empty()) {
      throw ParseError(std::string(field) + ": row " + std::to_string(r) +
                           " is not a non-empty array",
                       line);
    }
    if (r == 0) {
      cols = row.size();
      data.reserve(rows * cols);
    } else if (row.size() != cols) {
      throw ParseError(std::string(field) + ": ragged rows (" + std::to_string(row.size()) +
                           " vs " + std::to_string(cols) + ")",
                       line);
    }
    for (const json& v : row) {
      if (!v.is_number()) {
        throw ParseError(std::string(field) + ": non-numeric entry", line);
      }
      data.push_back(v.get<double>());
    }
  }
  return Matrix(rows, cols, std::move(data));
}

int parse_label(const json& obj, const char* key, std::size_t line) {
  if (!obj.contains(key) || !obj[key].is_number_integer()) {
    throw ParseError(std::string("labels.") + key + ": expected an integer", line);
  }
  const int v = obj[key].get<int>();
  if (v < 0 || v > 2) {
    throw ValidationError(std::string("labels.") + key + " = " + std::to_string(v) +
                          " outside {0,1,2} at line " + std::to_string(line));
  }
  return v;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& order, std::size_t first,
               std::size_t last) {
  Dataset out;
  out.schema_version = ds.schema_version;
  out.dims = ds.dims;
  out.samples.reserve(last - first);
  for (std::size_t i = first; i < last; ++i) out.samples.push_back(ds.samples[order[i]]);
  return out;
}

Matrix noise_matrix(rng::Engine& g, std::size_t rows, std::size_t cols, double sd) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = sd * rng::normal(g);
  return m;
}

std::string topic_token(std::size_t topic, std::size_t word) {
  return "t" + std::to_string(topic) + "_w" + std::to_string(word);
}

int argmax_prefix(const Matrix& pooled, std::size_t k) {
  int best = 0;
  for (std::size_t j = 1; j < k; ++j)
    if (pooled(0, j) > pooled(0, best)) best = static_cast<int>(j);
  return best;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path.string());

  std::string text;
  std::size_t line_no = 0;

  auto next_json = [&](std::string& buf) -> bool {
    while (std::getline(in, buf)) {
      ++line_no;
      if (buf.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_json(text)) throw ParseError("missing header line", 1);
  json header = json::parse(text, nullptr, false);
  if (header.is_discarded() || !header.is_object()) throw ParseError("malformed header", line_no);
  if (!header.contains("schema_version") || !header["schema_version"].is_number_integer()) {
    throw ParseError("header: missing integer schema_version", line_no);
  }
  Dataset ds;
  ds.schema_version = header["schema_version"].get<int>();
  if (ds.schema_version != 1) {
    throw ValidationError("unsupported schema_version " + std::to_string(ds.schema_version));
  }
  if (!header.contains("dims") || !header["dims"].is_object()) {
    throw ParseError("header: missing dims object", line_no);
  }
  for (const char* key : {"d_t", "d_a", "d_v"}) {
    const json& d = header["dims"];
    if (!d.contains(key) || !d[key].is_number_integer() || d[key].get<int>() < 1) {
      throw ParseError(std::string("header: dims.") + key + " must be a positive integer",
                       line_no);
    }
  }
  ds.dims = {header["dims"]["d_t"].get<std::size_t>(), header["dims"]["d_a"].get<std::size_t>(),
             header["dims"]["d_v"].get<std::size_t>()};

  std::vector<std::string> seen_ids;
  while (next_json(text)) {
    json rec = json::parse(text, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) throw ParseError("malformed record", line_no);

    ConversationSample s;
    if (!rec.contains("id") || !rec["id"].is_string()) {
      throw ParseError("id: expected a string", line_no);
    }
    s.id = rec["id"].get<std::string>();

    s.text = parse_matrix(rec.value("text", json()), "text", line_no);
    s.audio = parse_matrix(rec.value("audio", json()), "audio", line_no);
    s.video = parse_matrix(rec.value("video", json()), "video", line_no);
    if (s.text.cols() != ds.dims.d_t || s.audio.cols() != ds.dims.d_a ||
        s.video.cols() != ds.dims.d_v) {
      throw ValidationError("sample '" + s.id + "' dims (" + std::to_string(s.text.cols()) + "," +
                            std::to_string(s.audio.cols()) + "," + std::to_string(s.video.cols()) +
                            ") disagree with header (" + std::to_string(ds.dims.d_t) + "," +
                            std::to_string(ds.dims.d_a) + "," + std::to_string(ds.dims.d_v) +
                            ") at line " + std::to_string(line_no));
    }
    if (!s.text.all_finite() || !s.audio.all_finite() || !s.video.all_finite()) {
      throw ValidationError("sample '" + s.id + "' has non-finite features at line " +
                            std::to_string(line_no));
    }

    if (!rec.contains("labels") || !rec["labels"].is_object()) {
      throw ParseError("labels: expected an object", line_no);
    }
    s.labels.ee = parse_label(rec["labels"], "ee", line_no);
    s.labels.er = parse_label(rec["labels"], "er", line_no);
    s.labels.cr = parse_label(rec["labels"], "cr", line_no);

    if (rec.contains("doc_tokens") && !rec["doc_tokens"].is_null()) {
      if (!rec["doc_tokens"].is_array()) {
        throw ParseError("doc_tokens: expected an array of strings or null", line_no);
      }
      std::vector<std::string> toks;
      toks.reserve(rec["doc_tokens"].size());
      for (const json& t : rec["doc_tokens"]) {
        if (!t.is_string()) throw ParseError("doc_tokens: non-string token", line_no);
        toks.push_back(t.get<std::string>());
      }
      s.doc_tokens = std::move(toks);
    }

    seen_ids.push_back(s.id);
    ds.samples.push_back(std::move(s));
  }

  if (ds.samples.empty()) throw ValidationError("dataset has a header but no records");

  std::vector<std::string> sorted = seen_ids;
  std::sort(sorted.begin(), sorted.end());
  if (auto it = std::adjacent_find(sorted.begin(), sorted.end()); it != sorted.end()) {
    throw ValidationError("duplicate sample id '" + *it + "'");
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write dataset file: " + path.string());
  json header{{"schema_version", ds.schema_version},
              {"dims", {{"d_t", ds.dims.d_t}, {"d_a", ds.dims.d_a}, {"d_v", ds.dims.d_v}}}};
  out << header.dump() << "\n";
  for (const ConversationSample& s : ds.samples) {
    json rec{{"id", s.id},
             {"text", matrix_to_json(s.text)},
             {"audio", matrix_to_json(s.audio)},
             {"video", matrix_to_json(s.video)},
             {"labels", {{"ee", s.labels.ee}, {"er", s.labels.er}, {"cr", s.labels.cr}}}};
    rec["doc_tokens"] = s.doc_tokens ? json(*s.doc_tokens) : json(nullptr);
    out << rec.dump() << "\n";
  }
  if (!out) throw ValidationError("failed writing dataset file: " + path.string());
}

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
  if (ds.samples.empty()) throw ValidationError("split: empty dataset");
  const double sum = spec.ratios[0] + spec.ratios[1] + spec.ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split: ratios sum to " + std::to_string(sum) + ", expected 1");
  }
  for (double r : spec.ratios)
    if (r < 0.0) throw ValidationError("split: negative ratio");

  const std::size_t n = ds.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng::Engine g = rng::make_engine(spec.seed);
  for (std::size_t i = n; i-- > 1;) {
    const std::size_t j = rng::below(g, i + 1);
    std::swap(order[i], order[j]);
  }

  // The +1e-9 nudge keeps boundaries like (0.7 + 0.1) * 10 from landing just
  // below the intended integer; it mirrors the ratio-sum tolerance.
  const auto a =
      static_cast<std::size_t>(std::floor(spec.ratios[0] * static_cast<double>(n) + 1e-9));
  const auto b = static_cast<std::size_t>(
      std::floor((spec.ratios[0] + spec.ratios[1]) * static_cast<double>(n) + 1e-9));
  return {subset(ds, order, 0, a), subset(ds, order, a, b), subset(ds, order, b, n)};
}

SynthTask parse_synth_task(const std::string& name) {
  if (name == "unimodal-linear") return SynthTask::kUnimodalLinear;
  if (name == "cross-modal-parity") return SynthTask::kCrossModalParity;
  if (name == "topic-correlated") return SynthTask::kTopicCorrelated;
  throw ValidationError("unknown synthetic task '" + name + "'");
}

std::string to_string(SynthTask task) {
  switch (task) {
    case SynthTask::kUnimodalLinear:
      return "unimodal-linear";
    case SynthTask::kCrossModalParity:
      return "cross-modal-parity";
    case SynthTask::kTopicCorrelated:
      return "topic-correlated";
  }
  throw ValidationError("unknown synthetic task value");
}

int derive_label(const ConversationSample& s, SynthTask task, const SynthConfig& cfg) {
  switch (task) {
    case SynthTask::kUnimodalLinear:
      return argmax_prefix(mean_rows(s.text), 3);
    case SynthTask::kCrossModalParity: {
      const bool sa = mean_rows(s.audio)(0, 0) > 0.0;
      const bool sv = mean_rows(s.video)(0, 0) > 0.0;
      return (sa != sv) ? 1 : 0;
    }
    case SynthTask::kTopicCorrelated: {
      if (!s.doc_tokens) throw ValidationError("topic-correlated sample without doc_tokens");
      std::vector<std::size_t> counts(cfg.n_topics, 0);
      for (const std::string& tok : *s.doc_tokens) {
        for (std::size_t k = 0; k < cfg.n_topics; ++k) {
          if (tok.rfind("t" + std::to_string(k) + "_", 0) == 0) {
            ++counts[k];
            break;
          }
        }
      }
      std::size_t best = 0;
      for (std::size_t k = 1; k < cfg.n_topics; ++k)
        if (counts[k] > counts[best]) best = k;
      return static_cast<int>(best % 3);
    }
  }
  throw ValidationError("unknown synthetic task value");
}

Dataset synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.n_samples == 0) throw ValidationError("synth: n_samples must be positive");
  if (cfg.n_t == 0 || cfg.n_a == 0 || cfg.n_v == 0) {
    throw ValidationError("synth: sequence lengths must be positive");
  }
  if (cfg.dims.d_t == 0 || cfg.dims.d_a == 0 || cfg.dims.d_v == 0) {
    throw ValidationError("synth: feature dims must be positive");
  }
  if (cfg.task == SynthTask::kUnimodalLinear && cfg.dims.d_t < 3) {
    throw ValidationError("synth: unimodal-linear needs d_t >= 3");
  }
  if (cfg.task == SynthTask::kTopicCorrelated) {
    if (cfg.n_topics < 2) throw ValidationError("synth: topic-correlated needs >= 2 topics");
    if (cfg.dims.d_t < cfg.n_topics) {
      throw ValidationError("synth: topic-correlated needs d_t >= n_topics");
    }
    if (cfg.vocab_per_topic == 0 || cfg.doc_len == 0) {
      throw ValidationError("synth: vocab_per_topic and doc_len must be positive");
    }
  }

  Dataset ds;
  ds.dims = cfg.dims;
  ds.samples.reserve(cfg.n_samples);
  rng::Engine g = rng::make_engine(rng::mix(seed, static_cast<std::uint64_t>(cfg.task)));

  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    ConversationSample s;
    s.id = "synth-" + std::to_string(i);
    s.text = noise_matrix(g, cfg.n_t, cfg.dims.d_t, cfg.noise);
    s.audio = noise_matrix(g, cfg.n_a, cfg.dims.d_a, cfg.noise);
    s.video = noise_matrix(g, cfg.n_v, cfg.dims.d_v, cfg.noise);

    switch (cfg.task) {
      case SynthTask::kUnimodalLinear: {
        // Plant a bump on one of the first three text columns; the stored
        // label is then re-derived from the realized (noisy) features.
        const std::size_t c = rng::below(g, 3);
        for (std::size_t r = 0; r < cfg.n_t; ++r) s.text(r, c) += 1.5;
        break;
      }
      case SynthTask::kCrossModalParity: {
        const double sa = rng::below(g, 2) ? 1.0 : -1.0;
        const double sv = rng::below(g, 2) ? 1.0 : -1.0;
        for (std::size_t r = 0; r < cfg.n_a; ++r) s.audio(r, 0) += sa;
        for (std::size_t r = 0; r < cfg.n_v; ++r) s.video(r, 0) += sv;
        break;
      }
      case SynthTask::kTopicCorrelated: {
        const std::size_t dominant = rng::below(g, cfg.n_topics);
        std::vector<std::string> toks;
        toks.reserve(cfg.doc_len);
        for (std::size_t w = 0; w < cfg.doc_len; ++w) {
          // 80% mass on the dominant topic, the rest spread uniformly.
          std::size_t topic = dominant;
          if (rng::uniform01(g) >= 0.8) topic = rng::below(g, cfg.n_topics);
          toks.push_back(topic_token(topic, rng::below(g, cfg.vocab_per_topic)));
        }
        s.doc_tokens = std::move(toks);
        // Text carries the topic signal so both heads have something to learn.
        for (std::size_t r = 0; r < cfg.n_t; ++r) s.text(r, dominant) += 1.5;
        break;
      }
    }

    const int label = derive_label(s, cfg.task, cfg);
    s.labels = {label, label, label};
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

const std::optional<std::vector<std::string>>& privileged_tokens(const ConversationSample& s) {
  g_privileged_reads.fetch_add(1, std::memory_order_relaxed);
  return s.doc_tokens;
}

std::uint64_t privileged_access_count() {
  return g_privileged_reads.load(std::memory_order_relaxed);
}

void reset_privileged_access_count() { g_privileged_reads.store(0, std::memory_order_relaxed); }

}  // namespace empnet
