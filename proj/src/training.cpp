#include "empnet/training.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <type_traits>
#include <sstream>

#include "empnet/error.hpp"
#include "json.hpp"

namespace empnet {

namespace {

using nlohmann::json;

// Stream tags; every consumer of cfg.seed draws from its own substream.
constexpr std::uint64_t kLdaSeedTag = 0x1da;
constexpr std::uint64_t kShuffleTag = 0x50f1;
constexpr std::uint64_t kDropoutTag = 0xd09;

std::string params_image(const ModelParams& p) {
  std::ostringstream out(std::ios::binary);
  write_params(out, p);
  return std::move(out).str();
}

void load_params_image(const std::string& blob, ModelParams& p) {
  std::istringstream in(blob, std::ios::binary);
  read_params(in, p);
}

void check_datasets(const Dataset& train_ds, const Dataset& val_ds) {
  if (train_ds.samples.empty()) throw ValidationError("train: training set has no samples");
  if (val_ds.samples.empty()) throw ValidationError("train: validation set has no samples");
  auto check = [](const char* field, std::size_t a, std::size_t b) {
    if (a != b) {
      throw DimensionError(std::string("train: training ") + field + "=" + std::to_string(a) +
                           " but validation has " + std::to_string(b));
    }
  };
  check("d_t", train_ds.dims.d_t, val_ds.dims.d_t);
  check("d_a", train_ds.dims.d_a, val_ds.dims.d_a);
  check("d_v", train_ds.dims.d_v, val_ds.dims.d_v);
}

// The shared epoch loop; ck carries weights-as-blob, optimizer state, and
// best-checkpoint bookkeeping so resumed runs replay identically.
TrainRun run_loop(ModelParams& params, Checkpoint ck, const Dataset& train_ds,
                  const Dataset& val_ds, std::ostream* epoch_log) {
  const TrainConfig& cfg = ck.config;
  TrainRun run;
  run.config = cfg;

  const TopicTargets targets = prepare_targets(train_ds, cfg);
  std::vector<Parameter*> handles = params.all();
  const std::size_t n = train_ds.samples.size();

  for (std::uint64_t epoch = ck.epochs_done + 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t epoch_key = rng::mix(cfg.seed, epoch);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng::Engine shuffle_rng = rng::make_engine(rng::mix(epoch_key, kShuffleTag));
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[rng::below(shuffle_rng, i)]);
    }

    double sum_ce = 0.0, sum_kl = 0.0;
    std::size_t pos = 0, batch_index = 0;
    while (pos < n) {
      const std::size_t m = std::min<std::size_t>(cfg.batch_size, n - pos);
      params.zero_grads();
      for (std::size_t b = 0; b < m; ++b) {
        const std::size_t sample_pos = pos + b;
        const ConversationSample& s = train_ds.samples[order[sample_pos]];
        Forward f = forward(s, params, /*training_mode=*/true,
                            rng::mix(rng::mix(epoch_key, kDropoutTag), sample_pos));
        const std::array<int, 1> label{label_of(s.labels, cfg.label_target)};
        const Var ce = cross_entropy_node(f.tape, f.empathy, label);
        Var tot;
        double kl_val = 0.0;
        if (auto it = targets.by_id.find(s.id); it != targets.by_id.end()) {
          const Var kl = kl_node(f.tape, f.topics, it->second, cfg.kl_direction);
          tot = total_node(f.tape, ce, kl, cfg.weights);
          kl_val = f.tape.scalar(kl);
        } else {
          tot = f.tape.scale(ce, cfg.weights.w_s);
        }
        if (!std::isfinite(f.tape.scalar(tot))) {
          throw NumericError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " + std::to_string(batch_index));
        }
        f.tape.backward(tot);
        sum_ce += f.tape.scalar(ce);
        sum_kl += kl_val;
      }
      for (Parameter* q : handles) {
        for (double& gv : q->grad.data()) gv /= double(m);
      }
      optimizer_step(handles, cfg.learning_rate, ck.opt);
      pos += m;
      ++batch_index;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.l_s = sum_ce / double(n);
    rec.l_t = targets.by_id.empty() ? 0.0 : sum_kl / double(n);
    rec.total = cfg.weights.w_s * rec.l_s + cfg.weights.w_t * rec.l_t;
    const EvalReport val = evaluate(params, val_ds, cfg.label_target);
    rec.val_accuracy = val.accuracy;
    rec.val_weighted_f1 = val.weighted_f1;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    ck.epochs_done = epoch;
    ck.params_blob = params_image(params);
    if (rec.val_accuracy > ck.best_val_accuracy) {
      ck.best_val_accuracy = rec.val_accuracy;
      ck.best_epoch = epoch;
      ck.best_params_blob = ck.params_blob;
    }
    run.history.push_back(rec);
    if (epoch_log) {
      json line{{"epoch", rec.epoch},         {"l_s", rec.l_s},
                {"l_t", rec.l_t},             {"total", rec.total},
                {"val_accuracy", rec.val_accuracy},
                {"val_weighted_f1", rec.val_weighted_f1},
                {"seconds", rec.seconds}};
      *epoch_log << line.dump() << '\n';
    }
  }

  run.final_state = std::move(ck);
  return run;
}

// --- checkpoint binary plumbing -------------------------------------------

constexpr char kCkptMagic[8] = {'E', 'M', 'P', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kCkptVersion = 1;

template <class T>
void put_raw(std::ostream& out, const T& x) {
  out.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <class T>
T get_raw(std::istream& in) {
  T x{};
  in.read(reinterpret_cast<char*>(&x), sizeof(T));
  if (!in) throw ParseError("checkpoint: truncated", 0);
  return x;
}

void put_bytes(std::ostream& out, const std::string& s) {
  put_raw<std::uint64_t>(out, s.size());
  out.write(s.data(), std::streamsize(s.size()));
}

std::string get_bytes(std::istream& in) {
  const auto len = get_raw<std::uint64_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), std::streamsize(len));
  if (!in) throw ParseError("checkpoint: truncated", 0);
  return s;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put_raw<std::uint64_t>(out, m.rows());
  put_raw<std::uint64_t>(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data().data()),
            std::streamsize(m.size() * sizeof(double)));
}

Matrix get_matrix(std::istream& in) {
  const auto rows = get_raw<std::uint64_t>(in);
  const auto cols = get_raw<std::uint64_t>(in);
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data().data()), std::streamsize(m.size() * sizeof(double)));
  if (!in) throw ParseError("checkpoint: truncated", 0);
  return m;
}

}  // namespace

// --- name tables ------------------------------------------------------------

Optimizer parse_optimizer(const std::string& name) {
  if (name == "sgd") return Optimizer::kSgd;
  if (name == "adam") return Optimizer::kAdam;
  throw ValidationError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(Optimizer o) {
  return o == Optimizer::kSgd ? "sgd" : "adam";
}

KlDirection parse_kl_direction(const std::string& name) {
  if (name == "predicted-first") return KlDirection::kPredictedFirst;
  if (name == "target-first") return KlDirection::kTargetFirst;
  throw ValidationError("unknown kl direction '" + name +
                        "' (expected predicted-first or target-first)");
}

std::string to_string(KlDirection d) {
  return d == KlDirection::kPredictedFirst ? "predicted-first" : "target-first";
}

TopicHeadInput parse_topic_input(const std::string& name) {
  if (name == "projected-text") return TopicHeadInput::kProjectedText;
  if (name == "raw-text") return TopicHeadInput::kRawText;
  throw ValidationError("unknown topic head input '" + name +
                        "' (expected projected-text or raw-text)");
}

std::string to_string(TopicHeadInput t) {
  return t == TopicHeadInput::kProjectedText ? "projected-text" : "raw-text";
}

// --- config -----------------------------------------------------------------

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ValidationError("config: learning_rate must be positive and finite");
  }
  if (cfg.batch_size < 1) throw ValidationError("config: batch_size must be >= 1");
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) {
    throw ValidationError("config: dropout_rate must lie in [0, 1)");
  }
  if (cfg.topics < 1) throw ValidationError("config: topics must be >= 1");
  if (cfg.hidden < 1) throw ValidationError("config: hidden must be >= 1");
  if (!(cfg.weights.w_s >= 0.0) || !(cfg.weights.w_t >= 0.0) ||
      !std::isfinite(cfg.weights.w_s) || !std::isfinite(cfg.weights.w_t)) {
    throw ValidationError("config: loss weights must be non-negative and finite");
  }
  if (cfg.weights.w_s + cfg.weights.w_t <= 0.0) {
    throw ValidationError("config: at least one loss weight must be positive");
  }
  if (!(cfg.lda.alpha > 0.0) || !(cfg.lda.beta > 0.0)) {
    throw ValidationError("config: lda priors must be positive");
  }
  if (cfg.lda.sweeps < 1) throw ValidationError("config: lda sweeps must be >= 1");
  if (!cfg.use_text && !cfg.use_audio && !cfg.use_video) {
    throw ValidationError("config: at least one modality must stay enabled");
  }
}

namespace {

template <class T>
void take(const json& j, const char* key, T& slot) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if constexpr (std::is_unsigned_v<T>) {
    // nlohmann would wrap a negative integer into an unsigned slot silently.
    if (v.is_number_integer() && !v.is_number_unsigned()) {
      throw ValidationError(std::string("config: key '") + key + "' must be non-negative");
    }
  }
  try {
    v.get_to(slot);
  } catch (const json::exception&) {
    throw ValidationError(std::string("config: key '") + key + "' has the wrong type");
  }
}

void take_enum(const json& j, const char* key, const std::function<void(const std::string&)>& set) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) {
    throw ValidationError(std::string("config: key '") + key + "' must be a string");
  }
  set(j.at(key).get<std::string>());
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* scope) {
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) {
      throw ValidationError(std::string("config: unknown key '") + item.key() + "' in " + scope);
    }
  }
}

}  // namespace

TrainConfig parse_train_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
  }
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");

  static const std::set<std::string> known{
      "learning_rate", "batch_size", "epochs",       "dropout_rate", "topics",
      "hidden",        "weights",    "label_target", "optimizer",    "seed",
      "sdat_enabled",  "lda",        "kl_direction", "topic_input",  "use_text",
      "use_audio",     "use_video"};
  reject_unknown(j, known, "the top-level object");

  TrainConfig cfg;
  take(j, "learning_rate", cfg.learning_rate);
  take(j, "batch_size", cfg.batch_size);
  take(j, "epochs", cfg.epochs);
  take(j, "dropout_rate", cfg.dropout_rate);
  take(j, "topics", cfg.topics);
  take(j, "hidden", cfg.hidden);
  take(j, "seed", cfg.seed);
  take(j, "sdat_enabled", cfg.sdat_enabled);
  take(j, "use_text", cfg.use_text);
  take(j, "use_audio", cfg.use_audio);
  take(j, "use_video", cfg.use_video);
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    if (!w.is_object()) throw ValidationError("config: 'weights' must be an object");
    reject_unknown(w, {"w_s", "w_t"}, "'weights'");
    take(w, "w_s", cfg.weights.w_s);
    take(w, "w_t", cfg.weights.w_t);
  }
  if (j.contains("lda")) {
    const json& l = j.at("lda");
    if (!l.is_object()) throw ValidationError("config: 'lda' must be an object");
    reject_unknown(l, {"alpha", "beta", "sweeps"}, "'lda'");
    take(l, "alpha", cfg.lda.alpha);
    take(l, "beta", cfg.lda.beta);
    take(l, "sweeps", cfg.lda.sweeps);
  }
  take_enum(j, "label_target", [&](const std::string& s) { cfg.label_target = parse_label_target(s); });
  take_enum(j, "optimizer", [&](const std::string& s) { cfg.optimizer = parse_optimizer(s); });
  take_enum(j, "kl_direction", [&](const std::string& s) { cfg.kl_direction = parse_kl_direction(s); });
  take_enum(j, "topic_input", [&](const std::string& s) { cfg.topic_input = parse_topic_input(s); });

  validate(cfg);
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_train_config(buf.str());
}

std::string to_json(const TrainConfig& cfg) {
  json j{{"learning_rate", cfg.learning_rate},
         {"batch_size", cfg.batch_size},
         {"epochs", cfg.epochs},
         {"dropout_rate", cfg.dropout_rate},
         {"topics", cfg.topics},
         {"hidden", cfg.hidden},
         {"weights", json{{"w_s", cfg.weights.w_s}, {"w_t", cfg.weights.w_t}}},
         {"label_target", to_string(cfg.label_target)},
         {"optimizer", to_string(cfg.optimizer)},
         {"seed", cfg.seed},
         {"sdat_enabled", cfg.sdat_enabled},
         {"lda", json{{"alpha", cfg.lda.alpha}, {"beta", cfg.lda.beta}, {"sweeps", cfg.lda.sweeps}}},
         {"kl_direction", to_string(cfg.kl_direction)},
         {"topic_input", to_string(cfg.topic_input)},
         {"use_text", cfg.use_text},
         {"use_audio", cfg.use_audio},
         {"use_video", cfg.use_video}};
  return j.dump(2);
}

NetConfig net_config(const TrainConfig& cfg, const Dims& dims) {
  NetConfig nc;
  nc.dims = dims;
  nc.hidden = cfg.hidden;
  nc.topics = cfg.topics;
  nc.dropout_rate = cfg.dropout_rate;
  nc.topic_input = cfg.topic_input;
  nc.use_text = cfg.use_text;
  nc.use_audio = cfg.use_audio;
  nc.use_video = cfg.use_video;
  return nc;
}

// --- optimizer ----------------------------------------------------------------

void optimizer_step(std::span<Parameter* const> params, double lr, OptimizerState& state) {
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw ValidationError("optimizer_step: learning rate must be positive and finite");
  }
  for (const Parameter* p : params) {
    for (double gv : p->grad.data()) {
      if (!std::isfinite(gv)) {
        throw NumericError("optimizer_step: non-finite gradient in " + p->name);
      }
    }
  }
  ++state.steps;
  if (state.kind == Optimizer::kSgd) {
    for (Parameter* p : params) {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        p->value.data()[i] -= lr * p->grad.data()[i];
      }
    }
    return;
  }

  if (state.m.empty()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.rows(), p->value.cols());
      state.v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ValidationError("optimizer_step: state does not match the parameter list");
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const double bc1 = 1.0 - std::pow(kBeta1, double(state.steps));
  const double bc2 = 1.0 - std::pow(kBeta2, double(state.steps));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
      throw ValidationError("optimizer_step: state shape mismatch for " + p.name);
    }
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data()[k];
      double& mk = m.data()[k];
      double& vk = v.data()[k];
      mk = kBeta1 * mk + (1.0 - kBeta1) * g;
      vk = kBeta2 * vk + (1.0 - kBeta2) * g * g;
      p.value.data()[k] -= lr * (mk / bc1) / (std::sqrt(vk / bc2) + kEps);
    }
  }
}

// --- topic targets ------------------------------------------------------------

TopicTargets prepare_targets(const Dataset& train, const TrainConfig& cfg) {
  TopicTargets out;
  if (!cfg.sdat_enabled) return out;
  if (train.samples.empty()) {
    throw ValidationError("prepare_targets: training set has no samples");
  }

  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(train.samples.size());
  std::string missing;
  for (const ConversationSample& s : train.samples) {
    const auto& toks = privileged_tokens(s);
    if (!toks.has_value() || toks->empty()) {
      missing += missing.empty() ? s.id : ", " + s.id;
    } else {
      corpus.push_back(*toks);
    }
  }
  if (!missing.empty()) {
    throw ValidationError(
        "supervision is enabled but these samples have no document: " + missing);
  }

  LdaConfig lc;
  lc.topics = cfg.topics;
  lc.alpha = cfg.lda.alpha;
  lc.beta = cfg.lda.beta;
  lc.sweeps = cfg.lda.sweeps;
  LdaModel model = lda_fit(corpus, lc, rng::mix(cfg.seed, kLdaSeedTag));
  for (std::size_t d = 0; d < train.samples.size(); ++d) {
    out.by_id.emplace(train.samples[d].id, doc_topic_distribution(model, d));
  }
  out.model = std::move(model);
  return out;
}

// --- training loop --------------------------------------------------------------

TrainRun train(const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& cfg,
               std::ostream* epoch_log) {
  validate(cfg);
  check_datasets(train_ds, val_ds);

  ModelParams params(net_config(cfg, train_ds.dims), cfg.seed);
  Checkpoint ck;
  ck.config = cfg;
  ck.dims = train_ds.dims;
  ck.opt.kind = cfg.optimizer;
  ck.params_blob = params_image(params);
  ck.best_params_blob = ck.params_blob;
  return run_loop(params, std::move(ck), train_ds, val_ds, epoch_log);
}

TrainRun resume(const Checkpoint& ck, const Dataset& train_ds, const Dataset& val_ds,
                std::ostream* epoch_log) {
  validate(ck.config);
  check_datasets(train_ds, val_ds);
  if (!(train_ds.dims == ck.dims)) {
    throw DimensionError("resume: dataset dims do not match the checkpoint");
  }
  ModelParams params = restore_params(ck);
  return run_loop(params, ck, train_ds, val_ds, epoch_log);
}

GradCheckReport gradient_probe(const TrainConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  SynthConfig sc;
  sc.task = SynthTask::kUnimodalLinear;
  sc.n_samples = 1;
  sc.n_t = 3;
  sc.n_a = 2;
  sc.n_v = 2;
  sc.dims = {4, 3, 3};
  const ConversationSample s = synth_generate(sc, seed).samples[0];

  ModelParams params(net_config(cfg, sc.dims), seed);
  rng::Engine g = rng::make_engine(rng::mix(seed, 0x6dc));
  Matrix target(1, cfg.topics);
  double total = 0.0;
  for (double& v : target.data()) {
    v = 0.05 + rng::uniform01(g);
    total += v;
  }
  for (double& v : target.data()) v /= total;
  const std::array<int, 1> labels{label_of(s.labels, cfg.label_target)};

  auto loss_of = [&](Forward& f) {
    Var ce = cross_entropy_node(f.tape, f.empathy, labels);
    Var kl = kl_node(f.tape, f.topics, target, cfg.kl_direction);
    return total_node(f.tape, ce, kl, cfg.weights);
  };
  Forward f = forward(s, params, true, seed);
  f.tape.backward(loss_of(f));
  auto fn = [&] {
    Forward f2 = forward(s, params, true, seed);
    return f2.tape.scalar(loss_of(f2));
  };
  const auto all = params.all();
  return finite_diff_check(fn, all, 1e-5);
}

GridSearchResult grid_search_topics(const Dataset& train_ds, const Dataset& val_ds,
                                    const TrainConfig& base,
                                    std::vector<std::size_t> candidates) {
  if (candidates.empty()) {
    throw ValidationError("grid_search_topics: candidate list is empty");
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  GridSearchResult out;
  double best = -std::numeric_limits<double>::infinity();
  for (const std::size_t k : candidates) {
    TrainConfig cfg = base;
    cfg.topics = k;
    const TrainRun run = train(train_ds, val_ds, cfg);
    const double acc = run.final_state.best_val_accuracy;
    out.accuracy_by_k.emplace_back(k, acc);
    if (acc > best) {  // strict: ties keep the smaller candidate
      best = acc;
      out.best_k = k;
    }
  }
  return out;
}

double mean_topic_kl(ModelParams& p, const Dataset& ds, const TopicTargets& targets,
                     KlDirection direction) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const ConversationSample& s : ds.samples) {
    const auto it = targets.by_id.find(s.id);
    if (it == targets.by_id.end()) continue;
    Forward f = forward(s, p, /*training_mode=*/false, /*dropout_seed=*/0);
    sum += kl_loss(f.tape.value(f.topics), it->second, direction);
    ++n;
  }
  if (n == 0) throw ValidationError("mean_topic_kl: no samples carry a topic target");
  return sum / double(n);
}

// --- checkpoints -----------------------------------------------------------------

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open checkpoint file for writing: " + path.string());
  out.write(kCkptMagic, sizeof(kCkptMagic));
  put_raw<std::uint32_t>(out, kCkptVersion);
  put_bytes(out, to_json(ck.config));
  put_raw<std::uint64_t>(out, ck.dims.d_t);
  put_raw<std::uint64_t>(out, ck.dims.d_a);
  put_raw<std::uint64_t>(out, ck.dims.d_v);
  put_raw<std::uint64_t>(out, ck.epochs_done);
  put_raw<std::uint64_t>(out, ck.best_epoch);
  put_raw<double>(out, ck.best_val_accuracy);
  put_raw<std::uint8_t>(out, ck.opt.kind == Optimizer::kSgd ? 0 : 1);
  put_raw<std::int64_t>(out, ck.opt.steps);
  put_raw<std::uint64_t>(out, ck.opt.m.size());
  for (std::size_t i = 0; i < ck.opt.m.size(); ++i) {
    put_matrix(out, ck.opt.m[i]);
    put_matrix(out, ck.opt.v[i]);
  }
  put_bytes(out, ck.params_blob);
  put_bytes(out, ck.best_params_blob);
  if (!out) throw ValidationError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint file: " + path.string());
  char magic[sizeof(kCkptMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
    throw ParseError("checkpoint: bad magic", 0);
  }
  if (get_raw<std::uint32_t>(in) != kCkptVersion) {
    throw ParseError("checkpoint: unsupported version", 0);
  }
  Checkpoint ck;
  ck.config = parse_train_config(get_bytes(in));
  ck.dims.d_t = get_raw<std::uint64_t>(in);
  ck.dims.d_a = get_raw<std::uint64_t>(in);
  ck.dims.d_v = get_raw<std::uint64_t>(in);
  ck.epochs_done = get_raw<std::uint64_t>(in);
  ck.best_epoch = get_raw<std::uint64_t>(in);
  ck.best_val_accuracy = get_raw<double>(in);
  ck.opt.kind = get_raw<std::uint8_t>(in) == 0 ? Optimizer::kSgd : Optimizer::kAdam;
  ck.opt.steps = get_raw<std::int64_t>(in);
  const auto n_slots = get_raw<std::uint64_t>(in);
  ck.opt.m.reserve(n_slots);
  ck.opt.v.reserve(n_slots);
  for (std::uint64_t i = 0; i < n_slots; ++i) {
    ck.opt.m.push_back(get_matrix(in));
    ck.opt.v.push_back(get_matrix(in));
  }
  ck.params_blob = get_bytes(in);
  ck.best_params_blob = get_bytes(in);
  return ck;
}

ModelParams restore_params(const Checkpoint& ck) {
  ModelParams p(net_config(ck.config, ck.dims), ck.config.seed);
  load_params_image(ck.params_blob, p);
  return p;
}

ModelParams restore_best(const Checkpoint& ck) {
  ModelParams p(net_config(ck.config, ck.dims), ck.config.seed);
  load_params_image(ck.best_params_blob, p);
  return p;
}

}  // namespace empnet
