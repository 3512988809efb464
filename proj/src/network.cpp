#include "empnet/network.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "empnet/error.hpp"

namespace empnet {

std::string to_string(Modality m) {
  switch (m) {
    case Modality::kText:
      return "text";
    case Modality::kAudio:
      return "audio";
    case Modality::kVideo:
      return "video";
  }
  throw ValidationError("unknown modality value");
}

ModalityPlan ModalityPlan::from(const NetConfig& cfg) {
  if (!cfg.use_text && !cfg.use_audio && !cfg.use_video) {
    throw ValidationError("at least one modality must be enabled");
  }
  ModalityPlan plan;
  plan.anchor = cfg.use_text    ? Modality::kText
                : cfg.use_audio ? Modality::kAudio
                                : Modality::kVideo;
  if (cfg.use_video && plan.anchor != Modality::kVideo) plan.partners.push_back(Modality::kVideo);
  if (cfg.use_audio && plan.anchor != Modality::kAudio) plan.partners.push_back(Modality::kAudio);
  return plan;
}

namespace {

std::size_t modality_width(const Dims& dims, Modality m) {
  switch (m) {
    case Modality::kText:
      return dims.d_t;
    case Modality::kAudio:
      return dims.d_a;
    case Modality::kVideo:
      return dims.d_v;
  }
  throw ValidationError("unknown modality value");
}

const Matrix& modality_features(const ConversationSample& s, Modality m) {
  switch (m) {
    case Modality::kText:
      return s.text;
    case Modality::kAudio:
      return s.audio;
    case Modality::kVideo:
      return s.video;
  }
  throw ValidationError("unknown modality value");
}

// Rethrows dimension failures with the pipeline stage prepended.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const DimensionError& e) {
    throw DimensionError(name + ": " + e.what());
  }
}

}  // namespace

ModelParams::ModelParams(const NetConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), plan_(ModalityPlan::from(cfg)) {
  if (cfg.hidden < 1) throw ValidationError("hidden size must be >= 1");
  if (cfg.topics < 1) throw ValidationError("topic count must be >= 1");
  if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
    throw ValidationError("dropout rate must lie in [0, 1)");
  }
  const std::size_t d_anchor = modality_width(cfg.dims, plan_.anchor);
  if (d_anchor == 0) throw ValidationError("anchor feature width must be positive");

  d_in_ = d_anchor;
  for (Modality m : plan_.partners) {
    const std::size_t d_m = modality_width(cfg.dims, m);
    if (d_m == 0) throw ValidationError(to_string(m) + " feature width must be positive");
    d_in_ += 2 * d_m;
  }
  d_pool_ = d_anchor;
  if (cfg.topic_input == TopicHeadInput::kProjectedText && !plan_.partners.empty()) {
    d_pool_ = modality_width(cfg.dims, plan_.partners.front());
  }

  rng::Engine g = rng::make_engine(rng::mix(seed, 0x9a7a));
  for (Modality m : plan_.partners) {
    const std::size_t d_m = modality_width(cfg.dims, m);
    add(g, "proj_" + to_string(m) + ".w", d_anchor, d_m, false);
    add(g, "proj_" + to_string(m) + ".b", 1, d_m, true);
  }
  for (const char* gate : {"i", "f", "o", "c"}) {
    add(g, std::string("lstm.w_") + gate, d_in_, cfg.hidden, false);
    add(g, std::string("lstm.u_") + gate, cfg.hidden, cfg.hidden, false);
    add(g, std::string("lstm.b_") + gate, 1, cfg.hidden, true);
  }
  add(g, "empathy.w", cfg.hidden, 3, false);
  add(g, "empathy.b", 1, 3, true);
  add(g, "topics.w", d_pool_, cfg.topics, false);
  add(g, "topics.b", 1, cfg.topics, true);
}

Parameter& ModelParams::add(rng::Engine& g, std::string name, std::size_t rows, std::size_t cols,
                            bool zero_init) {
  if (index_.contains(name)) throw ValidationError("duplicate parameter name " + name);
  Matrix value(rows, cols);
  if (!zero_init) {
    const double s = 1.0 / std::sqrt(static_cast<double>(rows));
    for (double& v : value.data()) v = rng::uniform(g, -s, s);
  }
  store_.emplace_back(name, std::move(value));
  Parameter& p = store_.back();
  index_.emplace(std::move(name), &p);
  return p;
}

Parameter& ModelParams::at(const std::string& name) {
  if (auto it = index_.find(name); it != index_.end()) return *it->second;
  throw ValidationError("unknown parameter " + name);
}

const Parameter& ModelParams::at(const std::string& name) const {
  if (auto it = index_.find(name); it != index_.end()) return *it->second;
  throw ValidationError("unknown parameter " + name);
}

std::vector<Parameter*> ModelParams::all() {
  std::vector<Parameter*> out;
  out.reserve(store_.size());
  for (Parameter& p : store_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ModelParams::all() const {
  std::vector<const Parameter*> out;
  out.reserve(store_.size());
  for (const Parameter& p : store_) out.push_back(&p);
  return out;
}

void ModelParams::zero_grads() {
  for (Parameter& p : store_) p.zero_grad();
}

Var project_text_node(Tape& t, Var x, Var w, Var b) { return t.tanh(t.affine(x, w, b)); }

Matrix project_text(const Matrix& x, const Matrix& w, const Matrix& b) {
  Tape t;
  return t.value(project_text_node(t, t.input(x), t.input(w), t.input(b)));
}

CrossModalVars cross_modal_combine_node(Tape& t, Var anchor_proj, Var partner) {
  CrossModalVars v;
  v.partner_to_anchor = t.row_softmax(t.matmul(partner, t.transpose(anchor_proj)));
  v.anchor_to_partner = t.row_softmax(t.matmul(anchor_proj, t.transpose(partner)));
  v.partner_context = t.matmul(v.partner_to_anchor, anchor_proj);
  std::vector<Var> parts{partner, v.partner_context};
  v.fused = t.matmul(v.anchor_to_partner, t.concat_cols(parts));
  return v;
}

CrossModalParts cross_modal_combine(const Matrix& anchor_proj, const Matrix& partner) {
  Tape t;
  CrossModalVars v = cross_modal_combine_node(t, t.input(anchor_proj), t.input(partner));
  return {t.value(v.partner_to_anchor), t.value(v.anchor_to_partner), t.value(v.partner_context),
          t.value(v.fused)};
}

Var aggregate_node(Tape& t, std::span<const Var> parts, ModelParams& p) {
  if (parts.empty()) throw ValidationError("aggregate: no inputs");
  Var steps = parts.size() == 1 ? parts[0] : t.concat_cols(parts);
  // Copy the shape now: value() references die when the tape grows.
  const std::size_t n_steps = t.value(steps).rows();
  const std::size_t width = t.value(steps).cols();
  if (width != p.lstm_input_width()) {
    throw DimensionError("aggregate: got width " + std::to_string(width) + ", expected " +
                         std::to_string(p.lstm_input_width()));
  }

  const std::size_t h = p.config().hidden;
  Var w_i = t.param(p.at("lstm.w_i")), u_i = t.param(p.at("lstm.u_i")),
      b_i = t.param(p.at("lstm.b_i"));
  Var w_f = t.param(p.at("lstm.w_f")), u_f = t.param(p.at("lstm.u_f")),
      b_f = t.param(p.at("lstm.b_f"));
  Var w_o = t.param(p.at("lstm.w_o")), u_o = t.param(p.at("lstm.u_o")),
      b_o = t.param(p.at("lstm.b_o"));
  Var w_c = t.param(p.at("lstm.w_c")), u_c = t.param(p.at("lstm.u_c")),
      b_c = t.param(p.at("lstm.b_c"));

  Var h_prev = t.input(Matrix(1, h));
  Var c_prev = t.input(Matrix(1, h));
  for (std::size_t s = 0; s < n_steps; ++s) {
    Var x_s = t.slice_rows(steps, s, 1);
    auto gate = [&](Var w, Var u, Var b) { return t.add(t.affine(x_s, w, b), t.matmul(h_prev, u)); };
    Var i = t.sigmoid(gate(w_i, u_i, b_i));
    Var f = t.sigmoid(gate(w_f, u_f, b_f));
    Var o = t.sigmoid(gate(w_o, u_o, b_o));
    Var cand = t.tanh(gate(w_c, u_c, b_c));
    c_prev = t.add(t.hadamard(f, c_prev), t.hadamard(i, cand));
    h_prev = t.hadamard(o, t.tanh(c_prev));
  }
  return h_prev;
}

Var predict_empathy_node(Tape& t, Var l_agg, ModelParams& p, bool training_mode,
                         std::uint64_t dropout_seed) {
  Var x = l_agg;
  const double rate = p.config().dropout_rate;
  if (training_mode && rate > 0.0) {
    const Matrix& v = t.value(l_agg);
    const double keep = 1.0 - rate;
    rng::Engine g = rng::make_engine(rng::mix(dropout_seed, 0xd407));
    Matrix mask(v.rows(), v.cols());
    for (double& m : mask.data()) m = rng::uniform01(g) < keep ? 1.0 / keep : 0.0;
    x = t.hadamard(l_agg, t.input(std::move(mask)));
  }
  return t.row_softmax(t.affine(x, t.param(p.at("empathy.w")), t.param(p.at("empathy.b"))));
}

Var predict_topics_node(Tape& t, Var pooled, ModelParams& p) {
  return t.row_softmax(t.affine(pooled, t.param(p.at("topics.w")), t.param(p.at("topics.b"))));
}

Forward forward(const ConversationSample& sample, ModelParams& p, bool training_mode,
                std::uint64_t dropout_seed) {
  const NetConfig& cfg = p.config();
  const ModalityPlan& plan = p.plan();

  auto check_modality = [&](Modality m) {
    const Matrix& feat = modality_features(sample, m);
    if (feat.rows() < 1 || feat.cols() != modality_width(cfg.dims, m)) {
      throw DimensionError("input(" + to_string(m) + "): sample '" + sample.id + "' is " +
                           std::to_string(feat.rows()) + "x" + std::to_string(feat.cols()) +
                           ", expected n x " + std::to_string(modality_width(cfg.dims, m)));
    }
  };
  check_modality(plan.anchor);
  for (Modality m : plan.partners) check_modality(m);

  Forward f;
  Tape& t = f.tape;
  Var anchor = t.input(modality_features(sample, plan.anchor));

  std::vector<Var> parts;
  Var first_proj;
  for (Modality m : plan.partners) {
    const std::string name = to_string(m);
    Var proj = stage("project_text(" + name + ")", [&] {
      return project_text_node(t, anchor, t.param(p.at("proj_" + name + ".w")),
                               t.param(p.at("proj_" + name + ".b")));
    });
    if (!first_proj.valid()) first_proj = proj;
    Var partner = t.input(modality_features(sample, m));
    parts.push_back(stage("cross_modal_combine(" + name + ")",
                          [&] { return cross_modal_combine_node(t, proj, partner).fused; }));
  }
  parts.push_back(anchor);

  Var l_agg = stage("aggregate", [&] {
    return aggregate_node(t, std::span<const Var>(parts.data(), parts.size()), p);
  });
  f.empathy = stage("predict_empathy",
                    [&] { return predict_empathy_node(t, l_agg, p, training_mode, dropout_seed); });

  Var pool_src = anchor;
  if (cfg.topic_input == TopicHeadInput::kProjectedText && first_proj.valid()) {
    pool_src = first_proj;
  }
  f.pooled_text = t.mean_rows(pool_src);
  f.topics = stage("predict_topics", [&] { return predict_topics_node(t, f.pooled_text, p); });
  return f;
}

void write_params(std::ostream& out, const ModelParams& p) {
  const char magic[4] = {'E', 'N', 'P', '1'};
  out.write(magic, 4);
  const auto params = p.all();
  const std::uint64_t n = params.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (const Parameter* q : params) {
    const std::uint32_t len = static_cast<std::uint32_t>(q->name.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(q->name.data(), len);
    const std::uint64_t r = q->value.rows(), c = q->value.cols();
    out.write(reinterpret_cast<const char*>(&r), sizeof r);
    out.write(reinterpret_cast<const char*>(&c), sizeof c);
    out.write(reinterpret_cast<const char*>(q->value.data().data()),
              static_cast<std::streamsize>(q->value.size() * sizeof(double)));
  }
  if (!out) throw ValidationError("failed writing parameter block");
}

void read_params(std::istream& in, ModelParams& p) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "ENP1", 4) != 0) {
    throw ValidationError("bad parameter block magic");
  }
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  auto params = p.all();
  if (n != params.size()) {
    throw ValidationError("parameter block holds " + std::to_string(n) + " tensors, expected " +
                          std::to_string(params.size()));
  }
  for (Parameter* q : params) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    std::string name(len, '\0');
    in.read(name.data(), len);
    std::uint64_t r = 0, c = 0;
    in.read(reinterpret_cast<char*>(&r), sizeof r);
    in.read(reinterpret_cast<char*>(&c), sizeof c);
    if (!in || name != q->name || r != q->value.rows() || c != q->value.cols()) {
      throw ValidationError("parameter block mismatch at " + q->name);
    }
    in.read(reinterpret_cast<char*>(q->value.data().data()),
            static_cast<std::streamsize>(q->value.size() * sizeof(double)));
  }
  if (!in) throw ValidationError("truncated parameter block");
}

}  // namespace empnet
