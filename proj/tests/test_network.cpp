#include "empnet/network.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "empnet/error.hpp"
#include "empnet/objective.hpp"
#include "empnet/rng.hpp"

using namespace empnet;

namespace {

Matrix random_matrix(rng::Engine& g, std::size_t r, std::size_t c, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng::uniform(g, lo, hi);
  return m;
}

void zero_all(ModelParams& p) {
  for (Parameter* q : p.all())
    for (double& v : q->value.data()) v = 0.0;
}

NetConfig small_config() {
  NetConfig cfg;
  cfg.dims = {4, 3, 3};
  cfg.hidden = 5;
  cfg.topics = 3;
  return cfg;
}

ConversationSample small_sample(std::uint64_t seed) {
  SynthConfig sc;
  sc.task = SynthTask::kUnimodalLinear;
  sc.n_samples = 1;
  sc.n_t = 3;
  sc.n_a = 2;
  sc.n_v = 2;
  sc.dims = {4, 3, 3};
  return synth_generate(sc, seed).samples[0];
}

Matrix simplex_row(rng::Engine& g, std::size_t k) {
  Matrix p(1, k);
  double s = 0.0;
  for (double& v : p.data()) {
    v = 0.05 + rng::uniform01(g);
    s += v;
  }
  for (double& v : p.data()) v /= s;
  return p;
}

// CE(empathy) * 0.84 + KL(topics) * 0.16 recorded on the forward tape.
Var total_loss_node(Forward& f, int label, const Matrix& topic_target) {
  std::array<int, 1> labels{label};
  Var ce = cross_entropy_node(f.tape, f.empathy, labels);
  Var kl = kl_node(f.tape, f.topics, topic_target);
  return total_node(f.tape, ce, kl, LossWeights{});
}

}  // namespace

TEST_CASE("projection basics") {
  CHECK(project_text(Matrix{{1, -1}}, Matrix(2, 3), Matrix(1, 3)) == Matrix(1, 3));

  Matrix out = project_text(Matrix{{1, -1}}, Matrix{{1, 0}, {0, 1}}, Matrix(1, 2));
  CHECK(out(0, 0) == doctest::Approx(std::tanh(1.0)).epsilon(1e-15));
  CHECK(out(0, 1) == doctest::Approx(std::tanh(-1.0)).epsilon(1e-15));
  CHECK(out(0, 0) == doctest::Approx(0.76159416).epsilon(1e-8));

  rng::Engine g = rng::make_engine(6);
  for (int t = 0; t < 50; ++t) {
    Matrix big = random_matrix(g, 3, 4, -1e3, 1e3);
    Matrix w = random_matrix(g, 4, 2, -1e3, 1e3);
    Matrix pre = add_row_broadcast(matmul(big, w), random_matrix(g, 1, 2));
    Matrix proj = project_text(big, w, Matrix(1, 2));
    Matrix proj_b = tanh_map(pre);
    for (std::size_t i = 0; i < pre.size(); ++i) {
      // Exact math keeps tanh inside (-1,1); doubles saturate to +-1.0 once
      // |z| clears ~19, so the open bound is only checkable short of there.
      const double v = proj_b.data()[i];
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
      if (std::abs(pre.data()[i]) < 19.0) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
      }
    }
    for (double v : proj.data()) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("single-token cross-modal attention is exact") {
  Matrix proj{{0.5, -0.25}};
  Matrix partner{{2.0, 3.0}};
  CrossModalParts parts = cross_modal_combine(proj, partner);
  CHECK(parts.partner_to_anchor == Matrix{{1.0}});
  CHECK(parts.anchor_to_partner == Matrix{{1.0}});
  CHECK(parts.partner_context == proj);  // the only anchor row
  CHECK(parts.fused == Matrix{{2.0, 3.0, 0.5, -0.25}});
}

TEST_CASE("identity pair matches the hand-rolled oracle") {
  Matrix eye{{1, 0}, {0, 1}};
  CrossModalParts parts = cross_modal_combine(eye, eye);
  const double e = std::exp(1.0);
  const double a = e / (e + 1.0), b = 1.0 / (e + 1.0);
  CHECK(a == doctest::Approx(0.7310585786300049).epsilon(1e-15));

  for (const Matrix* att : {&parts.partner_to_anchor, &parts.anchor_to_partner}) {
    CHECK((*att)(0, 0) == doctest::Approx(a).epsilon(1e-14));
    CHECK((*att)(0, 1) == doctest::Approx(b).epsilon(1e-14));
    CHECK((*att)(1, 0) == doctest::Approx(b).epsilon(1e-14));
    CHECK((*att)(1, 1) == doctest::Approx(a).epsilon(1e-14));
  }

  // Term-by-term: context = A.I = A, fused = A.[I | A].
  Matrix expected{{a, b, a * a + b * b, 2 * a * b}, {b, a, 2 * a * b, a * a + b * b}};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(parts.fused(i, j) == doctest::Approx(expected(i, j)).epsilon(1e-14));
}

TEST_CASE("identical partner rows give identical fused rows") {
  rng::Engine g = rng::make_engine(14);
  Matrix proj = random_matrix(g, 3, 2);
  Matrix row = random_matrix(g, 1, 2);
  Matrix partner(4, 2);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) partner(i, j) = row(0, j);

  CrossModalParts parts = cross_modal_combine(proj, partner);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t m = 0; m < 4; ++m)
      CHECK(parts.anchor_to_partner(i, m) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("pre-softmax affinity matrices are exact transposes") {
  rng::Engine g = rng::make_engine(25);
  for (int t = 0; t < 100; ++t) {
    Matrix proj = random_matrix(g, 1 + t % 5, 3);
    Matrix partner = random_matrix(g, 1 + (t / 2) % 4, 3);
    Matrix lhs = transpose(matmul(partner, transpose(proj)));
    Matrix rhs = matmul(proj, transpose(partner));
    CHECK(lhs == rhs);  // bit-for-bit
  }
}

TEST_CASE("attention rows are probability vectors across 1000 random shapes") {
  rng::Engine g = rng::make_engine(33);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n_t = 1 + rng::below(g, 5), n_m = 1 + rng::below(g, 5),
                      d = 1 + rng::below(g, 4);
    CrossModalParts parts =
        cross_modal_combine(random_matrix(g, n_t, d, -5, 5), random_matrix(g, n_m, d, -5, 5));
    for (const Matrix* att : {&parts.partner_to_anchor, &parts.anchor_to_partner}) {
      for (std::size_t i = 0; i < att->rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < att->cols(); ++j) {
          CHECK((*att)(i, j) >= 0.0);
          CHECK((*att)(i, j) <= 1.0);
          s += (*att)(i, j);
        }
        CHECK(std::abs(s - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("permuting partner rows permutes attention and preserves the fusion") {
  rng::Engine g = rng::make_engine(41);
  Matrix proj = random_matrix(g, 3, 2);
  Matrix partner = random_matrix(g, 4, 2);
  Matrix permuted(4, 2);
  const std::array<std::size_t, 4> perm{2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) permuted(i, j) = partner(perm[i], j);

  CrossModalParts base = cross_modal_combine(proj, partner);
  CrossModalParts moved = cross_modal_combine(proj, permuted);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(moved.partner_to_anchor(i, j) ==
            doctest::Approx(base.partner_to_anchor(perm[i], j)).epsilon(1e-12));
  for (std::size_t i = 0; i < base.fused.rows(); ++i)
    for (std::size_t j = 0; j < base.fused.cols(); ++j)
      CHECK(moved.fused(i, j) == doctest::Approx(base.fused(i, j)).epsilon(1e-12));
}

TEST_CASE("zero weights and zero input keep the LSTM at zero") {
  NetConfig cfg = small_config();
  ModelParams p(cfg, 1);
  zero_all(p);
  Tape t;
  std::array<Var, 1> parts{t.input(Matrix(3, p.lstm_input_width()))};
  Var h = aggregate_node(t, parts, p);
  CHECK(t.value(h) == Matrix(1, cfg.hidden));
}

TEST_CASE("single-step LSTM matches the closed-form oracle") {
  NetConfig cfg = small_config();
  ModelParams p(cfg, 77);
  rng::Engine g = rng::make_engine(100);
  Matrix x = random_matrix(g, 1, p.lstm_input_width());

  Tape t;
  std::array<Var, 1> parts{t.input(x)};
  Matrix got = t.value(aggregate_node(t, parts, p));

  // Scalar recomputation: h1 = sigmoid(z_o) * tanh(sigmoid(z_i) * tanh(z_c))
  // with zero initial state, all from raw loops.
  auto z = [&](const char* w, const char* b, std::size_t j) {
    const Matrix& wm = p.at(w).value;
    double acc = p.at(b).value(0, j);
    for (std::size_t kk = 0; kk < x.cols(); ++kk) acc += x(0, kk) * wm(kk, j);
    return acc;
  };
  for (std::size_t j = 0; j < cfg.hidden; ++j) {
    const double i = 1.0 / (1.0 + std::exp(-z("lstm.w_i", "lstm.b_i", j)));
    const double o = 1.0 / (1.0 + std::exp(-z("lstm.w_o", "lstm.b_o", j)));
    const double cand = std::tanh(z("lstm.w_c", "lstm.b_c", j));
    const double expect = o * std::tanh(i * cand);
    CHECK(got(0, j) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("the recurrence is stateful: repeating the input row changes the output") {
  NetConfig cfg = small_config();
  int changed = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ModelParams p(cfg, seed);
    rng::Engine g = rng::make_engine(seed + 500);
    Matrix x = random_matrix(g, 1, p.lstm_input_width());
    Matrix xx(2, x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) xx(0, j) = xx(1, j) = x(0, j);

    Tape t1, t2;
    std::array<Var, 1> a{t1.input(x)}, b{t2.input(xx)};
    if (t1.value(aggregate_node(t1, a, p)) != t2.value(aggregate_node(t2, b, p))) ++changed;
  }
  CHECK(changed >= 19);
}

TEST_CASE("empathy head closed forms") {
  NetConfig cfg = small_config();
  ModelParams p(cfg, 3);
  zero_all(p);

  Tape t;
  Var l = t.input(Matrix(1, cfg.hidden));
  Matrix uniform = t.value(predict_empathy_node(t, l, p, false, 0));
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(uniform(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  p.at("empathy.b").value = Matrix{{10, 0, 0}};
  Tape t2;
  Matrix peaked = t2.value(predict_empathy_node(t2, t2.input(Matrix(1, cfg.hidden)), p, false, 0));
  const double z = std::exp(10.0) + 2.0;
  CHECK(peaked(0, 0) == doctest::Approx(std::exp(10.0) / z).epsilon(1e-14));
  CHECK(peaked(0, 1) == doctest::Approx(1.0 / z).epsilon(1e-14));
  CHECK(peaked(0, 2) == doctest::Approx(1.0 / z).epsilon(1e-14));
  CHECK(peaked(0, 0) > 0.9999);
}

TEST_CASE("dropout is seeded and disabled outside training") {
  NetConfig cfg = small_config();
  ModelParams p(cfg, 5);
  rng::Engine g = rng::make_engine(7);
  Matrix l_agg = random_matrix(g, 1, cfg.hidden);

  auto run = [&](bool training, std::uint64_t seed) {
    Tape t;
    return t.value(predict_empathy_node(t, t.input(l_agg), p, training, seed));
  };
  CHECK(run(false, 1) == run(false, 2));  // evaluation ignores the seed
  CHECK(run(true, 9) == run(true, 9));    // training is deterministic per seed

  NetConfig no_drop = cfg;
  no_drop.dropout_rate = 0.0;
  ModelParams q(no_drop, 5);
  for (Parameter* src : p.all())
    q.at(src->name).value = src->value;
  Tape t;
  CHECK(t.value(predict_empathy_node(t, t.input(l_agg), q, true, 4)) == run(false, 0));
}

TEST_CASE("inverted dropout keeps the expected scale") {
  NetConfig cfg = small_config();
  cfg.hidden = 64;
  ModelParams p(cfg, 11);
  // Sum the masked vector through a weight of ones: logit 0 collects
  // sum(mask . l_agg), whose mean across seeds must approach sum(l_agg).
  zero_all(p);
  for (std::size_t k = 0; k < 64; ++k) p.at("empathy.w").value(k, 0) = 1.0;
  Matrix ones(1, 64);
  for (double& v : ones.data()) v = 1.0;

  double mean_masked_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    Tape t;
    Var probs = predict_empathy_node(t, t.input(ones), p, true, seed);
    // invert the softmax: with logits (s, 0, 0), p0/p1 = e^s
    const Matrix& y = t.value(probs);
    mean_masked_sum += std::log(y(0, 0) / y(0, 1));
  }
  mean_masked_sum /= 400.0;
  CHECK(std::abs(mean_masked_sum - 64.0) < 2.0);  // inverted scaling keeps E[sum] = 64
}

TEST_CASE("topic head closed forms") {
  NetConfig cfg = small_config();
  cfg.topics = 10;
  ModelParams p(cfg, 2);
  zero_all(p);
  Tape t;
  Matrix uniform = t.value(predict_topics_node(t, t.input(Matrix(1, p.pooled_width())), p));
  CHECK(uniform.cols() == 10);
  for (std::size_t j = 0; j < 10; ++j)
    CHECK(uniform(0, j) == doctest::Approx(0.1).epsilon(1e-15));

  NetConfig two = small_config();
  two.topics = 2;
  two.dims = {2, 2, 2};
  ModelParams q(two, 2);
  zero_all(q);
  q.at("topics.w").value = Matrix{{1, -1}, {0, 0}};
  Tape t2;
  Matrix out = t2.value(predict_topics_node(t2, t2.input(Matrix{{1, 0}}), q));
  CHECK(out(0, 0) == doctest::Approx(0.88079708).epsilon(1e-8));
  CHECK(out(0, 1) == doctest::Approx(0.11920292).epsilon(1e-8));

  rng::Engine g = rng::make_engine(19);
  for (int i = 0; i < 100; ++i) {
    Tape t3;
    Matrix probs =
        t3.value(predict_topics_node(t3, t3.input(random_matrix(g, 1, p.pooled_width())), p));
    double s = 0.0;
    for (double v : probs.data()) s += v;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("forward with all-zero parameters is uniform everywhere") {
  NetConfig cfg = small_config();
  ModelParams p(cfg, 1);
  zero_all(p);
  ConversationSample s = small_sample(3);
  Forward f = forward(s, p, false, 0);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(f.tape.value(f.empathy)(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  for (std::size_t j = 0; j < cfg.topics; ++j)
    CHECK(f.tape.value(f.topics)(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("evaluation-mode forward is deterministic") {
  ModelParams p(small_config(), 21);
  ConversationSample s = small_sample(4);
  Forward a = forward(s, p, false, 1);
  Forward b = forward(s, p, false, 99);
  CHECK(a.tape.value(a.empathy) == b.tape.value(b.empathy));
  CHECK(a.tape.value(a.topics) == b.tape.value(b.topics));
}

TEST_CASE("full-model gradients pass the finite-difference gate at 1e-4") {
  ModelParams p(small_config(), 31);
  ConversationSample s = small_sample(5);
  rng::Engine g = rng::make_engine(6);
  Matrix target = simplex_row(g, 3);
  const int label = s.labels.ee;

  Forward f = forward(s, p, true, 123);
  Var loss = total_loss_node(f, label, target);
  f.tape.backward(loss);

  auto fn = [&] {
    Forward f2 = forward(s, p, true, 123);
    return f2.tape.scalar(total_loss_node(f2, label, target));
  };
  auto params = p.all();
  GradCheckReport rep = finite_diff_check(fn, params, 1e-5);
  CHECK(rep.max_rel_error < 1e-4);
  CHECK(rep.per_param.size() == params.size());
}

TEST_CASE("no dead parameters: every tensor receives gradient signal") {
  NetConfig cfg = small_config();
  std::unordered_map<std::string, int> nonzero;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ModelParams p(cfg, seed);
    ConversationSample s = small_sample(seed + 40);
    rng::Engine g = rng::make_engine(seed);
    Matrix target = simplex_row(g, 3);

    Forward f = forward(s, p, false, 0);  // no dropout: isolate structure
    Var loss = total_loss_node(f, s.labels.ee, target);
    f.tape.backward(loss);
    for (Parameter* q : p.all()) {
      bool any = false;
      for (double v : q->grad.data()) any = any || v != 0.0;
      nonzero[q->name] += any ? 1 : 0;
    }
  }
  for (const auto& [name, count] : nonzero) {
    INFO(name);
    CHECK(count >= 9);
  }
}

TEST_CASE("dimension failures name the offending stage") {
  ModelParams p(small_config(), 8);
  ConversationSample s = small_sample(9);
  s.audio = Matrix(2, 5);  // header said d_a = 3
  try {
    forward(s, p, false, 0);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("audio") != std::string::npos);
  }
}

TEST_CASE("modality plans cover all seven ablation variants") {
  auto plan_of = [](bool text, bool audio, bool video) {
    NetConfig cfg = small_config();
    cfg.use_text = text;
    cfg.use_audio = audio;
    cfg.use_video = video;
    return ModalityPlan::from(cfg);
  };

  CHECK(plan_of(true, true, true).anchor == Modality::kText);
  CHECK(plan_of(true, true, true).partners ==
        std::vector<Modality>{Modality::kVideo, Modality::kAudio});
  CHECK(plan_of(true, false, false).partners.empty());
  CHECK(plan_of(false, true, false).anchor == Modality::kAudio);
  CHECK(plan_of(false, false, true).anchor == Modality::kVideo);
  CHECK(plan_of(false, true, true).anchor == Modality::kAudio);
  CHECK(plan_of(false, true, true).partners == std::vector<Modality>{Modality::kVideo});
  CHECK(plan_of(true, false, true).partners == std::vector<Modality>{Modality::kVideo});
  CHECK(plan_of(true, true, false).partners == std::vector<Modality>{Modality::kAudio});

  NetConfig none = small_config();
  none.use_text = none.use_audio = none.use_video = false;
  CHECK_THROWS_AS(ModalityPlan::from(none), ValidationError);
}

TEST_CASE("lstm input width shrinks with the ablated pairings") {
  NetConfig cfg = small_config();  // d_t=4, d_a=3, d_v=3
  CHECK(ModelParams(cfg, 1).lstm_input_width() == 4 + 2 * 3 + 2 * 3);

  cfg.use_video = false;
  CHECK(ModelParams(cfg, 1).lstm_input_width() == 4 + 2 * 3);

  cfg.use_audio = false;
  CHECK(ModelParams(cfg, 1).lstm_input_width() == 4);

  NetConfig av = small_config();
  av.use_text = false;
  CHECK(ModelParams(av, 1).lstm_input_width() == 3 + 2 * 3);
}

TEST_CASE("forward runs for every modality subset") {
  for (int mask = 1; mask < 8; ++mask) {
    NetConfig cfg = small_config();
    cfg.use_text = mask & 1;
    cfg.use_audio = mask & 2;
    cfg.use_video = mask & 4;
    ModelParams p(cfg, static_cast<std::uint64_t>(mask));
    ConversationSample s = small_sample(50 + static_cast<std::uint64_t>(mask));
    Forward f = forward(s, p, false, 0);
    CHECK(f.tape.value(f.empathy).all_finite());
    CHECK(f.tape.value(f.topics).all_finite());
    double sum = 0.0;
    for (double v : f.tape.value(f.empathy).data()) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("parameter blocks round trip bit-exactly") {
  ModelParams a(small_config(), 13);
  std::stringstream buf;
  write_params(buf, a);

  ModelParams b(small_config(), 14);  // different values, same layout
  read_params(buf, b);
  for (Parameter* pa : a.all()) CHECK(b.at(pa->name).value == pa->value);

  // a different layout must be rejected
  NetConfig other = small_config();
  other.hidden = 7;
  ModelParams c(other, 13);
  std::stringstream buf2;
  write_params(buf2, a);
  CHECK_THROWS_AS(read_params(buf2, c), ValidationError);
}

TEST_CASE("topic head input is switchable to raw text pooling") {
  NetConfig cfg = small_config();
  cfg.topic_input = TopicHeadInput::kRawText;
  ModelParams p(cfg, 3);
  CHECK(p.pooled_width() == cfg.dims.d_t);
  ConversationSample s = small_sample(60);
  Forward f = forward(s, p, false, 0);
  CHECK(f.tape.value(f.pooled_text) == mean_rows(s.text));

  NetConfig proj = small_config();
  ModelParams q(proj, 3);
  CHECK(q.pooled_width() == proj.dims.d_v);  // video-pairing projection width
}
