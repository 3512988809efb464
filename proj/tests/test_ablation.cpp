#include "empnet/ablation.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "empnet/error.hpp"

using namespace empnet;

namespace {

Dataset parity(std::size_t n, std::uint64_t seed) {
  SynthConfig sc;
  sc.task = SynthTask::kCrossModalParity;
  sc.n_samples = n;
  return synth_generate(sc, seed);
}

Dataset topical(std::size_t n, std::uint64_t seed) {
  SynthConfig sc;
  sc.task = SynthTask::kTopicCorrelated;
  sc.n_samples = n;
  return synth_generate(sc, seed);
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.hidden = 4;
  cfg.topics = 2;
  cfg.lda.sweeps = 40;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("suite names round-trip and bad names are rejected") {
  CHECK(parse_ablation_suite("modality") == AblationSuite::kModality);
  CHECK(parse_ablation_suite("sdat") == AblationSuite::kSdat);
  CHECK(to_string(AblationSuite::kModality) == "modality");
  CHECK(to_string(AblationSuite::kSdat) == "sdat");
  CHECK_THROWS_AS(parse_ablation_suite("modalities"), ValidationError);
}

TEST_CASE("modality suite emits exactly 7 rows in fixed order") {
  Dataset tr = parity(40, 1);
  Dataset va = parity(16, 2);
  Dataset te = parity(16, 3);
  TrainConfig cfg = quick_config();
  cfg.sdat_enabled = false;
  cfg.weights = {1.0, 0.0};

  auto rows = run_ablation(AblationSuite::kModality, cfg, tr, va, te);
  REQUIRE(rows.size() == 7);
  const char* expected[] = {"text",       "audio",       "video",          "text+audio",
                            "text+video", "audio+video", "text+audio+video"};
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(rows[i].variant == expected[i]);
    CHECK(!rows[i].train_topic_kl.has_value());
    CHECK(rows[i].accuracy >= 0.0);
    CHECK(rows[i].accuracy <= 1.0);
    CHECK(rows[i].weighted_f1 >= 0.0);
    CHECK(rows[i].weighted_f1 <= 1.0);
  }

  SUBCASE("rerun is bit-identical") {
    auto again = run_ablation(AblationSuite::kModality, cfg, tr, va, te);
    CHECK(again == rows);
  }
}

// The parity label is the sign product of audio and video channel 0, so any
// variant lacking one of them can only fit noise while audio+video (and the
// trimodal net) can separate the classes.
TEST_CASE("modality suite separates fusion-dependent from fusion-blind variants") {
  Dataset tr = parity(300, 20);
  Dataset va = parity(80, 21);
  Dataset te = parity(100, 22);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.sdat_enabled = false;
  cfg.weights = {1.0, 0.0};
  cfg.seed = 2;

  auto rows = run_ablation(AblationSuite::kModality, cfg, tr, va, te);
  REQUIRE(rows.size() == 7);
  // observed: text 0.53, audio+video 1.00, trimodal 0.99
  CHECK(rows[0].accuracy <= 0.60);         // text
  CHECK(rows[5].accuracy >= 0.90);         // audio+video
  CHECK(rows[6].accuracy >= 0.95);         // text+audio+video
  CHECK(rows[6].weighted_f1 >= 0.95);
}

TEST_CASE("sdat suite trains both weights and reports the topic KL") {
  Dataset tr = topical(100, 300);
  Dataset va = topical(25, 301);
  Dataset te = topical(50, 302);
  TrainConfig cfg = quick_config();
  cfg.epochs = 25;
  cfg.seed = 7;

  auto rows = run_ablation(AblationSuite::kSdat, cfg, tr, va, te);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].variant == "without-topic-supervision");
  CHECK(rows[1].variant == "with-topic-supervision");
  REQUIRE(rows[0].train_topic_kl.has_value());
  REQUIRE(rows[1].train_topic_kl.has_value());
  // observed: 1.92 without vs 0.36 with
  CHECK(*rows[1].train_topic_kl < 0.5 * *rows[0].train_topic_kl);
}

// Near-uniform targets (alpha large enough to swamp the counts) carry no
// signal, so the weighted run may differ from the unweighted one only by
// optimization noise.
TEST_CASE("sdat suite with uninformative targets leaves accuracy unchanged") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Dataset tr = topical(100, 900 + seed * 10);
    Dataset va = topical(25, 901 + seed * 10);
    Dataset te = topical(50, 902 + seed * 10);
    TrainConfig cfg = quick_config();
    cfg.epochs = 15;
    cfg.lda.alpha = 1000.0;
    cfg.lda.sweeps = 60;
    cfg.seed = seed;

    auto rows = run_ablation(AblationSuite::kSdat, cfg, tr, va, te);
    REQUIRE(rows.size() == 2);
    // observed max gap 0.02 across these seeds
    CHECK(std::abs(rows[0].accuracy - rows[1].accuracy) < 0.05);
  }
}

TEST_CASE("sdat suite with zero epochs evaluates the shared init without a KL") {
  Dataset tr = topical(30, 50);
  Dataset va = topical(10, 51);
  TrainConfig cfg = quick_config();
  cfg.epochs = 0;

  auto rows = run_ablation(AblationSuite::kSdat, cfg, tr, va, va);
  REQUIRE(rows.size() == 2);
  CHECK(!rows[0].train_topic_kl.has_value());
  CHECK(!rows[1].train_topic_kl.has_value());
  CHECK(rows[0].accuracy == rows[1].accuracy);  // identical init, no steps
}

TEST_CASE("sdat suite rejects configs that cannot compare supervision") {
  Dataset tr = topical(30, 60);
  Dataset va = topical(10, 61);
  TrainConfig off = quick_config();
  off.sdat_enabled = false;
  CHECK_THROWS_AS(run_ablation(AblationSuite::kSdat, off, tr, va, va), ValidationError);

  TrainConfig zero = quick_config();
  zero.weights.w_t = 0.0;
  zero.weights.w_s = 1.0;
  CHECK_THROWS_AS(run_ablation(AblationSuite::kSdat, zero, tr, va, va), ValidationError);
}

TEST_CASE("errors from the underlying runs propagate") {
  // parity samples carry no documents -> target preparation fails
  Dataset tr = parity(20, 70);
  Dataset va = parity(10, 71);
  CHECK_THROWS_AS(run_ablation(AblationSuite::kSdat, quick_config(), tr, va, va),
                  ValidationError);

  // mismatched dims between the splits
  Dataset tr2 = topical(20, 72);
  Dataset bad = topical(10, 73);
  bad.dims.d_v = 9;
  TrainConfig cfg = quick_config();
  cfg.sdat_enabled = false;
  cfg.weights = {1.0, 0.0};
  CHECK_THROWS_AS(run_ablation(AblationSuite::kModality, cfg, tr2, bad, bad), DimensionError);
}

TEST_CASE("table rendering pads every column to a fixed grid") {
  std::vector<AblationRow> rows;
  rows.push_back({"without-topic-supervision", 0.84, 0.8312, 1.6917});
  rows.push_back({"with-topic-supervision", 0.86, 0.855, 0.0471});

  const std::string expected =
      "variant                    accuracy  weighted_f1  train_kl\n"
      "without-topic-supervision    0.8400       0.8312    1.6917\n"
      "with-topic-supervision       0.8600       0.8550    0.0471\n";
  CHECK(render_ablation_table(rows) == expected);

  SUBCASE("missing KL renders as a dash") {
    rows[1].train_topic_kl.reset();
    const std::string mixed =
        "variant                    accuracy  weighted_f1  train_kl\n"
        "without-topic-supervision    0.8400       0.8312    1.6917\n"
        "with-topic-supervision       0.8600       0.8550         -\n";
    CHECK(render_ablation_table(rows) == mixed);
  }

  SUBCASE("KL column disappears when no row carries one") {
    rows[0].train_topic_kl.reset();
    rows[1].train_topic_kl.reset();
    const std::string plain =
        "variant                    accuracy  weighted_f1\n"
        "without-topic-supervision    0.8400       0.8312\n"
        "with-topic-supervision       0.8600       0.8550\n";
    CHECK(render_ablation_table(rows) == plain);
  }
}
