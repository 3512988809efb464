// Command-line front end: train/evaluate/ablate plus the topic-model and
// synthetic-data utilities. Exit codes: 0 ok, 1 usage, 2 bad data or config,
// 3 numeric failure.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "empnet/ablation.hpp"
#include "empnet/error.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace empnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::vector<std::vector<std::string>> load_doc_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open document file: " + path.string());
  std::vector<std::vector<std::string>> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (row >> tok) tokens.push_back(tok);
    if (tokens.empty()) throw ParseError("empty document", line_no);
    docs.push_back(std::move(tokens));
  }
  if (docs.empty()) throw ValidationError("document file has no documents: " + path.string());
  return docs;
}

json report_json(const EvalReport& rep) {
  json conf = json::array();
  for (const auto& row : rep.confusion.counts) conf.push_back(row);
  return json{{"label_target", to_string(rep.label_target)},
              {"n", rep.n},
              {"accuracy", rep.accuracy},
              {"weighted_f1", rep.weighted_f1},
              {"macro_f1", rep.macro_f1},
              {"confusion", conf}};
}

TrainConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  return load_train_config(path);
}

struct TrainArgs {
  std::string data, label, config, out, val;
  bool no_sdat = false;
  std::int64_t seed = -1;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg = load_train_config(a.config);
  cfg.label_target = parse_label_target(a.label);
  if (a.no_sdat) cfg.sdat_enabled = false;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);

  Dataset train_ds;
  Dataset val_ds;
  if (!a.val.empty()) {
    train_ds = load_dataset(a.data);
    val_ds = load_dataset(a.val);
  } else {
    SplitSpec spec;
    spec.ratios = {0.9, 0.1, 0.0};
    spec.seed = cfg.seed;
    SplitResult parts = split(load_dataset(a.data), spec);
    train_ds = std::move(parts.train);
    val_ds = std::move(parts.val);
  }

  fs::create_directories(a.out);
  const fs::path log_path = fs::path(a.out) / "train_log.jsonl";
  const fs::path ck_path = fs::path(a.out) / "checkpoint.bin";
  std::ofstream log(log_path);
  if (!log) throw ValidationError("cannot open log for writing: " + log_path.string());

  TrainRun run = train(train_ds, val_ds, cfg, &log);
  save_checkpoint(run.final_state, ck_path);

  std::cout << "epochs: " << run.history.size() << "\n"
            << "best val accuracy: " << run.final_state.best_val_accuracy << " (epoch "
            << run.final_state.best_epoch << ")\n"
            << "checkpoint: " << ck_path.string() << "\n"
            << "log: " << log_path.string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& ck_path, const std::string& data, const std::string& label) {
  Checkpoint ck = load_checkpoint(ck_path);
  ModelParams params = restore_best(ck);
  EvalReport rep = evaluate(params, load_dataset(data), parse_label_target(label));
  std::cout << report_json(rep).dump(2) << "\n";
  return kExitOk;
}

int cmd_lda_fit(const std::string& docs_path, std::size_t topics, std::size_t sweeps,
                double alpha, double beta, std::uint64_t seed, const std::string& out) {
  LdaConfig lc;
  lc.topics = topics;
  lc.sweeps = sweeps;
  lc.alpha = alpha;
  lc.beta = beta;
  LdaModel m = lda_fit(load_doc_lines(docs_path), lc, seed);
  save_lda(m, out);
  std::cout << "docs: " << m.corpus.size() << "\n"
            << "vocabulary: " << m.vocab.size() << "\n"
            << "topics: " << m.topics << "\n"
            << "log joint: " << (m.log_joint_history.empty() ? 0.0 : m.log_joint_history.back())
            << "\n"
            << "model: " << out << "\n";
  return kExitOk;
}

int cmd_lda_topics(const std::string& model_path, std::size_t top_n) {
  LdaModel m = load_lda(model_path);
  for (std::size_t k = 0; k < m.topics; ++k) {
    std::cout << "topic " << k << ":";
    for (const auto& [token, p] : top_words(m, k, top_n)) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", p);
      std::cout << " " << token << " (" << buf << ")";
    }
    std::cout << "\n";
  }
  return kExitOk;
}

int cmd_synth(const std::string& task, std::size_t n, std::uint64_t seed,
              const std::string& out) {
  SynthConfig sc;
  sc.task = parse_synth_task(task);
  sc.n_samples = n;
  Dataset ds = synth_generate(sc, seed);
  save_dataset(ds, out);
  std::cout << "samples: " << ds.samples.size() << "\n" << "dataset: " << out << "\n";
  return kExitOk;
}

int cmd_gradcheck(const std::string& config_path, std::uint64_t seed) {
  GradCheckReport rep = gradient_probe(load_train_config(config_path), seed);

  std::string worst = "-";
  double worst_err = -1.0;
  for (const auto& [name, err] : rep.per_param)
    if (err > worst_err) {
      worst_err = err;
      worst = name;
    }
  std::cout << "max relative error: " << rep.max_rel_error << " (threshold 1e-4)\n"
            << "worst parameter: " << worst << "\n";
  if (rep.max_rel_error >= 1e-4) {
    std::cerr << "gradient check failed\n";
    return kExitNumeric;
  }
  return kExitOk;
}

struct AblateArgs {
  std::string suite, data, val, test, label, config, format = "text";
  std::int64_t seed = -1;
  bool no_sdat = false;
};

int cmd_ablate(const AblateArgs& a) {
  TrainConfig cfg = load_config_or_default(a.config);
  if (!a.label.empty()) cfg.label_target = parse_label_target(a.label);
  if (a.no_sdat) cfg.sdat_enabled = false;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);

  Dataset train_ds, val_ds, test_ds;
  if (!a.val.empty() && !a.test.empty()) {
    train_ds = load_dataset(a.data);
    val_ds = load_dataset(a.val);
    test_ds = load_dataset(a.test);
  } else if (a.val.empty() && a.test.empty()) {
    SplitSpec spec;
    spec.ratios = {0.7, 0.15, 0.15};
    spec.seed = cfg.seed;
    SplitResult parts = split(load_dataset(a.data), spec);
    train_ds = std::move(parts.train);
    val_ds = std::move(parts.val);
    test_ds = std::move(parts.test);
  } else {
    std::cerr << "give both --val and --test, or neither (then --data is split 70/15/15)\n";
    return kExitUsage;
  }

  auto rows = run_ablation(parse_ablation_suite(a.suite), cfg, train_ds, val_ds, test_ds);
  if (a.format == "json") {
    json out = json::array();
    for (const AblationRow& r : rows) {
      json row{{"variant", r.variant},
               {"accuracy", r.accuracy},
               {"weighted_f1", r.weighted_f1}};
      if (r.train_topic_kl) row["train_kl"] = *r.train_topic_kl;
      out.push_back(row);
    }
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << render_ablation_table(rows);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-modal empathy model: training, evaluation, ablations"};
  app.require_subcommand(1);

  TrainArgs ta;
  CLI::App* tr = app.add_subcommand("train", "fit a model and write a checkpoint");
  tr->add_option("--data", ta.data, "training dataset (jsonl)")->required();
  tr->add_option("--label", ta.label, "label target: ee | er | cr")->required();
  tr->add_option("--config", ta.config, "training config (json)")->required();
  tr->add_option("--out", ta.out, "output directory")->required();
  tr->add_flag("--no-sdat", ta.no_sdat, "disable topic supervision");
  tr->add_option("--seed", ta.seed, "override the config seed");
  tr->add_option("--val", ta.val,
                 "validation dataset; without it --data is split 90/10 by the run seed");

  std::string ev_ck, ev_data, ev_label;
  CLI::App* ev = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
  ev->add_option("--checkpoint", ev_ck, "checkpoint file")->required();
  ev->add_option("--data", ev_data, "evaluation dataset (jsonl)")->required();
  ev->add_option("--label", ev_label, "label target: ee | er | cr")->required();

  std::string lf_docs, lf_out;
  std::size_t lf_topics = 10, lf_sweeps = 500;
  double lf_alpha = 0.1, lf_beta = 0.01;
  std::uint64_t lf_seed = 0;
  CLI::App* lf = app.add_subcommand("lda-fit", "fit the topic model on a document file");
  lf->add_option("--docs", lf_docs, "one whitespace-tokenized document per line")->required();
  lf->add_option("--topics", lf_topics, "topic count K");
  lf->add_option("--sweeps", lf_sweeps, "gibbs sweeps");
  lf->add_option("--alpha", lf_alpha, "document-topic prior");
  lf->add_option("--beta", lf_beta, "topic-word prior");
  lf->add_option("--seed", lf_seed, "sampler seed");
  lf->add_option("--out", lf_out, "model output path (json)")->required();

  std::string lt_model;
  std::size_t lt_top = 10;
  CLI::App* lt = app.add_subcommand("lda-topics", "print the top words of a fitted model");
  lt->add_option("--model", lt_model, "fitted model path")->required();
  lt->add_option("--top", lt_top, "words per topic");

  std::string sy_task, sy_out;
  std::size_t sy_n = 128;
  std::uint64_t sy_seed = 0;
  CLI::App* sy = app.add_subcommand("synth", "generate a synthetic dataset");
  sy->add_option("--task", sy_task,
                 "unimodal-linear | cross-modal-parity | topic-correlated")
      ->required();
  sy->add_option("--n", sy_n, "sample count")->required();
  sy->add_option("--seed", sy_seed, "generator seed")->required();
  sy->add_option("--out", sy_out, "dataset output path (jsonl)")->required();

  std::string gc_config;
  std::uint64_t gc_seed = 0;
  CLI::App* gc = app.add_subcommand("gradcheck",
                                    "finite-difference check of the full loss gradient");
  gc->add_option("--config", gc_config, "training config (json)")->required();
  gc->add_option("--seed", gc_seed, "probe seed")->required();

  AblateArgs aa;
  CLI::App* ab = app.add_subcommand("ablate", "train and compare model variants");
  ab->add_option("--suite", aa.suite, "modality | sdat")->required();
  ab->add_option("--data", aa.data, "training dataset (jsonl)")->required();
  ab->add_option("--val", aa.val, "validation dataset");
  ab->add_option("--test", aa.test, "evaluation dataset");
  ab->add_option("--label", aa.label, "label target: ee | er | cr");
  ab->add_option("--config", aa.config, "base training config (json)");
  ab->add_option("--seed", aa.seed, "override the config seed");
  ab->add_flag("--no-sdat", aa.no_sdat, "disable topic supervision");
  ab->add_option("--format", aa.format, "text | json")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*tr) return cmd_train(ta);
    if (*ev) return cmd_evaluate(ev_ck, ev_data, ev_label);
    if (*lf) return cmd_lda_fit(lf_docs, lf_topics, lf_sweeps, lf_alpha, lf_beta, lf_seed, lf_out);
    if (*lt) return cmd_lda_topics(lt_model, lt_top);
    if (*sy) return cmd_synth(sy_task, sy_n, sy_seed, sy_out);
    if (*gc) return cmd_gradcheck(gc_config, gc_seed);
    if (*ab) return cmd_ablate(aa);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
