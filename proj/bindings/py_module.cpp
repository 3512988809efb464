// Python surface: thin wrappers over the training, evaluation, topic-model
// and ablation entry points. Configs travel as JSON strings; reports and
// table rows come back as plain dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "empnet/ablation.hpp"
#include "empnet/error.hpp"

namespace py = pybind11;
using namespace empnet;

namespace {

py::dict report_dict(const EvalReport& rep) {
  py::list conf;
  for (const auto& row : rep.confusion.counts) {
    py::list r;
    for (std::int64_t c : row) r.append(c);
    conf.append(r);
  }
  py::dict d;
  d["label_target"] = to_string(rep.label_target);
  d["n"] = rep.n;
  d["accuracy"] = rep.accuracy;
  d["weighted_f1"] = rep.weighted_f1;
  d["macro_f1"] = rep.macro_f1;
  d["confusion"] = conf;
  return d;
}

py::dict record_dict(const EpochRecord& r) {
  py::dict d;
  d["epoch"] = r.epoch;
  d["l_s"] = r.l_s;
  d["l_t"] = r.l_t;
  d["total"] = r.total;
  d["val_accuracy"] = r.val_accuracy;
  d["val_weighted_f1"] = r.val_weighted_f1;
  d["seconds"] = r.seconds;
  return d;
}

struct PyTrainRun {
  TrainRun run;

  py::list history() const {
    py::list out;
    for (const EpochRecord& r : run.history) out.append(record_dict(r));
    return out;
  }
  py::dict evaluate_best(const Dataset& ds, const std::string& label) const {
    ModelParams p = restore_best(run.final_state);
    return report_dict(evaluate(p, ds, parse_label_target(label)));
  }
  void save(const std::string& path) const { save_checkpoint(run.final_state, path); }
};

}  // namespace

PYBIND11_MODULE(_empnet, m) {
  m.doc() = "multi-modal empathy model: training, evaluation, topic supervision";
  m.attr("__version__") = "0.1.0";

  py::register_exception<Error>(m, "EmpnetError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", [](const Dataset& ds) { return ds.samples.size(); })
      .def_property_readonly(
          "dims",
          [](const Dataset& ds) { return py::make_tuple(ds.dims.d_t, ds.dims.d_a, ds.dims.d_v); })
      .def("labels",
           [](const Dataset& ds, const std::string& target) {
             const LabelTarget t = parse_label_target(target);
             std::vector<int> out;
             out.reserve(ds.samples.size());
             for (const ConversationSample& s : ds.samples) out.push_back(label_of(s.labels, t));
             return out;
           },
           py::arg("target"))
      .def("save", [](const Dataset& ds, const std::string& path) { save_dataset(ds, path); },
           py::arg("path"))
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def(
      "synth",
      [](const std::string& task, std::size_t n, std::uint64_t seed) {
        SynthConfig sc;
        sc.task = parse_synth_task(task);
        sc.n_samples = n;
        return synth_generate(sc, seed);
      },
      py::arg("task"), py::arg("n"), py::arg("seed"),
      "Generate a synthetic dataset: unimodal-linear, cross-modal-parity, or topic-correlated.");
  m.def("load_dataset", [](const std::string& path) { return load_dataset(path); },
        py::arg("path"));

  m.def("default_config", [] { return to_json(TrainConfig{}); },
        "The full training config with every default filled in, as JSON.");

  py::class_<PyTrainRun>(m, "TrainRun")
      .def_property_readonly("history", &PyTrainRun::history)
      .def_property_readonly(
          "best_val_accuracy",
          [](const PyTrainRun& r) { return r.run.final_state.best_val_accuracy; })
      .def_property_readonly("best_epoch",
                             [](const PyTrainRun& r) { return r.run.final_state.best_epoch; })
      .def_property_readonly("config", [](const PyTrainRun& r) { return to_json(r.run.config); })
      .def("evaluate", &PyTrainRun::evaluate_best, py::arg("dataset"), py::arg("label"),
           "Score the best-validation weights on a dataset.")
      .def("save_checkpoint", &PyTrainRun::save, py::arg("path"));

  m.def(
      "train",
      [](const Dataset& tr, const Dataset& va, const std::string& config_json) {
        return PyTrainRun{train(tr, va, parse_train_config(config_json))};
      },
      py::arg("train"), py::arg("val"), py::arg("config") = "{}",
      "Fit the model; config is a JSON object, absent keys take their defaults.");

  m.def(
      "evaluate_checkpoint",
      [](const std::string& path, const Dataset& ds, const std::string& label) {
        Checkpoint ck = load_checkpoint(path);
        ModelParams p = restore_best(ck);
        return report_dict(evaluate(p, ds, parse_label_target(label)));
      },
      py::arg("path"), py::arg("dataset"), py::arg("label"));

  py::class_<LdaModel>(m, "LdaModel")
      .def_property_readonly("topics", [](const LdaModel& m_) { return m_.topics; })
      .def_property_readonly("vocab_size", [](const LdaModel& m_) { return m_.vocab.size(); })
      .def_property_readonly("docs", [](const LdaModel& m_) { return m_.corpus.size(); })
      .def(
          "top_words",
          [](const LdaModel& m_, std::size_t k, std::size_t n) { return top_words(m_, k, n); },
          py::arg("topic"), py::arg("n") = 10)
      .def(
          "doc_distribution",
          [](const LdaModel& m_, std::size_t d) {
            return doc_topic_distribution(m_, d).data();
          },
          py::arg("doc"))
      .def("save", [](const LdaModel& m_, const std::string& path) { save_lda(m_, path); },
           py::arg("path"));

  m.def(
      "lda_fit",
      [](const std::vector<std::vector<std::string>>& docs, std::size_t topics,
         std::size_t sweeps, double alpha, double beta, std::uint64_t seed) {
        LdaConfig lc;
        lc.topics = topics;
        lc.sweeps = sweeps;
        lc.alpha = alpha;
        lc.beta = beta;
        return lda_fit(docs, lc, seed);
      },
      py::arg("docs"), py::arg("topics") = 10, py::arg("sweeps") = 500, py::arg("alpha") = 0.1,
      py::arg("beta") = 0.01, py::arg("seed") = 0,
      "Collapsed Gibbs topic model over tokenized documents.");
  m.def("load_lda", [](const std::string& path) { return load_lda(path); }, py::arg("path"));

  m.def(
      "gradcheck",
      [](const std::string& config_json, std::uint64_t seed) {
        return gradient_probe(parse_train_config(config_json), seed).max_rel_error;
      },
      py::arg("config") = "{}", py::arg("seed") = 0,
      "Max relative error of the full loss gradient against central differences.");

  m.def(
      "run_ablation",
      [](const std::string& suite, const std::string& config_json, const Dataset& tr,
         const Dataset& va, const Dataset& te) {
        py::list out;
        for (const AblationRow& r :
             run_ablation(parse_ablation_suite(suite), parse_train_config(config_json), tr, va,
                          te)) {
          py::dict row;
          row["variant"] = r.variant;
          row["accuracy"] = r.accuracy;
          row["weighted_f1"] = r.weighted_f1;
          if (r.train_topic_kl) row["train_kl"] = *r.train_topic_kl;
          out.append(row);
        }
        return out;
      },
      py::arg("suite"), py::arg("config"), py::arg("train"), py::arg("val"), py::arg("test"),
      "Train and score the modality or sdat variant family; one dict per row.");
}
