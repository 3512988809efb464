import json
import math

import pytest

import empnet


def test_synth_and_roundtrip(tmp_path):
    ds = empnet.synth("unimodal-linear", 40, seed=1)
    assert len(ds) == 40
    assert ds.dims == (8, 6, 6)
    path = tmp_path / "ds.jsonl"
    ds.save(str(path))
    again = empnet.load_dataset(str(path))
    assert again == ds
    assert set(again.labels("ee")) <= {0, 1, 2}


def test_default_config_is_json():
    cfg = json.loads(empnet.default_config())
    assert cfg["epochs"] == 60
    assert cfg["weights"] == {"w_s": 0.84, "w_t": 0.16}


def quick_cfg(**overrides):
    cfg = {
        "epochs": 4,
        "batch_size": 8,
        "hidden": 6,
        "topics": 2,
        "lda": {"sweeps": 60},
        "seed": 5,
    }
    cfg.update(overrides)
    return json.dumps(cfg)


def test_train_evaluate_checkpoint(tmp_path):
    tr = empnet.synth("topic-correlated", 60, seed=2)
    va = empnet.synth("topic-correlated", 20, seed=3)
    run = empnet.train(tr, va, quick_cfg())

    assert [r["epoch"] for r in run.history] == [1, 2, 3, 4]
    for r in run.history:
        assert r["total"] == pytest.approx(0.84 * r["l_s"] + 0.16 * r["l_t"], abs=1e-12)
    assert 0.0 <= run.best_val_accuracy <= 1.0

    rep = run.evaluate(va, "ee")
    assert rep["n"] == 20
    assert sum(sum(row) for row in rep["confusion"]) == 20

    ck = tmp_path / "model.bin"
    run.save_checkpoint(str(ck))
    rep2 = empnet.evaluate_checkpoint(str(ck), va, "ee")
    assert rep2 == rep


def test_training_is_deterministic():
    tr = empnet.synth("topic-correlated", 40, seed=4)
    va = empnet.synth("topic-correlated", 12, seed=5)
    a = empnet.train(tr, va, quick_cfg())
    b = empnet.train(tr, va, quick_cfg())

    def stable(history):  # drop the wall-clock column
        return [{k: v for k, v in r.items() if k != "seconds"} for r in history]

    assert stable(a.history) == stable(b.history)
    assert a.best_epoch == b.best_epoch


def test_lda_fit_separates_planted_topics(tmp_path):
    docs = []
    for d in range(30):
        prefix = "a" if d % 2 == 0 else "b"
        docs.append([f"{prefix}{i % 5}" for i in range(20)])
    model = empnet.lda_fit(docs, topics=2, sweeps=200, seed=1)
    assert model.topics == 2
    tops = [{w for w, _ in model.top_words(k, 3)} for k in range(2)]
    # each topic's top words come from a single planted vocabulary
    for words in tops:
        assert all(w.startswith("a") for w in words) or all(w.startswith("b") for w in words)
    dist = model.doc_distribution(0)
    assert sum(dist) == pytest.approx(1.0, abs=1e-9)

    path = tmp_path / "lda.json"
    model.save(str(path))
    loaded = empnet.load_lda(str(path))
    assert loaded.top_words(0, 3) == model.top_words(0, 3)


def test_gradcheck_under_gate():
    assert empnet.gradcheck(quick_cfg(), seed=3) < 1e-4


def test_ablation_rows():
    tr = empnet.synth("topic-correlated", 40, seed=6)
    va = empnet.synth("topic-correlated", 12, seed=7)
    rows = empnet.run_ablation("sdat", quick_cfg(epochs=2), tr, va, va)
    assert [r["variant"] for r in rows] == [
        "without-topic-supervision",
        "with-topic-supervision",
    ]
    assert all("train_kl" in r for r in rows)


def test_errors_surface_as_python_exceptions():
    tr = empnet.synth("unimodal-linear", 10, seed=8)
    va = empnet.synth("unimodal-linear", 5, seed=9)
    with pytest.raises(ValueError):
        empnet.train(tr, va, "not json")
    with pytest.raises(ValueError):
        empnet.synth("no-such-task", 5, seed=0)
    with pytest.raises(ValueError):
        # unimodal samples carry no documents; topic supervision cannot run
        empnet.train(tr, va, quick_cfg(sdat_enabled=True))
