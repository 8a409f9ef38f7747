import csv
import json

import numpy as np
import pytest

from dial.cli import RunManifest, main
from dial.data import ExampleSet, write_jsonl
from dial.model import Checkpoint, DialParams, MLP

FAST = {"lambda_da": 1.0, "lambda_gp": 10.0, "lr_main": 0.003, "lr_critic": 0.01, "batch_src": 8,
        "batch_tgt": 16, "epochs": 2, "seed": 0, "eval_every": 2, "embed_dims": [8, 4], "critic_dims": [4]}


@pytest.fixture
def moons(tmp_path):
    assert main(["gen", "--task", "two-moons", "--n-src", "30", "--n-tgt", "60", "--seed", "7",
                 "--out", str(tmp_path / "m")]) == 0
    return tmp_path / "m"


def write_config(path, data_dir, method="dial", **extra):
    cfg = {"method": method, "train": FAST,
           "data": {"source": str(data_dir / "src_prefs.jsonl"), "target": str(data_dir / "tgt_unlabeled.jsonl"),
                    "eval_target": str(data_dir / "tgt_truth.jsonl")}}
    cfg.update(extra)
    path.write_text(json.dumps(cfg))
    return path


def test_gen_writes_four_files_and_is_byte_identical(tmp_path, moons):
    assert sorted(p.name for p in moons.iterdir()) == ["manifest.json", "src_prefs.jsonl", "tgt_truth.jsonl",
                                                       "tgt_unlabeled.jsonl"]
    assert main(["gen", "--task", "two-moons", "--n-src", "30", "--n-tgt", "60", "--seed", "7",
                 "--out", str(tmp_path / "again")]) == 0
    for p in moons.iterdir():
        assert p.read_bytes() == (tmp_path / "again" / p.name).read_bytes()


def test_gen_refuses_overwrite_without_force(moons):
    args = ["gen", "--task", "two-moons", "--n-src", "30", "--n-tgt", "60", "--out", str(moons)]
    assert main(args) == 2
    assert main(args + ["--force"]) == 0


def test_force_never_clears_foreign_directory(tmp_path):
    (tmp_path / "mine").mkdir()
    (tmp_path / "mine" / "notes.txt").write_text("keep")
    assert main(["gen", "--task", "odd-one-out", "--n-src", "5", "--n-tgt", "5", "--out", str(tmp_path / "mine"),
                 "--force"]) == 2
    assert (tmp_path / "mine" / "notes.txt").read_text() == "keep"


def test_unknown_task_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["gen", "--task", "spiral", "--out", str(tmp_path / "x")])
    assert e.value.code == 2


def test_gen_other_tasks(tmp_path):
    assert main(["gen", "--task", "odd-one-out", "--n-src", "6", "--n-tgt", "4", "--out", str(tmp_path / "o")]) == 0
    first = json.loads((tmp_path / "o" / "src_prefs.jsonl").read_text().splitlines()[0])
    assert len(first["x"]) == 40 and len(first["y_neg"]) == 4
    assert main(["gen", "--task", "gaussian-pair", "--n", "16", "--dim", "1", "--out", str(tmp_path / "g")]) == 0


def test_out_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("DIAL_OUT_ROOT", str(tmp_path / "root"))
    assert main(["gen", "--task", "gaussian-pair", "--n", "8", "--out", "rel"]) == 0
    assert (tmp_path / "root" / "rel" / "src_points.jsonl").exists()


def test_train_outputs_and_manifest(tmp_path, moons, capsys):
    cfg = write_config(tmp_path / "c.json", moons)
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "run")]) == 0
    run = tmp_path / "run"
    final = json.loads((run / "final_metrics.json").read_text())
    assert final["method"] == "dial" and 0.0 <= final["eval_accuracy_tgt"] <= 1.0
    rows = list(csv.DictReader(open(run / "metrics.csv")))
    assert len(rows) == final["steps"] == 4
    assert sorted(p.name for p in (run / "checkpoints").iterdir()) == ["epoch_001.json", "epoch_002.json"]
    ck = json.loads((run / "checkpoint.json").read_text())
    assert set(ck) == {"config", "theta", "phi", "psi", "rng_state", "step"}
    m = RunManifest.load(run / "manifest.json")
    assert m.finished and m.verify() == [] and m.seed == 0
    (moons / "src_prefs.jsonl").write_text((moons / "src_prefs.jsonl").read_text() + "\n ")
    assert m.verify() == [str(moons / "src_prefs.jsonl")]


def test_train_is_reproducible(tmp_path, moons):
    cfg = write_config(tmp_path / "c.json", moons)
    for k in range(2):
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / f"r{k}")]) == 0
    assert (tmp_path / "r0" / "metrics.csv").read_bytes() == (tmp_path / "r1" / "metrics.csv").read_bytes()
    assert (tmp_path / "r0" / "checkpoint.json").read_bytes() == (tmp_path / "r1" / "checkpoint.json").read_bytes()


def test_src_pref_method_matches_disabled_dial(tmp_path, moons):
    a = write_config(tmp_path / "a.json", moons, method="src-pref")
    b = write_config(tmp_path / "b.json", moons, train={**FAST, "lambda_da": 0.0, "critic_enabled": False})
    assert main(["train", "--config", str(a), "--out", str(tmp_path / "a")]) == 0
    assert main(["train", "--config", str(b), "--out", str(tmp_path / "b")]) == 0
    fa = json.loads((tmp_path / "a" / "final_metrics.json").read_text())
    fb = json.loads((tmp_path / "b" / "final_metrics.json").read_text())
    fa.pop("method"), fb.pop("method")
    assert fa == fb and fa["wd_gap"] is None
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()


def test_schema_violations_exit_2(tmp_path, moons, capsys):
    bad = write_config(tmp_path / "bad.json", moons, colour="blue")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "colour" in capsys.readouterr().err
    bad = write_config(tmp_path / "bad2.json", moons, train={**FAST, "learning_rate": 1})
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "y")]) == 2
    assert "learning_rate" in capsys.readouterr().err
    missing = write_config(tmp_path / "m.json", moons)
    cfg = json.loads(missing.read_text())
    cfg["data"]["source"] = str(tmp_path / "nope.jsonl")
    missing.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(missing), "--out", str(tmp_path / "z")]) == 2


def test_nan_abort_exits_3(tmp_path, moons, capsys):
    bad = moons / "nan_prefs.jsonl"
    write_jsonl(bad, [{"x": [], "y_pos": [float("nan"), 0.0], "y_neg": [[0.0, 0.0]]}] * 4)
    cfg = write_config(tmp_path / "c.json", moons)
    obj = json.loads(cfg.read_text())
    obj["data"]["source"] = str(bad)
    cfg.write_text(json.dumps(obj))
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 3
    assert "step 1" in capsys.readouterr().err


def constant_checkpoint(path, dim=2):
    p = DialParams(MLP([np.eye(dim)], [np.zeros(dim)], ["identity"]), np.zeros(dim),
                   MLP([np.zeros((dim, 1))], [np.zeros(1)], ["identity"]))
    Checkpoint(p).save(path)
    return path


def test_eval_constant_model_is_half(tmp_path, moons, capsys):
    ck = constant_checkpoint(tmp_path / "c.json")
    assert main(["eval", "--checkpoint", str(ck), "--data", str(moons / "tgt_truth.jsonl"),
                 "--metrics", "accuracy,disagreement"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["accuracy"] == 0.5 and out["disagreement"] == 0.5
    assert main(["eval", "--checkpoint", str(ck), "--data", str(moons / "src_prefs.jsonl")]) == 0
    assert json.loads(capsys.readouterr().out)["accuracy"] == 0.5


def test_eval_dim_mismatch_exit_2(tmp_path, moons):
    ck = constant_checkpoint(tmp_path / "c.json", dim=3)
    assert main(["eval", "--checkpoint", str(ck), "--data", str(moons / "tgt_truth.jsonl")]) == 2


def test_bound_identical_samples(tmp_path, moons):
    ck = constant_checkpoint(tmp_path / "c.json")
    out = tmp_path / "bound_report.json"
    assert main(["bound", "--checkpoint", str(ck), "--src", str(moons / "tgt_truth.jsonl"),
                 "--tgt", str(moons / "tgt_truth.jsonl"), "--lemma-triples", "200", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["holds"] and rep["W1"] == 0.0
    assert set(rep) >= {"eps_S", "eps_T", "K", "L_sigma", "W1", "rhs", "holds"}


def test_bound_size_mismatch_exit_2(tmp_path, moons):
    ck = constant_checkpoint(tmp_path / "c.json")
    write_jsonl(tmp_path / "few.jsonl", ExampleSet(np.zeros((3, 0)), np.zeros((3, 2)), np.ones(3)).to_records(True))
    assert main(["bound", "--checkpoint", str(ck), "--src", str(tmp_path / "few.jsonl"),
                 "--tgt", str(moons / "tgt_truth.jsonl"), "--out", str(tmp_path / "b.json")]) == 2


def test_project_has_four_tag_classes(tmp_path, moons):
    cfg = write_config(tmp_path / "c.json", moons)
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "run")]) == 0
    assert main(["project", "--checkpoint", str(tmp_path / "run" / "checkpoint.json"),
                 "--src", str(moons / "src_prefs.jsonl"), "--tgt", str(moons / "tgt_truth.jsonl"),
                 "--out", str(tmp_path / "p")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "p" / "embeddings.csv")))
    assert list(rows[0]) == ["pc1", "pc2", "domain_tag", "label_tag"]
    assert {(r["domain_tag"], r["label_tag"]) for r in rows} == {("src", "pos"), ("src", "neg"),
                                                                ("tgt", "pos"), ("tgt", "neg")}
    assert (tmp_path / "p" / "embeddings.svg").read_text().startswith("<svg")


def test_oracle_wd(tmp_path, capsys):
    write_jsonl(tmp_path / "p.jsonl", [{"p": [v]} for v in (0.0, 2.0)])
    write_jsonl(tmp_path / "q.jsonl", [{"p": [v]} for v in (1.0, 3.0)])
    assert main(["oracle-wd", "--p", str(tmp_path / "p.jsonl"), "--q", str(tmp_path / "q.jsonl")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out == {"w1": 1.0, "n": 2, "dim": 1, "method": "1d"}
    assert main(["oracle-wd", "--p", str(tmp_path / "p.jsonl"), "--q", str(tmp_path / "q.jsonl"),
                 "--method", "assignment"]) == 0
    assert json.loads(capsys.readouterr().out)["w1"] == 1.0


def test_scaling_small_grid(tmp_path):
    base = {"task": "two-moons", "gen": {"shift_mode": "fewshot"}, "n_eval": 40,
            "train": {**FAST, "epochs": 1}}
    (tmp_path / "s.json").write_text(json.dumps(base))
    with pytest.warns(UserWarning, match="skipped"):
        code = main(["scaling", "--config", str(tmp_path / "s.json"), "--budget", "40", "--grid", "0,0.5,0.95",
                     "--seeds", "0,1", "--out", str(tmp_path / "sc")])
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "sc" / "scaling.csv")))
    assert [float(r["target_fraction"]) for r in rows] == [0.0, 0.5]
    summary = json.loads((tmp_path / "sc" / "scaling_summary.json").read_text())
    # the no-target column runs the same source-only path as the baseline
    assert float(rows[0]["mean_accuracy"]) == pytest.approx(summary["src_pref_baseline"]["mean_accuracy"])
    assert (tmp_path / "sc" / "scaling.svg").exists()


def test_scaling_rejects_bad_fraction(tmp_path):
    (tmp_path / "s.json").write_text(json.dumps({"train": FAST}))
    assert main(["scaling", "--config", str(tmp_path / "s.json"), "--grid", "1.5", "--out", str(tmp_path / "o")]) == 2
