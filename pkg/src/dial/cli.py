"""Command-line frontend: gen | train | eval | bound | project | oracle-wd | scaling.

Exit codes: 0 ok, 1 bound violated, 2 usage / config / data error, 3 numeric failure.
Relative output paths resolve against $DIAL_OUT_ROOT when it is set.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import shutil
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .data import DataError, ExampleSet, PreferenceSet, file_sha256, load_dataset, read_jsonl, write_jsonl
from .losses import ConfigError
from .model import Checkpoint, ConvergenceError
from .trainer import NumericalError, TrainConfig, train

OUT_ROOT_ENV = "DIAL_OUT_ROOT"
EXIT_OK, EXIT_BOUND, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


def out_path(p) -> Path:
    p = Path(p)
    root = os.environ.get(OUT_ROOT_ENV)
    return Path(root) / p if root and not p.is_absolute() else p


def prepare_dir(path: Path, force: bool, marker: str = MANIFEST) -> Path:
    """Create ``path``; an existing non-empty directory needs --force and must be one of ours."""
    if path.exists() and any(path.iterdir()):
        if not force:
            raise UsageError(f"{path} exists and is not empty; pass --force to overwrite")
        if not (path / marker).exists():
            raise UsageError(f"{path} has no {marker}; refusing to clear a directory this tool did not create")
        shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def _clean(v):
    """JSON-safe copy: NaN becomes null, numpy scalars become Python numbers."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


# ---------------------------------------------------------------- manifest


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    seed: int
    datasets: dict[str, str]            # path -> sha256
    version: str = __version__
    started: str | None = None
    finished: str | None = None
    outputs: list[str] = field(default_factory=list)

    def save(self, path) -> None:
        dump_json(Path(path), asdict(self))

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))

    def verify(self) -> list[str]:
        """Dataset paths whose current content no longer matches the recorded hash."""
        bad = []
        for p, h in self.datasets.items():
            if not Path(p).exists() or file_sha256(p) != h:
                bad.append(p)
        return bad


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


# ---------------------------------------------------------------- gen


def cmd_gen(a) -> int:
    from .datagen import gen_gaussian_pair, gen_odd_one_out, gen_two_moons

    out = prepare_dir(out_path(a.out), a.force)
    args = {k: v for k, v in vars(a).items() if k not in ("func", "out", "force", "cmd")}
    if a.task == "gaussian-pair":
        p, q = gen_gaussian_pair(a.dim, a.mean_shift, a.n, a.seed)
        files = {"src_points.jsonl": ExampleSet(np.zeros((len(p), 0)), p).to_records(),
                 "tgt_points.jsonl": ExampleSet(np.zeros((len(q), 0)), q).to_records()}
    else:
        if a.task == "two-moons":
            src, tgt, _ = gen_two_moons(a.n_src, a.n_tgt, a.shift, a.noise, a.seed, arc_fraction=a.arc_fraction,
                                        arc_start=a.arc_start, angle=a.angle, offset=a.offset)
        else:
            src, tgt, _ = gen_odd_one_out(a.categories, a.items_per_cat, a.src_cat, a.tgt_cat, n=a.n_src,
                                          seed=a.seed, n_tgt=a.n_tgt)
        files = {"src_prefs.jsonl": src.preferences.to_records(),
                 "tgt_unlabeled.jsonl": tgt.examples.to_records(),
                 "tgt_truth.jsonl": tgt.examples.to_records(with_f=True)}
    for name, recs in files.items():
        write_jsonl(out / name, recs)
    # no timestamps, so identical arguments give identical bytes
    dump_json(out / MANIFEST, {"task": a.task, "args": args, "version": __version__,
                               "files": {n: file_sha256(out / n) for n in files}})
    print(out)
    return EXIT_OK


# ---------------------------------------------------------------- train

RUN_KEYS = {"method", "data", "train", "out_dir", "description"}
DATA_KEYS = {"source", "target", "eval_source", "eval_target"}


def load_run_config(path) -> tuple[str, dict, TrainConfig, str | None]:
    """Returns (method, resolved data paths, TrainConfig, out_dir)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    bad = sorted(set(raw) - RUN_KEYS) + sorted(f"data.{k}" for k in set(raw.get("data", {})) - DATA_KEYS)
    if bad:
        raise ConfigError(f"unknown config keys: {', '.join(bad)}")
    method = raw.get("method", "dial")
    if method not in ("dial", "src-pref"):
        raise ConfigError(f"method must be dial or src-pref, got {method!r}")
    data = dict(raw.get("data", {}))
    if "source" not in data:
        raise ConfigError("data.source is required")
    if method == "dial" and "target" not in data:
        raise ConfigError("data.target is required for method dial")
    for k, v in data.items():
        p = Path(v)
        data[k] = str(p if p.is_absolute() else path.parent / p)
        if not Path(data[k]).exists():
            raise UsageError(f"dataset not found: {data[k]}")
    try:
        cfg = TrainConfig.from_dict(raw.get("train", {}))
    except TypeError as e:
        raise ConfigError(str(e)) from None
    if method == "src-pref":
        cfg = cfg.src_pref()
    out_dir = raw.get("out_dir")
    if out_dir is not None and not Path(out_dir).is_absolute():
        out_dir = str(path.parent / out_dir)
    return method, data, cfg, out_dir


def _expect(obj, kind, path):
    if not isinstance(obj, kind):
        raise DataError(f"{path}: expected {kind.__name__} records")
    return obj


def cmd_train(a) -> int:
    method, data, cfg, cfg_out = load_run_config(a.config)
    out_dir = a.out or cfg_out
    if out_dir is None:
        raise UsageError("no output directory: pass --out or set out_dir in the config")
    out = prepare_dir(out_path(out_dir), a.force)
    source = _expect(load_dataset(data["source"]), PreferenceSet, data["source"])
    target = load_dataset(data["target"]) if "target" in data else None
    if target is not None:
        target = _expect(target, ExampleSet, data["target"]).unlabeled()
    src_eval = _expect(load_dataset(data["eval_source"]), PreferenceSet, "eval_source") if "eval_source" in data \
        else None
    tgt_eval = _expect(load_dataset(data["eval_target"]), ExampleSet, "eval_target") if "eval_target" in data \
        else None
    if tgt_eval is not None and tgt_eval.f is None:
        raise DataError("eval_target needs ground-truth scores (field f)")

    manifest = RunManifest(config_hash(cfg.to_dict()), cfg.seed, {p: file_sha256(p) for p in data.values()},
                           started=_now())
    manifest.save(out / MANIFEST)
    result = train(source, target, cfg, src_eval=src_eval, tgt_eval=tgt_eval, out_dir=out)
    dump_json(out / "config.json", {"method": method, "train": cfg.to_dict(), "data": data})
    final = _clean({"method": method, **result.final_metrics})
    dump_json(out / "final_metrics.json", final)
    manifest.finished = _now()
    manifest.outputs = sorted(str(p.relative_to(out)) for p in out.rglob("*") if p.is_file())
    manifest.save(out / MANIFEST)
    print(json.dumps(final, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------- eval / bound / project


def _load_params(path):
    try:
        return Checkpoint.load(path).params
    except FileNotFoundError:
        raise UsageError(f"checkpoint not found: {path}") from None
    except (KeyError, json.JSONDecodeError) as e:
        raise DataError(f"{path}: malformed checkpoint ({e})") from None


def _check_dim(params, ds, path):
    d = ds.input_dim if isinstance(ds, ExampleSet) else ds.x_dim + ds.y_dim
    if d != params.input_dim:
        raise DataError(f"{path}: input dim {d} does not match checkpoint dim {params.input_dim}")


EVAL_METRICS = ("accuracy", "top1", "disagreement", "correlation")


def evaluate_dataset(params, ds, metrics) -> dict:
    from .evaluation import (DegenerateError, correlations, expected_disagreement, pair_accuracy_on_truth,
                             preference_accuracy, top1_accuracy)
    out = {"n": len(ds)}
    if isinstance(ds, PreferenceSet):
        if "accuracy" in metrics:
            out["accuracy"] = preference_accuracy(params, ds)
        return out
    if ds.f is None:
        raise DataError("example file has no ground-truth scores (field f); nothing to evaluate")
    if "accuracy" in metrics:
        out["accuracy"] = pair_accuracy_on_truth(params, ds)
    if "top1" in metrics:
        out["top1"] = top1_accuracy(params, ds)
    if "disagreement" in metrics:
        out["disagreement"] = expected_disagreement(params, ds)
    if "correlation" in metrics:
        try:
            out["pearson"], out["spearman"] = correlations(params.rewards(ds.inputs()), ds.f)
        except DegenerateError as e:
            out["pearson"] = out["spearman"] = None
            out["correlation_note"] = str(e)
    return out


def cmd_eval(a) -> int:
    params = _load_params(a.checkpoint)
    metrics = [m.strip() for m in a.metrics.split(",") if m.strip()]
    bad = [m for m in metrics if m not in EVAL_METRICS]
    if bad:
        raise UsageError(f"unknown metrics: {', '.join(bad)} (choose from {', '.join(EVAL_METRICS)})")
    ds = load_dataset(a.data)
    _check_dim(params, ds, a.data)
    res = _clean(evaluate_dataset(params, ds, metrics))
    if a.out:
        p = out_path(a.out)
        p.parent.mkdir(parents=True, exist_ok=True)
        dump_json(p, res)
    print(json.dumps(res, sort_keys=True))
    return EXIT_OK


def _truth_examples(path) -> ExampleSet:
    """Example file with f, or a preference file read as chosen = 1, rejected = 0 per context."""
    ds = load_dataset(path)
    if isinstance(ds, PreferenceSet):
        n, k = len(ds), ds.k
        x = np.repeat(ds.x, k + 1, axis=0)
        y = np.concatenate([ds.y_pos[:, None], ds.y_neg], axis=1).reshape(n * (k + 1), -1)
        f = np.tile(np.r_[1.0, np.zeros(k)], n)
        return ExampleSet(x, y, f)
    if ds.f is None:
        raise DataError(f"{path}: bound check needs ground-truth scores (field f)")
    return ds


def cmd_bound(a) -> int:
    from .evaluation import lemma1_check, theorem1_check
    params = _load_params(a.checkpoint)
    src, tgt = _truth_examples(a.src), _truth_examples(a.tgt)
    if a.n:
        src, tgt = src.subset(np.arange(min(a.n, len(src)))), tgt.subset(np.arange(min(a.n, len(tgt))))
    _check_dim(params, src, a.src)
    _check_dim(params, tgt, a.tgt)
    rep = theorem1_check(params, src, tgt)
    if a.lemma_triples:
        rep.extras["lemma1_max_ratio"] = lemma1_check(params, a.lemma_triples, a.seed, pool=tgt)
    out = _clean(rep.to_dict())
    p = out_path(a.out)
    p.parent.mkdir(parents=True, exist_ok=True)
    dump_json(p, out)
    print(json.dumps(out, sort_keys=True))
    if not rep.holds or out["extras"].get("lemma1_max_ratio", 0.0) > 1.0:
        print("bound violated: this indicates an implementation bug", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


def _tagged(path, domain) -> tuple[np.ndarray, list[str], list[str]]:
    ds = load_dataset(path)
    if isinstance(ds, PreferenceSet):
        neg = ds.rejected_inputs().reshape(-1, ds.x_dim + ds.y_dim)
        inputs = np.concatenate([ds.chosen_inputs(), neg])
        labels = ["pos"] * len(ds) + ["neg"] * len(neg)
    else:
        inputs = ds.inputs()
        labels = ["unk"] * len(ds) if ds.f is None else ["pos" if v > 0.5 else "neg" for v in ds.f]
    return inputs, [domain] * len(inputs), labels


def cmd_project(a) -> int:
    from .evaluation import project_embeddings
    from .plots import scatter_svg
    params = _load_params(a.checkpoint)
    parts = [_tagged(a.src, "src")] + ([_tagged(a.tgt, "tgt")] if a.tgt else [])
    inputs = np.concatenate([p[0] for p in parts])
    if inputs.shape[1] != params.input_dim:
        raise DataError(f"input dim {inputs.shape[1]} does not match checkpoint dim {params.input_dim}")
    domains = sum((p[1] for p in parts), [])
    labels = sum((p[2] for p in parts), [])
    coords = project_embeddings(params, inputs)
    out = out_path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "embeddings.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pc1", "pc2", "domain_tag", "label_tag"])
        for (c1, c2), d, l in zip(coords, domains, labels):
            w.writerow([repr(float(c1)), repr(float(c2)), d, l])
    scatter_svg(out / "embeddings.svg", coords[:, 0], coords[:, 1], [f"{d}/{l}" for d, l in zip(domains, labels)],
                title="reward-model embeddings (PCA)")
    print(out / "embeddings.csv")
    return EXIT_OK


# ---------------------------------------------------------------- oracle-wd


def _points(path) -> np.ndarray:
    recs = read_jsonl(path)
    if not recs:
        raise DataError(f"{path}: no points")
    if "y" in recs[0]:
        return ExampleSet.from_records(recs).inputs()
    if "p" in recs[0]:
        return np.array([r["p"] for r in recs], dtype=np.float64).reshape(len(recs), -1)
    raise DataError(f"{path}: point records need a 'y' (with optional 'x') or 'p' field")


def cmd_oracle_wd(a) -> int:
    from .oracle import w1_exact_1d, w1_exact_assignment
    p, q = _points(a.p), _points(a.q)
    method = a.method
    if method == "auto":
        method = "1d" if p.shape[1] == 1 and q.shape[1] == 1 else "assignment"
    if method == "1d":
        if p.shape[1] != 1 or q.shape[1] != 1:
            raise DataError("1d method needs one-dimensional points")
        w = w1_exact_1d(p[:, 0], q[:, 0])
    else:
        w = w1_exact_assignment(p, q)
    print(json.dumps({"w1": w, "n": len(p), "dim": int(p.shape[1]), "method": method}))
    return EXIT_OK


# ---------------------------------------------------------------- scaling

SCALING_KEYS = {"task", "gen", "train", "n_eval", "description"}


def _scaling_run(job: dict) -> dict:
    from .datagen import gen_two_moons
    from .evaluation import pair_accuracy_on_truth
    cfg = TrainConfig.from_dict(job["train"])
    cfg = TrainConfig(**{**cfg.to_dict(), "seed": job["seed"]})
    n_src, n_tgt, gen = job["n_src"], job["n_tgt"], job["gen"]
    src, tgt, _ = gen_two_moons(n_src, max(n_tgt, 4), seed=job["seed"], **gen)
    _, ev, _ = gen_two_moons(max(n_src, 4), job["n_eval"], seed=job["seed"] + 100, **gen)
    target = tgt.examples.unlabeled().subset(np.arange(n_tgt)) if n_tgt > 0 else None
    if target is None or job["baseline"]:
        cfg = cfg.src_pref()
    res = train(src.preferences, target, cfg, tgt_eval=ev.examples)
    acc = pair_accuracy_on_truth(res.params, ev.examples)
    row = {k: job[k] for k in ("fraction", "seed", "n_src", "n_tgt", "baseline")}
    row["accuracy"] = acc
    run_dir = Path(job["run_dir"])
    run_dir.mkdir(parents=True, exist_ok=True)
    dump_json(run_dir / "final_metrics.json", _clean({**res.final_metrics, **row}))
    return row


def _mean_se(v: list[float]) -> tuple[float, float]:
    v = np.asarray(v, dtype=np.float64)
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return float(v.mean()), se


def run_scaling(base: dict, budget: int, grid: list[float], seeds: list[int], out: Path, workers: int = 1) -> dict:
    """Mix grid over a fixed data budget plus a source-only baseline at the full budget."""
    bad = sorted(set(base) - SCALING_KEYS)
    if bad:
        raise ConfigError(f"unknown config keys: {', '.join(bad)}")
    if base.get("task", "two-moons") != "two-moons":
        raise ConfigError("scaling currently supports task two-moons")
    if any(not 0.0 <= g < 1.0 for g in grid):
        raise ConfigError("mix fractions must lie in [0, 1)")
    TrainConfig.from_dict(base.get("train", {}))  # validate early
    jobs = []
    kept = []
    for g in grid:
        n_tgt = int(round(g * budget))
        n_src = budget - n_tgt
        if n_src // 2 < 2:
            warnings.warn(f"mix {g}: fewer than 2 source preference pairs; skipped")
            continue
        kept.append(g)
        for s in seeds:
            jobs.append({"fraction": g, "seed": s, "n_src": n_src, "n_tgt": n_tgt, "baseline": False})
    for s in seeds:
        jobs.append({"fraction": 0.0, "seed": s, "n_src": budget, "n_tgt": 0, "baseline": True})
    for j in jobs:
        tag = "baseline" if j["baseline"] else f"mix{j['fraction']:g}"
        j.update(train=base.get("train", {}), gen=base.get("gen", {}), n_eval=int(base.get("n_eval", 500)),
                 run_dir=str(out / "runs" / f"{tag}_seed{j['seed']}"))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_scaling_run, jobs))
    else:
        rows = [_scaling_run(j) for j in jobs]

    base_mean, base_se = _mean_se([r["accuracy"] for r in rows if r["baseline"]])
    table = []
    for g in kept:
        accs = [r["accuracy"] for r in rows if not r["baseline"] and r["fraction"] == g]
        m, se = _mean_se(accs)
        n_tgt = int(round(g * budget))
        table.append({"target_fraction": g, "n_src": budget - n_tgt, "n_tgt": n_tgt, "n_seeds": len(accs),
                      "mean_accuracy": m, "stderr_accuracy": se})
    with open(out / "scaling.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(table[0]) if table else ["target_fraction"], lineterminator="\n")
        w.writeheader()
        for r in table:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    summary = {"budget": budget, "grid": kept, "seeds": seeds,
               "src_pref_baseline": {"mean_accuracy": base_mean, "stderr_accuracy": base_se, "n_src": budget},
               "best_fraction": max(table, key=lambda r: r["mean_accuracy"])["target_fraction"] if table else None,
               "runs": rows}
    dump_json(out / "scaling_summary.json", _clean(summary))
    if table:
        from .plots import line_svg
        xs = [r["target_fraction"] for r in table]
        line_svg(out / "scaling.svg", xs,
                 {"mixed budget": [r["mean_accuracy"] for r in table], "src-pref (full budget)": [base_mean] * len(xs)},
                 {"mixed budget": [r["stderr_accuracy"] for r in table], "src-pref (full budget)": [base_se] * len(xs)},
                 title=f"target accuracy at budget {budget}", xlabel="target fraction", ylabel="pair accuracy")
    return summary


def cmd_scaling(a) -> int:
    try:
        base = json.loads(Path(a.config).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config not found: {a.config}") from None
    try:
        grid = [float(g) for g in a.grid.split(",")]
        seeds = [int(s) for s in a.seeds.split(",")]
    except ValueError as e:
        raise UsageError(f"bad --grid/--seeds: {e}") from None
    out = prepare_dir(out_path(a.out), a.force, marker="scaling_manifest.json")
    dump_json(out / "scaling_manifest.json", {"config": base, "config_hash": config_hash(base), "budget": a.budget,
                                              "grid": grid, "seeds": seeds, "version": __version__})
    s = run_scaling(base, a.budget, grid, seeds, out, a.workers)
    print(json.dumps({"best_fraction": s["best_fraction"], "src_pref_baseline": s["src_pref_baseline"]}))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dial", description="Domain-invariant reward models on synthetic domains.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a source/target dataset")
    g.add_argument("--task", required=True, choices=["two-moons", "odd-one-out", "gaussian-pair"])
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-src", type=int, default=50)
    g.add_argument("--n-tgt", type=int, default=500)
    g.add_argument("--shift", default="fewshot", choices=["fewshot", "rotate", "translate"])
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--arc-fraction", type=float, default=0.4)
    g.add_argument("--arc-start", type=float, default=0.0)
    g.add_argument("--angle", type=float, default=0.0)
    g.add_argument("--offset", type=float, nargs=2, default=[0.0, 0.0])
    g.add_argument("--categories", type=int, default=5)
    g.add_argument("--items-per-cat", type=int, default=100)
    g.add_argument("--src-cat", type=int, default=0)
    g.add_argument("--tgt-cat", type=int, default=1)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--mean-shift", type=float, default=2.0)
    g.add_argument("--n", type=int, default=1024)
    g.add_argument("--force", action="store_true")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train DIAL or the source-only baseline from a JSON config")
    t.add_argument("--config", required=True)
    t.add_argument("--out")
    t.add_argument("--force", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="accuracy / top-1 / disagreement / correlation of a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--metrics", default=",".join(EVAL_METRICS))
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bound", help="check the source-to-target error bound on two equal-size samples")
    b.add_argument("--checkpoint", required=True)
    b.add_argument("--src", required=True)
    b.add_argument("--tgt", required=True)
    b.add_argument("--n", type=int, default=0, help="use the first n examples of each sample")
    b.add_argument("--lemma-triples", type=int, default=10_000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="bound_report.json")
    b.set_defaults(func=cmd_bound)

    p = sub.add_parser("project", help="2-D PCA of embeddings to embeddings.csv and an SVG scatter")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--tgt")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_project)

    o = sub.add_parser("oracle-wd", help="exact W1 between two equal-size JSONL point files")
    o.add_argument("--p", required=True)
    o.add_argument("--q", required=True)
    o.add_argument("--method", default="auto", choices=["auto", "1d", "assignment"])
    o.set_defaults(func=cmd_oracle_wd)

    s = sub.add_parser("scaling", help="target-accuracy curve over source/target mixes at a fixed budget")
    s.add_argument("--config", required=True)
    s.add_argument("--budget", type=int, default=400)
    s.add_argument("--grid", default="0,0.2,0.4,0.6,0.8")
    s.add_argument("--seeds", default="0,1,2")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_scaling)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return a.func(a)
    except NumericalError as e:
        print(f"error: {e} (step {e.step})", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConvergenceError, FloatingPointError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ConfigError, DataError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        ap.print_usage(sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
