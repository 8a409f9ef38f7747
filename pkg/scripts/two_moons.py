"""Few-shot two-moons transfer: DIAL vs the source-only baseline over several seeds.

Writes per-seed accuracies, embedding W1 before/after training, and a PCA
scatter of the first seed's embeddings to --out.
"""
import argparse
import json
from pathlib import Path

import numpy as np

from dial.datagen import gen_two_moons
from dial.evaluation import pair_accuracy_on_truth, project_embeddings
from dial.model import init_params
from dial.oracle import w1_exact_assignment
from dial.plots import scatter_svg
from dial.trainer import TrainConfig, train


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(Path(__file__).parents[1] / "configs" / "dial_moons.json"))
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--out", default="runs/two_moons")
    a = ap.parse_args()
    train_cfg = json.loads(Path(a.config).read_text())["train"]
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in [int(s) for s in a.seeds.split(",")]:
        src, tgt, _ = gen_two_moons(50, 500, "fewshot", 0.1, seed)
        _, ev, _ = gen_two_moons(50, 500, "fewshot", 0.1, seed + 100)
        hs, ht, _ = gen_two_moons(128, 128, "fewshot", 0.1, seed + 1000)
        cfg = TrainConfig.from_dict({**train_cfg, "seed": seed})
        init = init_params(2, cfg.embed_dims, cfg.critic_dims,
                           np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[0]))
        row = {"seed": seed}
        xs, xt = hs.examples.inputs(), ht.examples.inputs()
        w0 = w1_exact_assignment(init.embed(xs), init.embed(xt))
        for name, c in (("dial", cfg), ("src_pref", cfg.src_pref())):
            p = train(src.preferences, tgt.examples.unlabeled(), c, params=init).params
            row[f"{name}_acc"] = pair_accuracy_on_truth(p, ev.examples)
            row[f"{name}_w1_ratio"] = w1_exact_assignment(p.embed(xs), p.embed(xt)) / w0
            if seed == int(a.seeds.split(",")[0]):
                z = project_embeddings(p, np.concatenate([xs, xt]))
                tags = [f"{d}/{'pos' if f > 0.5 else 'neg'}" for d, f in
                        zip(["src"] * len(xs) + ["tgt"] * len(xt), np.concatenate([hs.examples.f, ht.examples.f]))]
                scatter_svg(out / f"embeddings_{name}.svg", z[:, 0], z[:, 1], tags, title=f"{name} embeddings")
        print(json.dumps(row), flush=True)
        rows.append(row)
    summary = {k: float(np.mean([r[k] for r in rows])) for k in rows[0] if k != "seed"}
    (out / "summary.json").write_text(json.dumps({"runs": rows, "mean": summary}, indent=2) + "\n")
    print(json.dumps(summary))


if __name__ == "__main__":
    main()
