"""Odd-one-out with disjoint base categories: top-1 target accuracy per epoch, DIAL vs source-only."""
import argparse
import json
from pathlib import Path

import numpy as np

from dial.datagen import gen_odd_one_out
from dial.evaluation import top1_accuracy
from dial.plots import line_svg
from dial.trainer import TrainConfig, train


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(Path(__file__).parents[1] / "configs" / "dial_odd_one_out.json"))
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--out", default="runs/odd_one_out")
    a = ap.parse_args()
    train_cfg = json.loads(Path(a.config).read_text())["train"]
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    curves = {"dial": [], "src_pref": []}
    for seed in [int(s) for s in a.seeds.split(",")]:
        src, tgt, _ = gen_odd_one_out(5, 100, 0, 1, n=a.n, seed=seed)
        _, ev, _ = gen_odd_one_out(5, 100, 0, 1, n=200, seed=seed + 100)
        cfg = TrainConfig.from_dict({**train_cfg, "seed": seed})
        per_epoch = -(-a.n // cfg.batch_src)
        for name, c in (("dial", cfg), ("src_pref", cfg.src_pref())):
            traj = []

            def record(step, p, traj=traj):
                if step % per_epoch == 0:
                    traj.append(top1_accuracy(p, ev.examples))

            train(src.preferences, tgt.examples.unlabeled(), c, on_step=record)
            curves[name].append(traj)
            print(seed, name, np.round(traj, 3).tolist(), flush=True)
    means = {k: np.mean(v, axis=0) for k, v in curves.items()}
    epochs = np.arange(1, len(means["dial"]) + 1)
    line_svg(out / "top1_by_epoch.svg", epochs, {k: v.tolist() for k, v in means.items()},
             title="odd-one-out target top-1", xlabel="epoch", ylabel="top-1 accuracy")
    (out / "curves.json").write_text(json.dumps({k: [list(map(float, t)) for t in v] for k, v in curves.items()},
                                                indent=2) + "\n")
    print(json.dumps({k: float(v[-1]) for k, v in means.items()}))


if __name__ == "__main__":
    main()
