"""Alternating critic / embedder optimisation with AdamW updates."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .data import ExampleSet, PreferenceSet
from .losses import (ConfigError, LossBundle, _bt_from_embeddings, critic_objective, embedder_objective,
                     gradient_penalty, score_gap)
from .model import Checkpoint, DialParams, embed, init_params

METRIC_COLUMNS = ["step", "epoch", "src_loss", "wd_gap", "grad_penalty", "critic_loss",
                  "eval_accuracy_src", "eval_accuracy_tgt"]


class NumericalError(FloatingPointError):
    def __init__(self, step: int, component: str):
        self.step = step
        self.component = component
        super().__init__(f"non-finite {component} at step {step}")


@dataclass
class TrainConfig:
    lambda_da: float = 0.01
    lambda_gp: float = 1.0
    critic_iters: int = 3
    lr_main: float = 5e-5
    lr_critic: float = 1e-4
    weight_decay_critic: float = 1e-3
    weight_decay_main: float = 0.0
    batch_src: int = 8
    batch_tgt: int = 8
    epochs: int = 1
    seed: int = 0
    eval_every: int = 100
    critic_enabled: bool = True
    embed_dims: tuple[int, ...] = (64, 32)
    critic_dims: tuple[int, ...] = (32, 16)

    def __post_init__(self):
        self.embed_dims = tuple(int(d) for d in self.embed_dims)
        self.critic_dims = tuple(int(d) for d in self.critic_dims)
        if self.lambda_da < 0 or self.lambda_gp < 0:
            raise ConfigError("lambda_da and lambda_gp must be >= 0")
        if self.lr_main <= 0 or self.lr_critic <= 0:
            raise ConfigError("learning rates must be > 0")
        if self.weight_decay_main < 0 or self.weight_decay_critic < 0:
            raise ConfigError("weight decay must be >= 0")
        if self.critic_iters < 1:
            raise ConfigError("critic_iters must be >= 1")
        if self.batch_src < 1 or self.batch_tgt < 1:
            raise ConfigError("batch sizes must be >= 1")
        if self.epochs < 0 or self.eval_every < 1:
            raise ConfigError("epochs must be >= 0 and eval_every >= 1")
        if not self.embed_dims or not self.critic_dims:
            raise ConfigError("embed_dims and critic_dims must be nonempty")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["embed_dims"] = list(self.embed_dims)
        d["critic_dims"] = list(self.critic_dims)
        return d

    def src_pref(self) -> "TrainConfig":
        """Same run with the domain term and critic switched off."""
        d = asdict(self)
        d.update(lambda_da=0.0, critic_enabled=False)
        return TrainConfig(**d)


# ---------------------------------------------------------------- AdamW

BETA1, BETA2, ADAM_EPS = 0.9, 0.999, 1e-8


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, p: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(p), np.zeros_like(p), 0)


def adamw_update(param: np.ndarray, grad: np.ndarray, state: AdamState, lr: float,
                 weight_decay: float) -> tuple[np.ndarray, AdamState]:
    """One AdamW step: bias-corrected moments, decay applied directly to the weights."""
    if param.shape != grad.shape or state.m.shape != param.shape:
        raise ad.ShapeError("adamw_update", param.shape, grad.shape)
    step = state.step + 1
    m = BETA1 * state.m + (1.0 - BETA1) * grad
    v = BETA2 * state.v + (1.0 - BETA2) * grad * grad
    m_hat = m / (1.0 - BETA1**step)
    v_hat = v / (1.0 - BETA2**step)
    new = param * (1.0 - lr * weight_decay) if weight_decay else param.copy()
    new = new - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return new, AdamState(m, v, step)


class AdamW:
    """AdamW over a fixed list of arrays."""

    def __init__(self, params: Sequence[np.ndarray], lr: float, weight_decay: float = 0.0):
        self.lr = lr
        self.weight_decay = weight_decay
        self.states = [AdamState.zeros_like(p) for p in params]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> list[np.ndarray]:
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            p2, self.states[i] = adamw_update(p, g, self.states[i], self.lr, self.weight_decay)
            out.append(p2)
        return out


# ---------------------------------------------------------------- one step


@dataclass
class Optimizers:
    critic: AdamW
    main: AdamW

    @classmethod
    def create(cls, params: DialParams, cfg: TrainConfig) -> "Optimizers":
        return cls(AdamW(params.group("psi"), cfg.lr_critic, cfg.weight_decay_critic),
                   AdamW(params.group("theta") + params.group("phi"), cfg.lr_main, cfg.weight_decay_main))


def _finite(x: float, step: int, component: str) -> float:
    if not math.isfinite(x):
        raise NumericalError(step, component)
    return x


def critic_phase(params: DialParams, src_inputs: np.ndarray, tgt_inputs: np.ndarray, cfg: TrainConfig,
                 opt: AdamW, rng: np.random.Generator, step: int = 0) -> tuple[float, float, float]:
    """``critic_iters`` updates of psi on fixed (frozen-theta) embeddings of one batch.

    Returns (gap, penalty, critic_loss) measured before the first update.
    """
    frozen = params.bind()
    src_emb = embed(frozen, src_inputs).value
    tgt_emb = embed(frozen, tgt_inputs).value
    first = None
    for _ in range(cfg.critic_iters):
        gp = params.bind(("psi",))
        gap = score_gap(gp, src_emb, tgt_emb)
        pen = gradient_penalty(gp, src_emb, tgt_emb, rng)
        loss = critic_objective(gap, pen, cfg.lambda_gp)
        if first is None:
            first = (_finite(float(gap.value), step, "wd_gap"), _finite(float(pen.value), step, "grad_penalty"),
                     _finite(float(loss.value), step, "critic_loss"))
        leaves = gp.leaves(("psi",))
        grads = ad.grad(loss, leaves)
        params.replace_group("psi", opt.step(params.group("psi"), grads))
    return first


def fit_critic(params: DialParams, src_emb: np.ndarray, tgt_emb: np.ndarray, steps: int, batch: int,
               lambda_gp: float, lr: float, weight_decay: float = 1e-3, seed: int = 0) -> list[float]:
    """Critic-only training on fixed embeddings with minibatches drawn with replacement.

    Updates psi in place and returns the per-step gap estimates.
    """
    if len(src_emb) == 0 or len(tgt_emb) == 0:
        raise ValueError("empty embedding sample")
    rng = np.random.default_rng(seed)
    opt = AdamW(params.group("psi"), lr, weight_decay)
    gaps = []
    for step in range(1, steps + 1):
        i = rng.integers(0, len(src_emb), batch)
        j = rng.integers(0, len(tgt_emb), batch)
        gp = params.bind(("psi",))
        gap = score_gap(gp, src_emb[i], tgt_emb[j])
        pen = gradient_penalty(gp, src_emb[i], tgt_emb[j], rng)
        loss = critic_objective(gap, pen, lambda_gp)
        gaps.append(_finite(float(gap.value), step, "wd_gap"))
        _finite(float(loss.value), step, "critic_loss")
        params.replace_group("psi", opt.step(params.group("psi"), ad.grad(loss, gp.leaves(("psi",)))))
    return gaps


def embedder_phase(params: DialParams, batch_src: PreferenceSet, tgt_inputs: np.ndarray | None,
                   cfg: TrainConfig, opt: AdamW, step: int = 0) -> float:
    """One fused AdamW step on (theta, phi) for src_loss + lambda_da * gap with psi frozen."""
    gp = params.bind(("theta", "phi"))
    n, k = len(batch_src), batch_src.k
    src_emb = embed(gp, batch_src.all_inputs())
    src_loss = _bt_from_embeddings(gp, src_emb, n, k)
    _finite(float(src_loss.value), step, "src_loss")
    loss = src_loss
    if cfg.critic_enabled and cfg.lambda_da > 0 and tgt_inputs is not None:
        gap = score_gap(gp, src_emb, embed(gp, tgt_inputs))
        loss = embedder_objective(src_loss, gap, cfg.lambda_da)
        _finite(float(loss.value), step, "embedder_loss")
    leaves = gp.leaves(("theta", "phi"))
    grads = ad.grad(loss, leaves)
    n_theta = len(params.group("theta"))
    new = opt.step(params.group("theta") + params.group("phi"), grads)
    params.replace_group("theta", new[:n_theta])
    params.replace_group("phi", new[n_theta:])
    return float(src_loss.value)


def train_step(params: DialParams, batch_src: PreferenceSet, batch_tgt: ExampleSet | np.ndarray | None,
               cfg: TrainConfig, opts: Optimizers, rng: np.random.Generator, step: int = 0) -> LossBundle:
    """Critic phase then the fused embedder/reward step; updates ``params`` in place."""
    tgt_inputs = None
    if batch_tgt is not None:
        tgt_inputs = batch_tgt.inputs() if isinstance(batch_tgt, ExampleSet) else np.asarray(batch_tgt)
    gap = pen = closs = float("nan")
    if cfg.critic_enabled:
        if tgt_inputs is None or len(tgt_inputs) == 0:
            raise ValueError("critic phase needs a target batch")
        gap, pen, closs = critic_phase(params, batch_src.all_inputs(), tgt_inputs, cfg, opts.critic, rng, step)
    src_loss = embedder_phase(params, batch_src, tgt_inputs, cfg, opts.main, step)
    da = cfg.lambda_da * gap if cfg.critic_enabled else 0.0
    return LossBundle(src_loss, gap, pen, closs, da)


# ---------------------------------------------------------------- training loop


@dataclass
class TrainResult:
    params: DialParams
    history: list[dict] = field(default_factory=list)
    checkpoints: list[Path] = field(default_factory=list)
    final_metrics: dict = field(default_factory=dict)


def _opt(v: float) -> float | None:
    # critic columns are undefined when the critic is off
    return None if math.isnan(v) else v


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float) and math.isnan(v):
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def train(source: PreferenceSet, target: ExampleSet | None, cfg: TrainConfig, *,
          params: DialParams | None = None, src_eval: PreferenceSet | None = None,
          tgt_eval: ExampleSet | None = None, out_dir: str | Path | None = None,
          on_step: Callable[[int, DialParams], None] | None = None) -> TrainResult:
    """Epoch loop over reshuffled source triples, cycling the target set.

    Three independent random streams come from ``cfg.seed``: parameter init,
    batching, and critic interpolates. The critic stream is only consumed when
    the critic is enabled, so a run with the critic off is exactly the
    source-only baseline.
    """
    from .evaluation import pair_accuracy_on_truth, preference_accuracy

    if len(source) == 0:
        raise ValueError("source preference set is empty")
    if cfg.critic_enabled and (target is None or len(target) == 0):
        raise ValueError("target set is empty but the critic is enabled")
    if target is not None and target.input_dim != source.input_dim:
        raise ad.ShapeError("train", (source.input_dim,), (target.input_dim,))
    init_ss, data_ss, critic_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    if params is None:
        params = init_params(source.input_dim, cfg.embed_dims, cfg.critic_dims, np.random.default_rng(init_ss))
    else:
        params = params.copy()
    data_rng = np.random.default_rng(data_ss)
    critic_rng = np.random.default_rng(critic_ss)
    opts = Optimizers.create(params, cfg)
    src_eval = src_eval if src_eval is not None else source
    tgt_inputs = target.inputs() if target is not None else None

    result = TrainResult(params)
    writer = fh = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        (out_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
        fh = open(out_dir / "metrics.csv", "w", newline="", encoding="utf-8")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)

    def evaluate():
        acc_s = preference_accuracy(params, src_eval)
        acc_t = pair_accuracy_on_truth(params, tgt_eval) if tgt_eval is not None else None
        return acc_s, acc_t

    n_src = len(source)
    steps_per_epoch = math.ceil(n_src / cfg.batch_src)
    tgt_order = data_rng.permutation(len(target)) if target is not None else None
    tgt_pos = 0
    step = 0
    try:
        for epoch in range(1, cfg.epochs + 1):
            order = data_rng.permutation(n_src)
            for b in range(steps_per_epoch):
                step += 1
                batch = source.subset(order[b * cfg.batch_src:(b + 1) * cfg.batch_src])
                tgt_batch = None
                if target is not None:
                    take = []
                    while len(take) < cfg.batch_tgt:
                        if tgt_pos == len(tgt_order):
                            tgt_order = data_rng.permutation(len(target))
                            tgt_pos = 0
                        need = min(cfg.batch_tgt - len(take), len(tgt_order) - tgt_pos)
                        take.extend(tgt_order[tgt_pos:tgt_pos + need])
                        tgt_pos += need
                    tgt_batch = tgt_inputs[np.array(take)]
                losses = train_step(params, batch, tgt_batch, cfg, opts, critic_rng, step)
                row = {"step": step, "epoch": epoch, "src_loss": losses.src_loss, "wd_gap": _opt(losses.wd_gap),
                       "grad_penalty": _opt(losses.grad_penalty), "critic_loss": _opt(losses.critic_loss),
                       "eval_accuracy_src": None, "eval_accuracy_tgt": None}
                if step % cfg.eval_every == 0 or b == steps_per_epoch - 1:
                    row["eval_accuracy_src"], row["eval_accuracy_tgt"] = evaluate()
                result.history.append(row)
                if writer is not None:
                    writer.writerow([_fmt(row[c]) for c in METRIC_COLUMNS])
                    fh.flush()
                if on_step is not None:
                    on_step(step, params)
            if out_dir is not None:
                path = out_dir / "checkpoints" / f"epoch_{epoch:03d}.json"
                Checkpoint(params, cfg.to_dict(), _rng_states(data_rng, critic_rng), step).save(path)
                result.checkpoints.append(path)
    finally:
        if fh is not None:
            fh.close()

    acc_s, acc_t = evaluate()
    result.final_metrics = {"steps": step, "eval_accuracy_src": acc_s, "eval_accuracy_tgt": acc_t}
    if result.history:
        last = result.history[-1]
        result.final_metrics.update({c: last[c] for c in ("src_loss", "wd_gap", "grad_penalty", "critic_loss")})
    if out_dir is not None:
        path = out_dir / "checkpoint.json"
        Checkpoint(params, cfg.to_dict(), _rng_states(data_rng, critic_rng), step).save(path)
        result.checkpoints.append(path)
    return result


def _rng_states(*rngs: np.random.Generator) -> dict:
    return {name: r.bit_generator.state for name, r in zip(("data", "critic"), rngs)}
