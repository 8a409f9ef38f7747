"""Accuracy and correlation metrics, generalization-bound verifiers, PCA projection."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .data import ExampleSet, PreferenceSet, truth_pairs
from .model import DialParams, lipschitz_upper_bound
from .oracle import w1_exact_assignment

L_SIGMA = 0.25


class DegenerateError(ValueError):
    pass


class BoundViolation(AssertionError):
    pass


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def pair_accuracy(win_rewards, lose_rewards) -> float:
    """1 per correctly ordered pair, 0.5 per tie."""
    w, l = np.asarray(win_rewards), np.asarray(lose_rewards)
    if w.size == 0:
        raise ValueError("no pairs to score")
    return float(np.mean((w > l) + 0.5 * (w == l)))


def preference_accuracy(params: DialParams, triples: PreferenceSet) -> float:
    """Pairwise accuracy over every (chosen, rejected) pair."""
    if len(triples) == 0:
        raise ValueError("empty preference set")
    r_pos = params.rewards(triples.chosen_inputs())
    r_neg = params.rewards(triples.rejected_inputs().reshape(-1, triples.input_dim)).reshape(len(triples), -1)
    return pair_accuracy(np.broadcast_to(r_pos[:, None], r_neg.shape), r_neg)


def pair_accuracy_on_truth(params: DialParams, examples: ExampleSet) -> float:
    """Pairwise accuracy over all f-ordered pairs sharing a context."""
    win, lose = truth_pairs(examples)
    r = params.rewards(examples.inputs())
    return pair_accuracy(r[win], r[lose])


def top1_accuracy_from_rewards(rewards: np.ndarray, examples: ExampleSet) -> float:
    """Per context: credit 1/|ties| when the best-f candidate is among the argmax set."""
    if examples.f is None:
        raise ValueError("ground-truth scores required")
    groups = examples.groups()
    scores = []
    for g in np.unique(groups):
        idx = np.flatnonzero(groups == g)
        r, f = rewards[idx], examples.f[idx]
        top = r == r.max()
        best = f == f.max()
        scores.append(np.count_nonzero(top & best) / np.count_nonzero(top))
    return float(np.mean(scores))


def top1_accuracy(params: DialParams, examples: ExampleSet) -> float:
    return top1_accuracy_from_rewards(params.rewards(examples.inputs()), examples)


def correlations(pred, true) -> tuple[float, float]:
    """(Pearson r, Spearman rho with average ranks for ties)."""
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(true, dtype=np.float64).ravel()
    if len(p) != len(t) or len(p) < 3:
        raise ValueError("need at least 3 paired scores")

    def pearson(a, b):
        a = a - a.mean()
        b = b - b.mean()
        denom = math.sqrt(float(a @ a) * float(b @ b))
        if denom == 0.0:
            raise DegenerateError("zero variance; correlation undefined")
        return float(np.clip(a @ b / denom, -1.0, 1.0))

    return pearson(p, t), pearson(rankdata(p), rankdata(t))


# ---------------------------------------------------------------- disagreement and bounds


def disagreement_from_rewards(rewards: np.ndarray, examples: ExampleSet) -> float:
    win, lose = truth_pairs(examples)
    if len(win) == 0:
        raise ValueError("no f-ordered pairs in the sample")
    return float(np.mean(_sigmoid(rewards[lose] - rewards[win])))


def _with_truth(examples: ExampleSet, scorer: Callable | None) -> ExampleSet:
    if scorer is None:
        if examples.f is None:
            raise ValueError("sample has no ground-truth scores and no scorer was given")
        return examples
    return ExampleSet(examples.x, examples.y, scorer(examples.x, examples.y))


def expected_disagreement(params: DialParams, examples: ExampleSet, scorer: Callable | None = None) -> float:
    """Mean sigmoid(r(loser) - r(winner)) over all f-ordered pairs sharing a context."""
    examples = _with_truth(examples, scorer)
    return disagreement_from_rewards(params.rewards(examples.inputs()), examples)


@dataclass
class BoundReport:
    eps_S: float
    eps_T: float
    K: float
    W1: float
    rhs: float
    holds: bool
    L_sigma: float = L_SIGMA
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def theorem1_check(params: DialParams, src: ExampleSet, tgt: ExampleSet, scorer: Callable | None = None,
                   tol: float = 1e-9) -> BoundReport:
    """Target error against source error plus 2 K L_sigma W1 on two equal-size samples."""
    if len(src) != len(tgt):
        raise ValueError(f"equal sample sizes required, got {len(src)} and {len(tgt)}")
    src, tgt = _with_truth(src, scorer), _with_truth(tgt, scorer)
    eps_s = expected_disagreement(params, src)
    eps_t = expected_disagreement(params, tgt)
    k = lipschitz_upper_bound(params)
    w1 = w1_exact_assignment(src.inputs(), tgt.inputs())
    rhs = eps_s + 2.0 * k * L_SIGMA * w1
    w1_emb = w1_exact_assignment(params.embed(src.inputs()), params.embed(tgt.inputs()))
    return BoundReport(eps_s, eps_t, k, w1, rhs, bool(eps_t <= rhs + tol),
                       extras={"W1_embedding": w1_emb, "n": len(src)})


def _random_triplets(pool: ExampleSet | None, n: int, input_dim: int, x_dim: int,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Returns (x-y rows, x-y' rows), each (n, input_dim), sharing x per triplet."""
    if pool is None:
        x = rng.standard_normal((n, x_dim))
        y = rng.standard_normal((n, input_dim - x_dim))
        y2 = rng.standard_normal((n, input_dim - x_dim))
    else:
        groups = pool.groups()
        i = rng.integers(0, len(pool), size=n)
        # partner response from the same context
        j = np.empty(n, dtype=np.int64)
        for g in np.unique(groups[i]):
            members = np.flatnonzero(groups == g)
            sel = groups[i] == g
            j[sel] = rng.choice(members, size=int(sel.sum()))
        x, y, y2 = pool.x[i], pool.y[i], pool.y[j]
    return np.concatenate([x, y], axis=1), np.concatenate([x, y2], axis=1)


def lemma1_check(params: DialParams, n_triples: int = 10_000, seed: int = 0, pool: ExampleSet | None = None,
                 x_dim: int = 0, strict: bool = False) -> float:
    """Max over sampled triplet pairs of |g(t) - g(t')| / (2 K L_sigma rho~(t, t')).

    Half of the pairs are independent draws, half are small perturbations of
    the first triplet, where the ratio is tightest. Coincident pairs count as 0.
    """
    rng = np.random.default_rng(seed)
    if pool is not None:
        x_dim = pool.x_dim
    d = params.input_dim
    a_xy, a_xy2 = _random_triplets(pool, n_triples, d, x_dim, rng)
    b_xy, b_xy2 = _random_triplets(pool, n_triples, d, x_dim, rng)
    half = n_triples // 2
    dx = rng.standard_normal((half, x_dim)) * 1e-3
    b_xy[:half] = a_xy[:half] + np.concatenate([dx, rng.standard_normal((half, d - x_dim)) * 1e-3], axis=1)
    b_xy2[:half] = a_xy2[:half] + np.concatenate([dx, rng.standard_normal((half, d - x_dim)) * 1e-3], axis=1)

    r = params.rewards
    ga = _sigmoid(r(a_xy) - r(a_xy2))
    gb = _sigmoid(r(b_xy) - r(b_xy2))
    rho = np.linalg.norm(a_xy - b_xy, axis=1) + np.linalg.norm(a_xy2 - b_xy2, axis=1)
    k = lipschitz_upper_bound(params)
    num = np.abs(ga - gb)
    denom = 2.0 * k * L_SIGMA * rho
    ratio = np.where(rho > 0, num / np.where(denom > 0, denom, np.inf), 0.0)
    worst = float(ratio.max()) if len(ratio) else 0.0
    if strict and worst > 1.0:
        raise BoundViolation(f"Lipschitz ratio {worst} exceeds 1")
    return worst


# ---------------------------------------------------------------- projection


def principal_components(data: np.ndarray, n_components: int = 2, tol: float = 1e-9,
                         max_iter: int = 500) -> np.ndarray:
    """Top principal directions of centred data by power iteration with deflation.

    Each direction is signed so its largest-magnitude coordinate is positive.
    Returns (n_components, d).
    """
    x = np.asarray(data, dtype=np.float64)
    x = x - x.mean(axis=0)
    cov = x.T @ x / max(len(x) - 1, 1)
    d = cov.shape[0]
    rng = np.random.default_rng(0)
    comps = []
    for c in range(n_components):
        v = rng.standard_normal(d)
        for prev in comps:
            v -= (v @ prev) * prev
        if np.linalg.norm(v) == 0 or not cov.any():
            warnings.warn("rank-deficient embeddings; component set to zero")
            comps.append(np.zeros(d))
            continue
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = cov @ v
            for prev in comps:
                w -= (w @ prev) * prev
            nw = np.linalg.norm(w)
            if nw <= tol * max(1.0, float(np.abs(cov).max())):
                v = np.zeros(d)
                warnings.warn(f"component {c + 1} has (near) zero variance; set to zero")
                break
            w /= nw
            converged = abs(nw - lam) <= tol * nw
            v, lam = w, nw
            if converged:
                break
        if v.any():
            v = v * np.sign(v[np.argmax(np.abs(v))])
        comps.append(v)
    return np.array(comps)


def project(data: np.ndarray, n_components: int = 2) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    return (x - x.mean(axis=0)) @ principal_components(x, n_components).T


def project_embeddings(params: DialParams, inputs: np.ndarray) -> np.ndarray:
    """2-D PCA coordinates of the reward-model embeddings."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if len(inputs) < 3:
        raise ValueError("need at least 3 examples to project")
    return project(params.embed(inputs))
