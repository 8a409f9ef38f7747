"""Synthetic source/target domain pairs with a known ground-truth reward."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .data import ExampleSet, PreferenceSet

MOON_CENTER = np.array([0.5, 0.25])


@dataclass
class DomainDataset:
    role: str                                   # "source" | "target"
    examples: ExampleSet                        # unlabeled view is what the trainer sees
    preferences: PreferenceSet | None = None    # source only

    def __post_init__(self):
        if self.role not in ("source", "target"):
            raise ValueError(f"bad role {self.role!r}")
        if self.role == "source" and self.preferences is None:
            raise ValueError("source dataset needs preference triples")


@dataclass
class GroundTruthScorer:
    task: str
    rule: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, x, y) -> np.ndarray:
        return np.asarray(self.rule(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)),
                          dtype=np.float64)


# ---------------------------------------------------------------- two moons


def moon_points(t: np.ndarray, moon: np.ndarray) -> np.ndarray:
    """Unit half-circles: moon 0 is (cos t, sin t); moon 1 is (1 - cos t, 0.5 - sin t)."""
    t = np.asarray(t, dtype=np.float64)
    upper = np.stack([np.cos(t), np.sin(t)], axis=1)
    lower = np.stack([1.0 - np.cos(t), 0.5 - np.sin(t)], axis=1)
    return np.where(np.asarray(moon)[:, None] == 1, lower, upper)


def _moon_classifier(centers_t: int = 2001) -> Callable:
    """Nearest-arc class label; exact on noiseless points."""
    t = np.linspace(0.0, np.pi, centers_t)
    arcs = [moon_points(t, np.zeros(len(t), int)), moon_points(t, np.ones(len(t), int))]

    def rule(x, y):
        d0 = np.min(np.linalg.norm(y[:, None, :] - arcs[0][None], axis=2), axis=1)
        d1 = np.min(np.linalg.norm(y[:, None, :] - arcs[1][None], axis=2), axis=1)
        return (d1 < d0).astype(np.float64)

    return rule


def rotate(points: np.ndarray, degrees: float, center=MOON_CENTER) -> np.ndarray:
    a = np.deg2rad(degrees)
    rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    return (points - center) @ rot.T + center


def _full_moons(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n0 = n // 2
    n1 = n - n0
    t = np.concatenate([np.linspace(0.0, np.pi, n0), np.linspace(0.0, np.pi, n1)])
    moon = np.concatenate([np.zeros(n0, int), np.ones(n1, int)])
    return t, moon


def _arc_moons(n: int, arc_fraction: float, arc_start: float, rng: np.random.Generator):
    n0 = n // 2
    n1 = n - n0
    lo = arc_start * np.pi
    hi = (arc_start + arc_fraction) * np.pi
    t = rng.uniform(lo, hi, size=n0 + n1)
    moon = np.concatenate([np.zeros(n0, int), np.ones(n1, int)])
    return t, moon


def _preferences_from_moons(points: np.ndarray, moon: np.ndarray, rng: np.random.Generator) -> PreferenceSet:
    """Chosen from moon 1, rejected from moon 0, randomly paired."""
    pos = points[moon == 1]
    neg = points[moon == 0]
    n = min(len(pos), len(neg))
    pos = pos[rng.permutation(len(pos))[:n]]
    neg = neg[rng.permutation(len(neg))[:n]]
    return PreferenceSet(np.zeros((n, 0)), pos, neg[:, None, :])


def gen_two_moons(n_src: int, n_tgt: int, shift_mode: str = "fewshot", noise_sd: float = 0.1, seed: int = 0, *,
                  arc_fraction: float = 0.4, arc_start: float = 0.0, angle: float = 0.0,
                  offset: Sequence[float] = (0.0, 0.0)):
    """Source preferences and unlabeled target examples on two interleaving half-circles.

    ``shift_mode``:

    * ``fewshot``: source points cover only ``[arc_start, arc_start + arc_fraction]``
      (in units of pi) of each moon; target covers the full moons.
    * ``rotate``: full moons in both domains, target rotated by ``angle`` degrees
      about the moons' centre.
    * ``translate``: full moons, target shifted by ``offset``.

    Context x is empty; the class (moon id) is the ground-truth reward.
    """
    if n_src < 4 or n_tgt < 4:
        raise ValueError("n_src and n_tgt must be >= 4")
    if shift_mode not in ("fewshot", "rotate", "translate"):
        raise ValueError(f"invalid shift_mode {shift_mode!r}")
    if not (0.0 < arc_fraction <= 1.0) or arc_start < 0 or arc_start + arc_fraction > 1.0 + 1e-12:
        raise ValueError("arc must lie within [0, 1] (units of pi)")
    rng = np.random.default_rng(seed)
    src_rng, tgt_rng, pair_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))
    del rng

    if shift_mode == "fewshot":
        t_s, m_s = _arc_moons(n_src, arc_fraction, arc_start, src_rng)
    else:
        t_s, m_s = _full_moons(n_src, src_rng)
    t_t, m_t = _full_moons(n_tgt, tgt_rng)
    src_pts = moon_points(t_s, m_s) + (noise_sd * src_rng.standard_normal((n_src, 2)) if noise_sd else 0.0)
    tgt_pts = moon_points(t_t, m_t) + (noise_sd * tgt_rng.standard_normal((n_tgt, 2)) if noise_sd else 0.0)
    if shift_mode == "rotate":
        tgt_pts = rotate(tgt_pts, angle)
    elif shift_mode == "translate":
        tgt_pts = tgt_pts + np.asarray(offset, dtype=np.float64)

    order = tgt_rng.permutation(n_tgt)
    tgt_pts, m_t = tgt_pts[order], m_t[order]
    prefs = _preferences_from_moons(src_pts, m_s, pair_rng)
    source = DomainDataset("source", ExampleSet(np.zeros((n_src, 0)), src_pts, m_s.astype(float)), prefs)
    target = DomainDataset("target", ExampleSet(np.zeros((n_tgt, 0)), tgt_pts, m_t.astype(float)))

    base_rule = _moon_classifier()
    if shift_mode == "rotate":
        rule = lambda x, y: base_rule(x, rotate(y, -angle))  # noqa: E731
    elif shift_mode == "translate":
        rule = lambda x, y: base_rule(x, y - np.asarray(offset, dtype=np.float64))  # noqa: E731
    else:
        rule = base_rule
    return source, target, GroundTruthScorer("two-moons", rule)


# ---------------------------------------------------------------- odd one out


def category_centers(categories: int, dim: int, scale: float = 1.0) -> np.ndarray:
    if dim < categories:
        raise ValueError("item dimension must be >= number of categories")
    return scale * np.eye(categories, dim)


def _odd_one_out_instances(n: int, base_cat: int, categories: int, centers: np.ndarray, sd: float,
                           items_per_cat: int, item_bank: np.ndarray, rng: np.random.Generator):
    """Returns x (n, 5*d), candidates (n, 5, d), odd index (n,), odd category (n,)."""
    others = [c for c in range(categories) if c != base_cat]
    d = centers.shape[1]
    cands = np.empty((n, 5, d))
    odd_idx = rng.integers(0, 5, size=n)
    odd_cat = np.array(others)[rng.integers(0, len(others), size=n)]
    for i in range(n):
        base_items = rng.choice(items_per_cat, size=4, replace=False)
        odd_item = rng.integers(0, items_per_cat)
        rows = [item_bank[base_cat, j] for j in base_items]
        rows.insert(int(odd_idx[i]), item_bank[odd_cat[i], odd_item])
        cands[i] = rows
    return cands.reshape(n, 5 * d), cands, odd_idx, odd_cat


def make_item_bank(categories: int, items_per_cat: int, dim: int, sd: float, rng: np.random.Generator,
                   scale: float = 1.0) -> np.ndarray:
    centers = category_centers(categories, dim, scale)
    return centers[:, None, :] + sd * rng.standard_normal((categories, items_per_cat, dim))


def gen_odd_one_out(categories: int = 5, items_per_cat: int = 100, src_base_cat: int = 0, tgt_base_cat: int = 1,
                    n: int = 1000, seed: int = 0, *, dim: int = 8, sd: float = 0.15, n_tgt: int | None = None):
    """Pick-the-odd-item task; source and target differ in the base category.

    Each instance holds 4 items from the base category and 1 from another,
    shuffled. x concatenates the 5 item vectors, y is one candidate. Source
    preferences: the odd item is chosen over each of the other 4.
    """
    if categories < 2:
        raise ValueError("need at least 2 categories")
    if items_per_cat < 4:
        raise ValueError("need at least 4 items per category")
    if src_base_cat == tgt_base_cat:
        raise ValueError("source and target base categories must differ")
    if not (0 <= src_base_cat < categories and 0 <= tgt_base_cat < categories):
        raise ValueError("base category out of range")
    n_tgt = n if n_tgt is None else n_tgt
    bank_ss, src_ss, tgt_ss = np.random.SeedSequence(seed).spawn(3)
    centers = category_centers(categories, dim)
    bank = make_item_bank(categories, items_per_cat, dim, sd, np.random.default_rng(bank_ss))

    def build(count, base, rng):
        x, cands, odd_idx, _ = _odd_one_out_instances(count, base, categories, centers, sd, items_per_cat, bank, rng)
        xs = np.repeat(x, 5, axis=0)
        ys = cands.reshape(count * 5, dim)
        f = np.zeros((count, 5))
        f[np.arange(count), odd_idx] = 1.0
        return x, cands, odd_idx, ExampleSet(xs, ys, f.reshape(-1))

    x, cands, odd_idx, src_examples = build(n, src_base_cat, np.random.default_rng(src_ss))
    mask = np.ones((n, 5), bool)
    mask[np.arange(n), odd_idx] = False
    prefs = PreferenceSet(x, cands[np.arange(n), odd_idx], cands[mask].reshape(n, 4, dim))
    _, _, _, tgt_examples = build(n_tgt, tgt_base_cat, np.random.default_rng(tgt_ss))

    def rule(xx, yy):
        items = xx.reshape(len(xx), 5, dim)
        # the odd item is the one farthest from the centroid of the other four
        rest = (items.sum(axis=1, keepdims=True) - items) / 4.0
        odd = np.argmax(np.linalg.norm(items - rest, axis=2), axis=1)
        nearest = np.argmin(np.linalg.norm(items - yy[:, None, :], axis=2), axis=1)
        return (nearest == odd).astype(np.float64)

    return (DomainDataset("source", src_examples, prefs), DomainDataset("target", tgt_examples),
            GroundTruthScorer("odd-one-out", rule))


def spurious_rule_rewards(examples: ExampleSet, avoid_cat: int, categories: int, dim: int = 8) -> np.ndarray:
    """Hard-coded trap: reward 0 for items nearest the ``avoid_cat`` centre, 1 otherwise."""
    centers = category_centers(categories, dim)
    nearest = np.argmin(np.linalg.norm(examples.y[:, None, :] - centers[None], axis=2), axis=1)
    return (nearest != avoid_cat).astype(np.float64)


# ---------------------------------------------------------------- gaussians


def gen_gaussian_pair(dim: int, mean_shift, n: int, seed: int = 0, paired: bool = False):
    """N(0, I) vs N(shift, I). A scalar shift moves the first coordinate only.

    With ``paired`` the target reuses the source noise, so target = source + shift.
    """
    if dim < 1 or n < 2:
        raise ValueError("dim >= 1 and n >= 2 required")
    shift = np.zeros(dim)
    if np.ndim(mean_shift) == 0:
        shift[0] = float(mean_shift)
    else:
        shift = np.asarray(mean_shift, dtype=np.float64)
        if shift.shape != (dim,):
            raise ValueError("mean_shift vector must have length dim")
    rng = np.random.default_rng(seed)
    src = rng.standard_normal((n, dim))
    tgt = (src if paired else rng.standard_normal((n, dim))) + shift
    return src, tgt


# ---------------------------------------------------------------- score levels


def scores_to_preferences(examples: ExampleSet, seed: int = 0) -> PreferenceSet:
    """Pairs each example with one from the next lower integer score level (same context).

    Every example whose level has a lower neighbour is chosen at least once;
    rejected partners cycle through a shuffled copy of the lower level.
    """
    if examples.f is None:
        raise ValueError("scored examples required")
    if not np.all(examples.f == np.round(examples.f)):
        raise ValueError("score levels must be integers")
    rng = np.random.default_rng(seed)
    groups = examples.groups()
    xs, pos, neg = [], [], []
    for g in np.unique(groups):
        idx = np.flatnonzero(groups == g)
        levels = sorted(set(examples.f[idx].astype(int)))
        for lv in levels:
            upper = idx[examples.f[idx] == lv]
            lower = idx[examples.f[idx] == lv - 1]
            if len(lower) == 0:
                if lv != levels[0]:
                    warnings.warn(f"score level {lv} has no adjacent lower level; skipped")
                continue
            partners = lower[rng.permutation(len(lower))]
            for i, u in enumerate(upper):
                j = partners[i % len(partners)]
                xs.append(examples.x[u])
                pos.append(examples.y[u])
                neg.append(examples.y[j][None, :])
    if not pos:
        raise ValueError("no adjacent score levels to pair")
    return PreferenceSet(np.array(xs).reshape(len(pos), -1), np.array(pos), np.array(neg))
