"""Preference triples, unlabeled/scored example sets and their JSONL files.

Line formats (one JSON object per line, UTF-8, LF):

* unlabeled:     ``{"x": [...], "y": [...]}``
* preference:    ``{"x": [...], "y_pos": [...], "y_neg": [[...], ...]}``
* ground truth:  ``{"x": [...], "y": [...], "f": <number>}``
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np


class DataError(ValueError):
    pass


def _f64(a, shape_hint=None) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if shape_hint is not None and a.size == 0:
        a = a.reshape(shape_hint)
    return a


@dataclass
class PreferenceSet:
    """Triples (x, y+, [y-_1..y-_k]); every triple has the same k."""
    x: np.ndarray       # (n, dx)
    y_pos: np.ndarray   # (n, dy)
    y_neg: np.ndarray   # (n, k, dy)

    def __post_init__(self):
        n = len(self.y_pos)
        self.x = _f64(self.x).reshape(n, -1) if n else _f64(self.x).reshape(0, 0)
        self.y_pos = _f64(self.y_pos)
        self.y_neg = _f64(self.y_neg)
        if self.y_neg.ndim != 3 or len(self.y_neg) != n or self.y_neg.shape[2] != self.y_pos.shape[1]:
            raise DataError(f"inconsistent triple shapes {self.x.shape} {self.y_pos.shape} {self.y_neg.shape}")
        if n and self.y_neg.shape[1] < 1:
            raise DataError("each triple needs at least one rejected response")

    def __len__(self) -> int:
        return len(self.y_pos)

    @property
    def k(self) -> int:
        return self.y_neg.shape[1]

    @property
    def x_dim(self) -> int:
        return self.x.shape[1]

    @property
    def y_dim(self) -> int:
        return self.y_pos.shape[1]

    @property
    def input_dim(self) -> int:
        return self.x_dim + self.y_dim

    def chosen_inputs(self) -> np.ndarray:
        return np.concatenate([self.x, self.y_pos], axis=1)

    def rejected_inputs(self) -> np.ndarray:
        """(n, k, dx + dy)."""
        xs = np.broadcast_to(self.x[:, None, :], (len(self), self.k, self.x_dim))
        return np.concatenate([xs, self.y_neg], axis=2)

    def all_inputs(self) -> np.ndarray:
        """Chosen rows followed by every rejected row, as in ``cat([chosen, rejected])``."""
        return np.concatenate([self.chosen_inputs(), self.rejected_inputs().reshape(-1, self.input_dim)])

    def subset(self, idx) -> "PreferenceSet":
        return PreferenceSet(self.x[idx], self.y_pos[idx], self.y_neg[idx])

    def to_records(self) -> list[dict]:
        return [{"x": self.x[i].tolist(), "y_pos": self.y_pos[i].tolist(), "y_neg": self.y_neg[i].tolist()}
                for i in range(len(self))]

    @classmethod
    def from_records(cls, records: list[dict]) -> "PreferenceSet":
        if not records:
            raise DataError("empty preference file")
        try:
            ks = {len(r["y_neg"]) for r in records}
            if len(ks) != 1:
                raise DataError(f"mixed numbers of rejected responses: {sorted(ks)}")
            return cls(np.array([r["x"] for r in records], dtype=np.float64).reshape(len(records), -1),
                       np.array([r["y_pos"] for r in records], dtype=np.float64),
                       np.array([r["y_neg"] for r in records], dtype=np.float64))
        except KeyError as e:
            raise DataError(f"preference record missing key {e}") from None


@dataclass
class ExampleSet:
    """(x, y) examples, optionally with ground-truth scores ``f``."""
    x: np.ndarray             # (n, dx)
    y: np.ndarray             # (n, dy)
    f: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.y)
        self.y = _f64(self.y)
        self.x = _f64(self.x).reshape(n, -1)
        if self.f is not None:
            self.f = _f64(self.f)
            if self.f.shape != (n,):
                raise DataError("f must have one score per example")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def x_dim(self) -> int:
        return self.x.shape[1]

    @property
    def y_dim(self) -> int:
        return self.y.shape[1]

    @property
    def input_dim(self) -> int:
        return self.x_dim + self.y_dim

    def inputs(self) -> np.ndarray:
        return np.concatenate([self.x, self.y], axis=1)

    def groups(self) -> np.ndarray:
        """Integer id per example; equal ids share a context x."""
        if self.x_dim == 0:
            return np.zeros(len(self), dtype=np.int64)
        _, inv = np.unique(self.x, axis=0, return_inverse=True)
        return inv.reshape(-1)

    def subset(self, idx) -> "ExampleSet":
        return ExampleSet(self.x[idx], self.y[idx], None if self.f is None else self.f[idx])

    def unlabeled(self) -> "ExampleSet":
        return ExampleSet(self.x, self.y)

    def to_records(self, with_f: bool = False) -> list[dict]:
        out = []
        for i in range(len(self)):
            r = {"x": self.x[i].tolist(), "y": self.y[i].tolist()}
            if with_f:
                r["f"] = float(self.f[i])
            out.append(r)
        return out

    @classmethod
    def from_records(cls, records: list[dict]) -> "ExampleSet":
        if not records:
            raise DataError("empty example file")
        try:
            x = np.array([r["x"] for r in records], dtype=np.float64).reshape(len(records), -1)
            y = np.array([r["y"] for r in records], dtype=np.float64)
        except KeyError as e:
            raise DataError(f"example record missing key {e}") from None
        f = np.array([r["f"] for r in records], dtype=np.float64) if all("f" in r for r in records) else None
        return cls(x, y, f)


def truth_pairs(examples: ExampleSet) -> tuple[np.ndarray, np.ndarray]:
    """All (winner, loser) index pairs within each context group with f_win > f_loss."""
    if examples.f is None:
        raise DataError("ground-truth scores required")
    groups = examples.groups()
    wins, losses = [], []
    for g in np.unique(groups):
        idx = np.flatnonzero(groups == g)
        f = examples.f[idx]
        w, l = np.nonzero(f[:, None] > f[None, :])
        wins.append(idx[w])
        losses.append(idx[l])
    return np.concatenate(wins), np.concatenate(losses)


# ---------------------------------------------------------------- JSONL


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r, separators=(",", ":")) + "\n")


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: {e}") from None
    return out


def load_dataset(path) -> PreferenceSet | ExampleSet:
    """Loads any of the three line formats, detected from the first record."""
    records = read_jsonl(path)
    if not records:
        raise DataError(f"{path}: empty dataset")
    if "y_pos" in records[0]:
        return PreferenceSet.from_records(records)
    return ExampleSet.from_records(records)


def file_sha256(path) -> str:
    import hashlib
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
