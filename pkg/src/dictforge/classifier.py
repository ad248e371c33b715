"""Seed sets and the linear classifier over phrase embeddings.

A binary soft-margin SVM separates entity from non-entity candidates
using only a handful of labeled seed phrases.  The solver is a
deterministic dual coordinate descent on the bias-augmented objective

    min_{w,b}  0.5 (||w||^2 + b^2) + C * sum_i hinge(y_i (w.x_i + b))

so no external optimizer is involved and retraining is bit-reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .tagging import Dictionary

__all__ = [
    "SeedSet",
    "SvmModel",
    "read_seeds",
    "write_seeds",
    "resolve_seeds",
    "train_svm",
    "svm_objective",
    "build_dictionary",
]


@dataclass(frozen=True)
class SeedSet:
    """Positive and negative seed phrases (lowercase forms)."""

    positives: tuple[str, ...]
    negatives: tuple[str, ...]

    def __post_init__(self):
        overlap = set(self.positives) & set(self.negatives)
        if overlap:
            raise ValueError(f"seeds in both classes: {sorted(overlap)}")
        if len(set(self.positives)) != len(self.positives) or len(
            set(self.negatives)
        ) != len(self.negatives):
            raise ValueError("duplicate seed within a class")

    @classmethod
    def make(cls, positives: Iterable[str], negatives: Iterable[str]) -> "SeedSet":
        return cls(
            tuple(p.lower() for p in positives), tuple(n.lower() for n in negatives)
        )


def read_seeds(path: str | Path) -> SeedSet:
    """Seed file: one phrase per line under ``[positive]`` / ``[negative]``
    section headers; ``#`` comments and blank lines ignored."""
    positives: list[str] = []
    negatives: list[str] = []
    target: list[str] | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.lower() == "[positive]":
                target = positives
            elif line.lower() == "[negative]":
                target = negatives
            elif target is None:
                raise ValueError(f"line {lineno}: phrase before any section header")
            else:
                target.append(line.lower())
    return SeedSet.make(positives, negatives)


def write_seeds(seeds: SeedSet, fh) -> None:
    fh.write("[positive]\n")
    for p in seeds.positives:
        fh.write(p + "\n")
    fh.write("[negative]\n")
    for n in seeds.negatives:
        fh.write(n + "\n")


def resolve_seeds(
    seeds: SeedSet, embeddings: Mapping[str, np.ndarray]
) -> tuple[list[str], list[str], list[str]]:
    """Split seeds into (resolved positives, resolved negatives, missing).

    Missing seeds are returned, never silently dropped; callers decide
    whether to warn or fail.
    """
    pos = [p for p in seeds.positives if p in embeddings]
    neg = [n for n in seeds.negatives if n in embeddings]
    missing = [s for s in (*seeds.positives, *seeds.negatives) if s not in embeddings]
    return pos, neg, missing


@dataclass
class SvmModel:
    """Trained separator: score(x) = weights.x + bias."""

    weights: np.ndarray
    bias: float
    C: float
    dims_used: int

    def __post_init__(self):
        if not np.isfinite(self.weights).all() or not np.isfinite(self.bias):
            raise ValueError("model has non-finite parameters")

    def decision(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dims_used,):
            raise ValueError(f"expected dim {self.dims_used}, got {x.shape}")
        return float(self.weights @ x + self.bias)

    def predict(self, x: np.ndarray) -> tuple[str, float]:
        """Label and margin score; a score of exactly 0 counts as entity."""
        score = self.decision(x)
        return ("entity" if score >= 0 else "not_entity"), score


def svm_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, C: float) -> float:
    """Primal objective with the bias regularized alongside the weights."""
    margins = y * (X @ w + b)
    return 0.5 * (w @ w + b * b) + C * np.sum(np.maximum(0.0, 1.0 - margins))


def _fit(X: np.ndarray, y: np.ndarray, C: float, tol: float, max_epochs: int):
    """Dual coordinate descent with a fixed 0..n-1 sweep order.

    Stops when the duality gap drops below tol * max(1, primal); the gap
    is exact because the dual objective is available in closed form from
    the maintained w = sum_i alpha_i y_i x_i.
    """
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])  # bias column
    q = np.einsum("ij,ij->i", Xa, Xa)  # always >= 1
    alpha = np.zeros(n)
    w = np.zeros(d + 1)
    for _ in range(max_epochs):
        for i in range(n):
            g = y[i] * (Xa[i] @ w) - 1.0
            a_new = min(max(alpha[i] - g / q[i], 0.0), C)
            delta = a_new - alpha[i]
            if delta != 0.0:
                w += delta * y[i] * Xa[i]
                alpha[i] = a_new
        margins = y * (Xa @ w)
        primal = 0.5 * (w @ w) + C * np.sum(np.maximum(0.0, 1.0 - margins))
        dual = np.sum(alpha) - 0.5 * (w @ w)
        if primal - dual <= tol * max(1.0, abs(primal)):
            break
    return w[:d], float(w[d])


def train_svm(
    embeddings: Mapping[str, np.ndarray],
    seeds: SeedSet,
    C: float,
    tol: float = 1e-6,
    max_epochs: int = 100_000,
) -> SvmModel:
    """Train on the seed phrases' embeddings.

    Seeds without an embedding are reported via a warning and skipped; if
    either class ends up empty, training fails.
    """
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    pos, neg, missing = resolve_seeds(seeds, embeddings)
    if missing:
        warnings.warn(f"seeds without embeddings skipped: {missing}")
    if not pos or not neg:
        raise ValueError(
            f"need at least one resolvable seed per class "
            f"(got {len(pos)} positive, {len(neg)} negative)"
        )
    vecs = [np.asarray(embeddings[p], dtype=np.float64) for p in (*pos, *neg)]
    dims = {v.shape for v in vecs}
    if len(dims) != 1 or len(dims.pop()) != 1:
        raise ValueError("seed embeddings disagree in dimension")
    X = np.vstack(vecs)
    y = np.array([1.0] * len(pos) + [-1.0] * len(neg))
    w, b = _fit(X, y, C, tol, max_epochs)
    return SvmModel(weights=w, bias=b, C=C, dims_used=X.shape[1])


def build_dictionary(
    candidates: Iterable[str],
    embeddings: Mapping[str, np.ndarray],
    model: SvmModel,
    metadata: Mapping[str, str] | None = None,
    threshold: float = 0.0,
) -> Dictionary:
    """Candidates scoring at least ``threshold``, ranked by margin descending.

    Every candidate must have an embedding.  The default threshold keeps
    exactly the phrases the classifier accepts; raising it trades recall
    for precision and never grows the dictionary.  An empty result is
    valid but warned about, since it usually means the classifier or
    seeds are off.
    """
    if threshold < 0.0:
        raise ValueError("threshold must be >= 0")
    scored = []
    for phrase in candidates:
        if phrase not in embeddings:
            raise KeyError(f"candidate {phrase!r} has no embedding")
        _, score = model.predict(embeddings[phrase])
        if score >= threshold:
            scored.append((phrase, score))
    scored.sort(key=lambda ps: (-ps[1], ps[0]))
    if not scored:
        warnings.warn("classifier accepted no candidates; dictionary is empty")
    meta = {
        "C": repr(model.C),
        "dims": str(model.dims_used),
        "threshold": repr(threshold),
    }
    meta.update(metadata or {})
    return Dictionary(scores=dict(scored), provenance="cca", metadata=meta)
