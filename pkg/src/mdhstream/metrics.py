"""External cluster validity (NMI, ARI) and cross-method normalised regret."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exceptions import InputError


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    counts: np.ndarray  # rows: true classes, columns: predicted clusters
    n: int

    @classmethod
    def from_labels(cls, truth, pred) -> "ContingencyTable":
        truth = np.asarray(truth)
        pred = np.asarray(pred)
        if truth.shape != pred.shape or truth.ndim != 1:
            raise InputError(f"label lists differ in length ({truth.size} vs {pred.size})")
        if truth.size == 0:
            raise InputError("label lists are empty")
        _, ti = np.unique(truth, return_inverse=True)
        _, pi = np.unique(pred, return_inverse=True)
        counts = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
        np.add.at(counts, (ti, pi), 1)
        return cls(counts, int(truth.size))


def _entropy(marginal: np.ndarray, n: int) -> float:
    p = marginal[marginal > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(truth, pred) -> float:
    """Mutual information over the geometric mean of the two entropies."""
    tab = ContingencyTable.from_labels(truth, pred)
    n = tab.n
    a = tab.counts.sum(axis=1)
    b = tab.counts.sum(axis=0)
    ht, hp = _entropy(a, n), _entropy(b, n)
    if ht == 0.0 and hp == 0.0:
        return 1.0
    if ht == 0.0 or hp == 0.0:
        return 0.0
    i, j = np.nonzero(tab.counts)
    nij = tab.counts[i, j].astype(np.float64)
    mi = float(np.sum(nij / n * np.log(nij * n / (a[i] * b[j]))))
    return float(max(0.0, min(1.0, mi / np.sqrt(ht * hp))))


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def ari(truth, pred) -> float:
    """Adjusted Rand index."""
    tab = ContingencyTable.from_labels(truth, pred)
    sum_ij = float(_comb2(tab.counts).sum())
    sa = float(_comb2(tab.counts.sum(axis=1)).sum())
    sb = float(_comb2(tab.counts.sum(axis=0)).sum())
    total = float(_comb2(tab.n))
    expected = sa * sb / total if total > 0 else 0.0
    denom = 0.5 * (sa + sb) - expected
    if denom == 0.0:
        # both partitions trivial; identical iff the table is a permutation
        c = tab.counts
        same = c.shape[0] == c.shape[1] and np.count_nonzero(c) == c.shape[0] \
            and np.all(np.count_nonzero(c, axis=0) == 1) and np.all(np.count_nonzero(c, axis=1) == 1)
        return 1.0 if same else 0.0
    return (sum_ij - expected) / denom


def normalized_regret(scores: Mapping[str, Sequence[float]]) -> dict[str, np.ndarray]:
    """Per-dataset regret to the best method, rescaled to span [0, 1].

    ``scores[method][j]`` is the method's score on dataset ``j``.  On a
    dataset where every method ties, all regrets are 0.
    """
    methods = list(scores)
    if len(methods) < 2:
        raise InputError("normalised regret needs at least two methods")
    S = np.array([np.atleast_1d(np.asarray(scores[m], dtype=np.float64)) for m in methods])
    best = S.max(axis=0)
    regret = best - S
    span = regret.max(axis=0)
    norm = np.divide(regret, span, out=np.zeros_like(regret), where=span > 0)
    return {m: norm[i] for i, m in enumerate(methods)}
