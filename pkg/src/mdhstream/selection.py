"""Greedy pruning of a fitted tree and elbow-based choice of the cluster count.

Pruning only reads the per-node sums of squares, never the data.  At each
step the pre-terminal node whose merge increases the total within-cluster
sum of squares the least is turned into a leaf, giving one nested model for
every cluster count from the full tree down to the root.  The count is
then chosen by an arctan elbow rule evaluated for several ``Kmax`` values,
with the most frequent pick winning.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .exceptions import ConfigError, DegenerateCurveError, InputError

# scores closer than this are treated as tied (favouring the smaller K)
TIE_TOL = 1e-12


@dataclass(frozen=True)
class PrunedModel:
    kept: frozenset
    leaves: tuple
    total_ss: float

    @property
    def n_clusters(self) -> int:
        return len(self.leaves)


@dataclass
class PruneSequence:
    """Models ordered from the most leaves down to the root-only model."""

    models: list
    ss_curve: list
    pruned: list = field(default_factory=list)

    @property
    def max_leaves(self) -> int:
        return self.models[0].n_clusters

    def model_with(self, k: int) -> PrunedModel:
        return self.models[self.max_leaves - k]

    def ss_of(self) -> dict[int, float]:
        """Total sum of squares keyed by number of clusters."""
        return {m.n_clusters: s for m, s in zip(self.models, self.ss_curve)}


def full_model(depth: int, ss: Mapping[int, float]) -> PrunedModel:
    n_nodes = 2 ** depth - 1
    leaves = tuple(range(2 ** (depth - 1), n_nodes + 1))
    return PrunedModel(frozenset(range(1, n_nodes + 1)), leaves,
                       math.fsum(ss[j] for j in leaves))


def pre_terminal(model: PrunedModel) -> list[int]:
    leaf_set = set(model.leaves)
    return sorted(j for j in model.kept if 2 * j in leaf_set and 2 * j + 1 in leaf_set)


def prune_step(model: PrunedModel, ss: Mapping[int, float]) -> tuple[PrunedModel, int]:
    """Merge the children of the cheapest pre-terminal node.

    Ties go to the smallest node id.
    """
    if model.n_clusters < 2:
        raise InputError("a single-leaf model cannot be pruned further")
    best, best_inc = None, math.inf
    for j in pre_terminal(model):
        inc = ss[j] - (ss[2 * j] + ss[2 * j + 1])
        if inc < best_inc:
            best, best_inc = j, inc
    kept = model.kept - {2 * best, 2 * best + 1}
    leaves = tuple(sorted((set(model.leaves) - {2 * best, 2 * best + 1}) | {best}))
    return PrunedModel(kept, leaves, math.fsum(ss[j] for j in leaves)), best


def prune_sequence(tree=None, *, depth: int | None = None,
                   ss: Mapping[int, float] | None = None) -> PruneSequence:
    """Prune from the full tree to the root.

    Pass a fitted :class:`~mdhstream.tree.TreeModel`, or ``depth`` and an
    ``ss`` mapping directly.
    """
    if tree is not None:
        depth, ss = tree.depth, tree.node_ss()
    if depth is None or ss is None:
        raise TypeError("prune_sequence needs a tree or depth and ss")
    model = full_model(depth, ss)
    models, pruned = [model], []
    while model.n_clusters > 1:
        model, j = prune_step(model, ss)
        models.append(model)
        pruned.append(j)
    return PruneSequence(models, [m.total_ss for m in models], pruned)


def elbow_score(K: int, Kmax: int, ss_of: Mapping[int, float]) -> float:
    """Sum of the two arctan angles at point K of the rescaled SS curve.

    Smaller is a sharper elbow.  A zero ``SS(1) - SS(K)`` makes the first
    term pi/2; a flat curve between 1 and Kmax raises
    :class:`DegenerateCurveError`.
    """
    if Kmax < 3 or not 2 <= K <= Kmax - 1:
        raise InputError(f"need 2 <= K <= Kmax - 1 and Kmax >= 3 (K={K}, Kmax={Kmax})")
    s1, sk, sm = ss_of[1], ss_of[K], ss_of[Kmax]
    span = s1 - sm
    if not span > 0:
        raise DegenerateCurveError(f"SS curve is flat between 1 and {Kmax} clusters")
    if s1 - sk > 0:
        first = math.atan((K - 1) / (Kmax - 1) * span / (s1 - sk))
    else:
        first = math.pi / 2
    second = math.atan((Kmax - 1) / (Kmax - K) * (sk - sm) / span)
    return first + second


def elbow_pick(Kmax: int, ss_of: Mapping[int, float]) -> int:
    """argmin of :func:`elbow_score` over K = 2..Kmax-1; 1 for a flat curve."""
    try:
        scores = [(K, elbow_score(K, Kmax, ss_of)) for K in range(2, Kmax)]
    except DegenerateCurveError:
        return 1
    best_k, best = scores[0]
    for K, s in scores[1:]:
        if s < best - TIE_TOL:
            best_k, best = K, s
    return best_k


def default_kmax_range(max_leaves: int) -> list[int]:
    if max_leaves >= 4:
        return list(range(4, max_leaves + 1))
    if max_leaves >= 3:
        return [3]
    return []


def vote(picks: Iterable[int]) -> int:
    """Most frequent value; ties go to the smaller one."""
    votes = Counter(picks)
    top = max(votes.values())
    return min(K for K, c in votes.items() if c == top)


@dataclass
class Selection:
    k: int
    picks: dict
    kmax_range: list
    degenerate: bool = False


def select_k_detailed(seq: PruneSequence, kmax_range: Iterable[int] | None = None) -> Selection:
    if kmax_range is None:
        kmax_range = default_kmax_range(seq.max_leaves)
    kmax_range = sorted(set(int(k) for k in kmax_range))
    if not kmax_range:
        raise ConfigError("empty Kmax range")
    bad = [k for k in kmax_range if not 3 <= k <= seq.max_leaves]
    if bad:
        raise ConfigError(f"Kmax values must lie in [3, {seq.max_leaves}], got {bad}")
    ss_of = seq.ss_of()
    picks = {Kmax: elbow_pick(Kmax, ss_of) for Kmax in kmax_range}
    k = vote(picks.values())
    degenerate = all(ss_of[1] - ss_of[Kmax] <= 0 for Kmax in kmax_range)
    if degenerate:
        warnings.warn("sum-of-squares curve is flat; selecting a single cluster",
                      RuntimeWarning, stacklevel=2)
    return Selection(k, picks, kmax_range, degenerate)


def select_k(seq: PruneSequence, kmax_range: Iterable[int] | None = None) -> int:
    """Most frequent elbow pick across ``kmax_range`` (ties to the smaller K)."""
    return select_k_detailed(seq, kmax_range).k


def cut_to_k(seq: PruneSequence, k: int) -> PrunedModel:
    if not 1 <= k <= seq.max_leaves:
        raise InputError(f"k must lie in [1, {seq.max_leaves}], got {k}")
    return seq.model_with(k)


def write_report(path_or_file, seq: PruneSequence, selection: Selection | None,
                 chosen: PrunedModel, method: str) -> None:
    """Tab-separated ``record  key  value`` lines; see the README for the schema."""
    lines = ["record\tkey\tvalue"]
    for m, s in zip(seq.models, seq.ss_curve):
        lines.append(f"ss\t{m.n_clusters}\t{s!r}")
    for k, j in zip(range(seq.max_leaves, 1, -1), seq.pruned):
        lines.append(f"pruned\t{k}\t{j}")
    if selection is not None:
        for Kmax, K in sorted(selection.picks.items()):
            lines.append(f"pick\t{Kmax}\t{K}")
    lines.append(f"selected\tmethod\t{method}")
    lines.append(f"selected\tk\t{chosen.n_clusters}")
    lines.append(f"selected\ttotal_ss\t{chosen.total_ss!r}")
    for j in chosen.leaves:
        lines.append(f"leaf\t{j}\t{chosen.leaves.index(j)}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)
