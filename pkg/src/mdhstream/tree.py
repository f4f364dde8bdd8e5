"""Complete bisecting tree of streaming hyperplanes.

Node ``i`` has children ``2i`` and ``2i + 1``; a tree of depth ``D`` holds
``2**D - 1`` nodes of which the last ``2**(D-1)`` are leaves.  Each
observation walks from the root to a leaf.  At every internal node on the
way the node mean is updated, the observation is centred with it, the
hyperplane takes one SGD step, and the (updated) hyperplane decides which
child receives the observation next.  All per-node statistics are held in
flat arrays so the compiled pass in :mod:`mdhstream._kernels` can update
them in place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .exceptions import ConfigError, DimensionError, InputError
from .optimizer import Hyperplane, LearnConfig, random_hyperplane
from .stats import MeanAccumulator, ScalarMoments, SumSquaresAccumulator

FORMAT_NAME = "mdhstream-tree"
FORMAT_VERSION = 1


@dataclass(eq=False)
class NodeState:
    """Snapshot of one node (copies, not views)."""

    id: int
    hyperplane: Hyperplane
    count: int
    mean: MeanAccumulator
    proj_moments: ScalarMoments
    ss_acc: SumSquaresAccumulator

    @property
    def ss(self) -> float:
        return self.ss_acc.ss


class TreeModel:
    """Streaming divisive clustering model.

    Use :func:`new_tree` to build one with seeded initial hyperplanes.
    """

    def __init__(self, depth: int, dim: int, config: LearnConfig):
        if depth < 2:
            raise ConfigError(f"depth must be >= 2, got {depth}")
        if dim < 1:
            raise ConfigError(f"dim must be >= 1, got {dim}")
        self.depth = int(depth)
        self.dim = int(dim)
        self.config = config
        size = 2 ** self.depth  # slot 0 unused
        self.V = np.zeros((size, self.dim))
        self.B = np.zeros(size)
        self.counts = np.zeros(size, dtype=np.int64)
        self.means = np.zeros((size, self.dim))
        self.pm_count = np.zeros(size, dtype=np.int64)
        self.pm_mean = np.zeros(size)
        self.pm_m2 = np.zeros(size)
        self.ss = np.zeros(size)
        self.total_count = 0
        self.degenerate_steps = 0
        self.clusters: list[int] | None = None

    @property
    def n_nodes(self) -> int:
        return 2 ** self.depth - 1

    @property
    def leaf_ids(self) -> range:
        return range(2 ** (self.depth - 1), 2 ** self.depth)

    @property
    def internal_ids(self) -> range:
        return range(1, 2 ** (self.depth - 1))

    def is_internal(self, i: int) -> bool:
        return 2 * i + 1 <= self.n_nodes

    def node(self, i: int) -> NodeState:
        if not 1 <= i <= self.n_nodes:
            raise IndexError(f"node id {i} outside 1..{self.n_nodes}")
        c = int(self.counts[i])
        return NodeState(
            id=i,
            hyperplane=Hyperplane(self.V[i].copy(), self.B[i]),
            count=c,
            mean=MeanAccumulator(self.dim, c, self.means[i]),
            proj_moments=ScalarMoments(int(self.pm_count[i]), float(self.pm_mean[i]),
                                       float(self.pm_m2[i])),
            ss_acc=SumSquaresAccumulator(self.dim, c, self.means[i], float(self.ss[i])),
        )

    def _rows(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DimensionError(f"model has dimension {self.dim}, got rows of shape {X.shape[1:]}")
        if not np.all(np.isfinite(X)):
            raise InputError("observations must be finite")
        return np.ascontiguousarray(X)

    def observe_many(self, X) -> np.ndarray:
        """Stream the rows of ``X`` through the tree in order.

        Returns the leaf reached by each row during its own update pass.
        """
        X = self._rows(X)
        leaves = np.empty(X.shape[0], dtype=np.int64)
        cfg = self.config
        self.degenerate_steps += _kernels.observe_rows(
            X, self.V, self.B, self.counts, self.means, self.pm_count,
            self.pm_mean, self.pm_m2, self.ss, self.n_nodes, cfg.C,
            cfg.alpha_factor, cfg.q, cfg.r, cfg.gbar1_scale, cfg.gbar2,
            cfg.h_floor, cfg.warmup, leaves)
        self.total_count += X.shape[0]
        return leaves

    def observe(self, x) -> int:
        return int(self.observe_many(np.asarray(x, dtype=np.float64)[None, :])[0])

    def assign_many(self, X) -> np.ndarray:
        """Leaf ids for the rows of ``X`` under the frozen model."""
        X = self._rows(X)
        leaves = np.empty(X.shape[0], dtype=np.int64)
        _kernels.assign_rows(X, self.V, self.B, self.means, self.n_nodes, leaves)
        return leaves

    def assign(self, x) -> int:
        return int(self.assign_many(np.asarray(x, dtype=np.float64)[None, :])[0])

    def node_ss(self) -> dict[int, float]:
        return {i: float(self.ss[i]) for i in range(1, self.n_nodes + 1)}

    def cluster_labels(self, leaves, clusters=None) -> np.ndarray:
        """Map full-tree leaf ids to consecutive labels of a pruned model.

        ``clusters`` are the leaf ids of the pruned model (default: the
        stored selection, else all leaves).  Labels follow ascending id.
        """
        if clusters is None:
            clusters = self.clusters if self.clusters is not None else list(self.leaf_ids)
        clusters = sorted(int(c) for c in clusters)
        table = np.full(2 ** self.depth, -1, dtype=np.int64)
        label_of = {c: k for k, c in enumerate(clusters)}
        for leaf in self.leaf_ids:
            j = leaf
            while j >= 1 and j not in label_of:
                j //= 2
            if j < 1:
                raise ConfigError(f"cluster set does not cover leaf {leaf}")
            table[leaf] = label_of[j]
        return table[np.asarray(leaves, dtype=np.int64)]

    # serialisation

    def to_dict(self) -> dict:
        nodes = []
        for i in range(1, self.n_nodes + 1):
            nodes.append({
                "id": i,
                "v": self.V[i].tolist(),
                "b": float(self.B[i]),
                "count": int(self.counts[i]),
                "mean": self.means[i].tolist(),
                "proj_moments": {
                    "count": int(self.pm_count[i]),
                    "mean": float(self.pm_mean[i]),
                    "m2": float(self.pm_m2[i]),
                },
                "ss": float(self.ss[i]),
            })
        doc = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "depth": self.depth,
            "dim": self.dim,
            "config": self.config.to_dict(),
            "total_count": self.total_count,
            "degenerate_steps": self.degenerate_steps,
            "nodes": nodes,
        }
        if self.clusters is not None:
            doc["clusters"] = [int(c) for c in sorted(self.clusters)]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeModel":
        if doc.get("format") != FORMAT_NAME:
            raise InputError("not a model file")
        if doc.get("version") != FORMAT_VERSION:
            raise InputError(f"unsupported model version {doc.get('version')}")
        tree = cls(doc["depth"], doc["dim"], LearnConfig.from_dict(doc["config"]))
        if len(doc["nodes"]) != tree.n_nodes:
            raise InputError("model node count does not match its depth")
        for nd in doc["nodes"]:
            i = nd["id"]
            tree.V[i] = nd["v"]
            tree.B[i] = nd["b"]
            tree.counts[i] = nd["count"]
            tree.means[i] = nd["mean"]
            tree.pm_count[i] = nd["proj_moments"]["count"]
            tree.pm_mean[i] = nd["proj_moments"]["mean"]
            tree.pm_m2[i] = nd["proj_moments"]["m2"]
            tree.ss[i] = nd["ss"]
        tree.total_count = doc["total_count"]
        tree.degenerate_steps = doc.get("degenerate_steps", 0)
        if "clusters" in doc:
            tree.clusters = list(doc["clusters"])
        return tree

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "TreeModel":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"model file is not valid JSON: {exc}") from None
        return cls.from_dict(doc)


def new_tree(depth: int, dim: int, cfg: LearnConfig) -> TreeModel:
    """Fresh tree with a seeded random unit direction and zero offset per node.

    Node ``i`` draws its direction from a generator seeded with
    ``(cfg.seed, i)`` so nodes are independent and reproducible.
    """
    bad = cfg.violations()
    if bad:
        raise ConfigError("inadmissible configuration: " + "; ".join(bad))
    tree = TreeModel(depth, dim, cfg)
    for i in range(1, tree.n_nodes + 1):
        hp = random_hyperplane(dim, np.random.default_rng([cfg.seed, i]))
        tree.V[i] = hp.v
    return tree
