"""Convergence diagnostics for a single streaming hyperplane.

A depth-2 tree (one splitting node) is fitted to draws from a known
Gaussian mixture.  At each checkpoint the root hyperplane is compared with
the exact mixture: stationarity residual, penalised objective and the bias
of the single-observation gradient at the current bandwidth.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import oracle
from .exceptions import ConfigError
from .optimizer import Hyperplane, LearnConfig, bandwidth, gaussian_kernel
from .tree import new_tree

BIAS_SAMPLES = 20000


@dataclass
class Checkpoint:
    t: int
    sigma_hat: float
    h: float
    b: float
    b_orig: float
    v: list
    resid_v: float
    resid_b: float
    objective: float
    bias_mc: float
    bias_exact: float
    degenerate: int


def log_checkpoints(n: int, per_decade: int = 5, start: int = 100) -> list[int]:
    """Roughly log-spaced step counts from ``start`` up to and including ``n``."""
    if n < 1:
        return []
    lo = math.log10(start)
    hi = math.log10(n)
    pts = {int(round(10 ** (lo + k / per_decade)))
           for k in range(int(math.floor((hi - lo) * per_decade)) + 1)}
    pts = {p for p in pts if start <= p <= n}
    pts.add(n)
    return sorted(pts)


def _centred(gmm: oracle.GaussianMixture, mu) -> oracle.GaussianMixture:
    return oracle.GaussianMixture(gmm.weights, gmm.means - mu, gmm.covariances)


def gradient_bias(gmm: oracle.GaussianMixture, hp: Hyperplane, h: float, X) -> tuple[float, float]:
    """Monte Carlo and exact norms of ``E[u] - grad_v f``.

    ``X`` holds fresh draws already centred the same way as ``gmm``.
    """
    target = oracle.proj_density_grad_v(gmm, hp.v, hp.b)
    z = hp.b - X @ hp.v
    beta = z / h ** 3 * gaussian_kernel(z / h)
    mc = (beta[:, None] * X).mean(axis=0) - target
    exact = oracle.smoothed_grad_v(gmm, hp.v, hp.b, h) - target
    return float(np.linalg.norm(mc)), float(np.linalg.norm(exact))


def run(gmm: oracle.GaussianMixture, n: int, cfg: LearnConfig, seed: int = 0,
        checkpoints=None, bias_samples: int = BIAS_SAMPLES) -> list[Checkpoint]:
    """Fit the root hyperplane on ``n`` draws and evaluate it at ``checkpoints``."""
    if n < 2:
        raise ConfigError(f"diagnose needs n >= 2, got {n}")
    if checkpoints is None:
        checkpoints = log_checkpoints(n)
    checkpoints = sorted({int(c) for c in checkpoints if 2 <= c <= n})
    tree = new_tree(2, gmm.dim, cfg)
    bias_rng = np.random.default_rng([seed, 1])
    out = []
    done = 0
    pending = list(checkpoints)
    for X, _ in oracle.sample_chunks(gmm, n, seed):
        pos = 0
        while pos < X.shape[0]:
            stop = X.shape[0] if not pending else min(X.shape[0], pos + pending[0] - done)
            tree.observe_many(X[pos:stop])
            done += stop - pos
            pos = stop
            if pending and done == pending[0]:
                pending.pop(0)
                out.append(_evaluate(tree, gmm, cfg, bias_rng, bias_samples))
    return out


def _evaluate(tree, gmm, cfg, rng, bias_samples) -> Checkpoint:
    root = tree.node(1)
    t = root.count
    mu = root.mean.mean
    sigma = root.proj_moments.std
    hp = root.hyperplane
    b_orig = hp.b + float(hp.v @ mu)
    alpha = cfg.alpha_factor * sigma
    res = oracle.stationarity_residual(gmm, Hyperplane(hp.v, b_orig), cfg.C, alpha)
    h = bandwidth(t, sigma, cfg)
    centred = _centred(gmm, mu)
    bias_mc = bias_exact = float("nan")
    if bias_samples > 0:
        seed = int(rng.integers(2 ** 63))
        Xb, _ = oracle.sample(centred, bias_samples, seed)
        bias_mc, bias_exact = gradient_bias(centred, hp, h, Xb)
    return Checkpoint(
        t=t, sigma_hat=sigma, h=h, b=hp.b, b_orig=b_orig, v=hp.v.tolist(),
        resid_v=res.grad_v_tangent_norm, resid_b=res.grad_b_abs,
        objective=oracle.objective(gmm, hp.v, b_orig, cfg.C, alpha),
        bias_mc=bias_mc, bias_exact=bias_exact, degenerate=tree.degenerate_steps)


COLUMNS = ("t", "sigma_hat", "h", "b", "b_orig", "resid_v", "resid_b", "objective",
           "bias_mc", "bias_exact", "degenerate")


def write_tsv(fh, records: list[Checkpoint], dim: int) -> None:
    """One header line, then one tab-separated row per checkpoint."""
    header = list(COLUMNS) + [f"v{j + 1}" for j in range(dim)]
    fh.write("\t".join(header) + "\n")
    for rec in records:
        d = asdict(rec)
        row = [repr(d[c]) if isinstance(d[c], float) else str(d[c]) for c in COLUMNS]
        row += [repr(float(x)) for x in rec.v]
        fh.write("\t".join(row) + "\n")


def read_tsv(path) -> list[dict]:
    """Parse a file written by :func:`write_tsv` into plain dicts."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        rows = []
        for line in fh:
            vals = line.rstrip("\n").split("\t")
            rec = {}
            for k, s in zip(header, vals):
                rec[k] = int(s) if k in ("t", "degenerate") else float(s)
            rows.append(rec)
    return rows
