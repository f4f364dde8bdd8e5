"""Exact projected densities of finite Gaussian mixtures.

If ``X`` follows a Gaussian mixture then so does ``v @ X``, with component
means ``v @ mu_k`` and variances ``v @ Sigma_k @ v``.  This gives closed
forms for the density on a hyperplane, its gradients, the penalised
objective and hence the stationarity residual of any ``(v, b)``.  The
stochastic estimator in :mod:`mdhstream.optimizer` is checked against
these.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DimensionError
from .optimizer import Hyperplane

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SAMPLE_CHUNK = 65536


@dataclass(eq=False)
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        S = np.asarray(self.covariances, dtype=np.float64)
        if w.ndim != 1 or mu.ndim != 2 or mu.shape[0] != w.shape[0]:
            raise ConfigError("mixture needs one mean vector per weight")
        K, d = mu.shape
        if S.ndim == 2 and S.shape == (K, d * d):
            S = S.reshape(K, d, d)
        if S.shape != (K, d, d):
            raise ConfigError(f"expected {K} covariance matrices of shape {d}x{d}, got {S.shape}")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ConfigError("mixture weights must be positive and sum to 1")
        if np.max(np.abs(S - S.transpose(0, 2, 1))) > 1e-12:
            raise ConfigError("covariance matrices must be symmetric")
        try:
            chol = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise ConfigError("covariance matrices must be positive definite") from None
        self.weights, self.means, self.covariances = w, mu, S
        self._chol = chol

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def rotated(self, Q) -> "GaussianMixture":
        """Mixture of ``Q @ X``."""
        Q = np.asarray(Q, dtype=np.float64)
        return GaussianMixture(self.weights, self.means @ Q.T,
                               np.einsum("ij,kjl,ml->kim", Q, self.covariances, Q))

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixture":
        try:
            return cls(d["weights"], d["means"], d["covariances"])
        except KeyError as exc:
            raise ConfigError(f"mixture specification is missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid mixture specification: {exc}") from None

    @classmethod
    def load(cls, path) -> "GaussianMixture":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"mixture specification is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("mixture specification must be a JSON object")
        return cls.from_dict(doc)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def sample_chunks(gmm: GaussianMixture, n: int, seed: int, chunk: int = _SAMPLE_CHUNK):
    """Yield ``(X, labels)`` blocks totalling ``n`` draws.

    The draws depend only on ``seed`` and ``n``; chunking is internal.
    """
    rng = np.random.default_rng(seed)
    remaining = n
    while remaining > 0:
        m = min(chunk, remaining)
        labels = rng.choice(gmm.n_components, size=m, p=gmm.weights)
        Z = rng.standard_normal((m, gmm.dim))
        X = np.empty_like(Z)
        for k in range(gmm.n_components):
            idx = labels == k
            X[idx] = gmm.means[k] + Z[idx] @ gmm._chol[k].T
        yield X, labels
        remaining -= m


def sample(gmm: GaussianMixture, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` i.i.d. draws and the component each came from."""
    if n < 0:
        raise ValueError("n must be non-negative")
    blocks = list(sample_chunks(gmm, n, seed))
    if not blocks:
        return np.empty((0, gmm.dim)), np.empty(0, dtype=np.int64)
    return (np.concatenate([X for X, _ in blocks]),
            np.concatenate([lab for _, lab in blocks]))


def _check_v(gmm, v):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (gmm.dim,):
        raise DimensionError(f"expected a vector of length {gmm.dim}, got shape {v.shape}")
    return v


def _projected(gmm, v, extra_var=0.0):
    m = gmm.means @ v
    Sv = gmm.covariances @ v
    s2 = Sv @ v + extra_var
    return m, s2, Sv


def proj_density(gmm: GaussianMixture, v, b: float) -> float:
    """Density of ``v @ X`` at ``b``; equals the density integrated over the hyperplane."""
    v = _check_v(gmm, v)
    m, s2, _ = _projected(gmm, v)
    dens = INV_SQRT_2PI / np.sqrt(s2) * np.exp(-0.5 * (b - m) ** 2 / s2)
    return float(gmm.weights @ dens)


def _grad_v(gmm, v, b, extra_var):
    m, s2, Sv = _projected(gmm, v, extra_var)
    e = b - m
    coef = gmm.weights * INV_SQRT_2PI * s2 ** -1.5 * np.exp(-0.5 * e ** 2 / s2)
    terms = e[:, None] * gmm.means + (e ** 2 / s2 - 1.0)[:, None] * Sv
    return coef @ terms


def _db(gmm, v, b, extra_var):
    m, s2, _ = _projected(gmm, v, extra_var)
    coef = gmm.weights * INV_SQRT_2PI * s2 ** -1.5 * np.exp(-0.5 * (b - m) ** 2 / s2)
    return float(coef @ (m - b))


def proj_density_grad_v(gmm: GaussianMixture, v, b: float) -> np.ndarray:
    return _grad_v(gmm, _check_v(gmm, v), b, 0.0)


def proj_density_db(gmm: GaussianMixture, v, b: float) -> float:
    return _db(gmm, _check_v(gmm, v), b, 0.0)


def smoothed_grad_v(gmm: GaussianMixture, v, b: float, h: float) -> np.ndarray:
    """Expected single-observation gradient ``E[u]`` at bandwidth ``h``.

    Smoothing with a Gaussian kernel adds ``h**2`` to every projected
    component variance while ``h`` is held fixed under differentiation, so
    the closed form is the unsmoothed one with inflated variances.  The
    difference from :func:`proj_density_grad_v` is the estimator's bias.
    """
    return _grad_v(gmm, _check_v(gmm, v), b, h * h)


def smoothed_db(gmm: GaussianMixture, v, b: float, h: float) -> float:
    """Expected ``-beta`` at bandwidth ``h``."""
    return _db(gmm, _check_v(gmm, v), b, h * h)


def objective(gmm: GaussianMixture, v, b: float, C: float, alpha: float) -> float:
    """Projected density plus the quadratic penalty around the exact mixture mean."""
    v = _check_v(gmm, v)
    offset = abs(b - float(v @ gmm.mean)) - alpha
    return proj_density(gmm, v, b) + C * max(offset, 0.0) ** 2


@dataclass(frozen=True)
class StationarityResidual:
    grad_v_tangent_norm: float
    grad_b_abs: float


def stationarity_residual(gmm: GaussianMixture, hp: Hyperplane, C: float,
                          alpha: float) -> StationarityResidual:
    v = _check_v(gmm, hp.v)
    g = proj_density_grad_v(gmm, v, hp.b)
    tangent = g - (v @ g) * v
    c = hp.b - float(v @ gmm.mean)
    dO = proj_density_db(gmm, v, hp.b) + 2.0 * C * max(abs(c) - alpha, 0.0) * float(np.sign(c))
    return StationarityResidual(float(np.linalg.norm(tangent)), abs(dO))
