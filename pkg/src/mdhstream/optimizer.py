"""Stochastic gradient updates for a single minimum density hyperplane.

A hyperplane ``{x : v @ x == b}`` is moved towards a low-density region of
the (centred) data stream using one observation per step.  The gradient of
the kernel-smoothed projected density is estimated from that observation
with a Gaussian kernel whose bandwidth shrinks like ``t**-q``; the offset is
additionally pulled back towards the mean whenever it leaves the band
``|b| <= alpha``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import _kernels
from .exceptions import ConfigError, DimensionError, InputError

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
# sup_z |z * phi(z)|, attained at z = 1
PHI_1 = INV_SQRT_2PI * math.exp(-0.5)


@dataclass(frozen=True, eq=False)
class Hyperplane:
    v: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "v", np.array(self.v, dtype=np.float64))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    def side(self, x) -> np.ndarray:
        """``True`` where ``v @ x >= b`` (the right child)."""
        return np.asarray(x) @ self.v >= self.b


def random_hyperplane(dim: int, rng: np.random.Generator) -> Hyperplane:
    """Uniform direction on the unit sphere, offset 0."""
    v = rng.standard_normal(dim)
    while not np.any(v):  # pragma: no cover - probability zero
        v = rng.standard_normal(dim)
    return Hyperplane(v / np.linalg.norm(v), 0.0)


@dataclass(frozen=True)
class LearnConfig:
    """Tuning constants for the hyperplane updates.

    Parameters
    ----------
    C : float
        Weight of the quadratic penalty on ``|b|`` beyond ``alpha``.
    alpha_factor : float
        ``alpha = alpha_factor * sigma_hat``.
    q, r : float
        Bandwidth and learning-rate decay exponents.
    gbar1_scale, gbar2 : float
        Learning-rate scales; the direction uses ``gbar1_scale * sqrt(d)``.
    eta : float
        Tail-decay constant, only used to check that (q, r) is admissible.
    h_floor : float
        Lower bound on the bandwidth scale.
    seed : int
        Seed for the initial directions.
    warmup : int
        Observations per node during which only statistics are updated.
    """

    C: float = 10.0
    alpha_factor: float = 0.1
    q: float = 0.2
    r: float = 1.0
    gbar1_scale: float = 1.0
    gbar2: float = 1.0
    eta: float = 0.2
    h_floor: float = 1e-2
    seed: int = 0
    warmup: int = 10

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ConfigError("inadmissible configuration: " + "; ".join(problems))

    def violations(self) -> list[str]:
        q, r, eta = self.q, self.r, self.eta
        checks = [
            (self.C >= 0, f"C >= 0 (C={self.C})"),
            (self.alpha_factor >= 0, f"alpha_factor >= 0 (alpha_factor={self.alpha_factor})"),
            (0 < q < 1, f"0 < q < 1 (q={q})"),
            (self.gbar1_scale > 0, f"gbar1_scale > 0 (gbar1_scale={self.gbar1_scale})"),
            (self.gbar2 > 0, f"gbar2 > 0 (gbar2={self.gbar2})"),
            (0 < eta <= 0.2, f"0 < eta <= 0.2 (eta={eta})"),
            (self.h_floor > 0, f"h_floor > 0 (h_floor={self.h_floor})"),
            (self.warmup >= 0, f"warmup >= 0 (warmup={self.warmup})"),
            # schedule admissibility
            (0 < r <= 1, f"0 < r <= 1 (r={r})"),
            (r + 2 * q > 1, f"r + 2q > 1 (r={r}, q={q})"),
            (r - q > 0.5, f"r - q > 0.5 (r={r}, q={q})"),
            (r + eta > 1, f"r + eta > 1 (r={r}, eta={eta})"),
            (q >= eta, f"q >= eta (q={q}, eta={eta})"),
            (r - eta / 2 > 0.5, f"r - eta/2 > 0.5 (r={r}, eta={eta})"),
        ]
        return [msg for ok, msg in checks if not ok]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "LearnConfig":
        return cls(**d)

    def replace(self, **changes) -> "LearnConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class GradientSample:
    u: np.ndarray
    beta: float


def gaussian_kernel(z):
    """Standard normal density."""
    return INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def bandwidth(t: int, sigma_hat: float, cfg: LearnConfig) -> float:
    if t < 1:
        raise InputError(f"step counter must be >= 1, got {t}")
    return max(sigma_hat, cfg.h_floor) * float(t) ** (-cfg.q)


def learning_rates(t: int, d: int, cfg: LearnConfig) -> tuple[float, float]:
    if t < 1:
        raise InputError(f"step counter must be >= 1, got {t}")
    tr = float(t) ** (-cfg.r)
    return cfg.gbar1_scale * math.sqrt(d) * tr, cfg.gbar2 * tr


def stochastic_gradient(hp: Hyperplane, x_centered, h: float) -> GradientSample:
    """Single-observation gradient of the kernel-smoothed projected density.

    ``u`` estimates the gradient with respect to ``v``; ``beta`` is the
    negated derivative with respect to ``b`` (so ``b + gamma*beta`` descends).
    """
    x = np.asarray(x_centered, dtype=np.float64)
    if x.shape != hp.v.shape:
        raise DimensionError(f"expected a vector of length {hp.dim}, got shape {x.shape}")
    z = hp.b - float(hp.v @ x)
    beta = z / h ** 3 * float(gaussian_kernel(z / h))
    return GradientSample(u=beta * x, beta=beta)


def update_v(hp: Hyperplane, u, gamma1: float) -> tuple[Hyperplane, bool]:
    """Normalised gradient step on the direction.

    Returns the new hyperplane and a flag that is ``True`` when the step
    vector vanished and the update was skipped.
    """
    w = hp.v - gamma1 * np.asarray(u, dtype=np.float64)
    nrm = math.sqrt(float(np.sum(w * w)))
    if not (nrm > 0.0) or not math.isfinite(nrm):
        return hp, True
    return Hyperplane(w / nrm, hp.b), False


def update_b(hp: Hyperplane, beta: float, gamma2: float, C: float, alpha: float) -> Hyperplane:
    excess = abs(hp.b) - alpha
    penalty = 2.0 * C * excess * float(np.sign(hp.b)) if excess > 0 else 0.0
    return Hyperplane(hp.v, hp.b + gamma2 * (beta - penalty))


def mdh_step(hp: Hyperplane, x_centered, t_node: int, sigma_hat: float, d: int,
             cfg: LearnConfig) -> Hyperplane:
    """Bandwidth, gradient, direction update, then offset update.

    The offset step uses ``beta`` from the pre-update hyperplane.
    """
    h = bandwidth(t_node, sigma_hat, cfg)
    grad = stochastic_gradient(hp, x_centered, h)
    gamma1, gamma2 = learning_rates(t_node, d, cfg)
    moved, _ = update_v(hp, grad.u, gamma1)
    return update_b(moved, grad.beta, gamma2, cfg.C, cfg.alpha_factor * sigma_hat)


def mdh_step_sequence(hp: Hyperplane, X_centered, sigma_hat, cfg: LearnConfig,
                      t0: int = 1) -> tuple[Hyperplane, dict]:
    """Apply :func:`mdh_step` to each row of ``X_centered`` in turn (compiled).

    Row ``i`` uses step counter ``t0 + i`` and scale ``sigma_hat[i]`` (a
    scalar is broadcast).  Returns the final hyperplane and per-step traces
    ``norm_dev`` (``| ||v|| - 1 |``), ``beta``, ``h`` and ``db`` together
    with the number of degenerate steps.
    """
    X = np.ascontiguousarray(X_centered, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != hp.dim:
        raise DimensionError(f"expected rows of length {hp.dim}, got shape {X.shape}")
    if t0 < 1:
        raise InputError(f"step counter must be >= 1, got {t0}")
    n = X.shape[0]
    s = np.broadcast_to(np.asarray(sigma_hat, dtype=np.float64), (n,)).copy()
    v = hp.v.copy()
    trace = {k: np.empty(n) for k in ("norm_dev", "beta", "h", "db")}
    b, n_deg = _kernels.step_sequence(
        v, hp.b, X, s, t0, cfg.C, cfg.alpha_factor, cfg.q, cfg.r,
        cfg.gbar1_scale, cfg.gbar2, cfg.h_floor,
        trace["norm_dev"], trace["beta"], trace["h"], trace["db"])
    trace["degenerate"] = int(n_deg)
    return Hyperplane(v, b), trace
