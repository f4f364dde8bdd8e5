"""Compiled inner loops.

These mirror the readable implementations in :mod:`mdhstream.optimizer`
and :mod:`mdhstream.tree` operation for operation; the test-suite checks
that both paths agree.  Node arrays use 1-based heap indexing with slot 0
unused.
"""

import math

import numpy as np
from numba import njit

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@njit(cache=True)
def phi(z):
    return INV_SQRT_2PI * math.exp(-0.5 * z * z)


@njit(cache=True)
def hyperplane_step(v, b, xc, t, sigma_hat, C, alpha_factor, q, r,
                    gbar1_scale, gbar2, h_floor):
    """One SGD step on (v, b); ``v`` is overwritten.

    Returns ``(b_new, beta, h, degenerate)``.
    """
    d = v.shape[0]
    h = max(sigma_hat, h_floor) * float(t) ** (-q)
    tr = float(t) ** (-r)
    g1 = gbar1_scale * math.sqrt(d) * tr
    g2 = gbar2 * tr

    proj = 0.0
    for j in range(d):
        proj += v[j] * xc[j]
    z = b - proj
    beta = z / h ** 3 * phi(z / h)

    nrm2 = 0.0
    for j in range(d):
        w = v[j] - g1 * (beta * xc[j])
        nrm2 += w * w
    nrm = math.sqrt(nrm2)
    degenerate = not (nrm > 0.0) or not math.isfinite(nrm)
    if not degenerate:
        for j in range(d):
            v[j] = (v[j] - g1 * (beta * xc[j])) / nrm

    alpha = alpha_factor * sigma_hat
    excess = abs(b) - alpha
    penalty = 0.0
    if excess > 0.0 and b != 0.0:
        penalty = 2.0 * C * excess * (1.0 if b > 0.0 else -1.0)
    b_new = b + g2 * (beta - penalty)
    return b_new, beta, h, degenerate


@njit(cache=True)
def step_sequence(v, b, X, sigma_hat, t0, C, alpha_factor, q, r,
                  gbar1_scale, gbar2, h_floor, norm_dev, betas, hs, dbs):
    """Apply ``hyperplane_step`` to each row of ``X`` in order.

    Row i uses step counter ``t0 + i`` and scale ``sigma_hat[i]``.  Per-step
    traces are written into the four output arrays.  Returns the final
    offset and the number of degenerate steps.
    """
    n = X.shape[0]
    d = X.shape[1]
    n_degenerate = 0
    for i in range(n):
        b_old = b
        b, beta, h, deg = hyperplane_step(v, b, X[i], t0 + i, sigma_hat[i], C,
                                          alpha_factor, q, r, gbar1_scale,
                                          gbar2, h_floor)
        if deg:
            n_degenerate += 1
        s = 0.0
        for j in range(d):
            s += v[j] * v[j]
        norm_dev[i] = abs(math.sqrt(s) - 1.0)
        betas[i] = beta
        hs[i] = h
        dbs[i] = b - b_old
    return b, n_degenerate


@njit(cache=True)
def observe_rows(X, V, B, counts, means, pm_count, pm_mean, pm_m2, ss,
                 n_nodes, C, alpha_factor, q, r, gbar1_scale, gbar2, h_floor,
                 warmup, leaves_out):
    """Route-and-update pass over the rows of ``X``.

    Mutates the node arrays.  Writes the leaf reached by each row into
    ``leaves_out`` and returns the number of degenerate steps.
    """
    n = X.shape[0]
    d = X.shape[1]
    xc = np.empty(d)
    n_degenerate = 0
    for i in range(n):
        node = 1
        while True:
            # within-node sum of squares and mean (old mean needed first)
            c = counts[node]
            dd = 0.0
            for j in range(d):
                delta = X[i, j] - means[node, j]
                dd += delta * delta
            ss[node] += c / (c + 1.0) * dd
            c += 1
            counts[node] = c
            for j in range(d):
                means[node, j] = means[node, j] + (X[i, j] - means[node, j]) / c
                xc[j] = X[i, j] - means[node, j]

            p = 0.0
            for j in range(d):
                p += V[node, j] * xc[j]
            pc = pm_count[node] + 1
            pm_count[node] = pc
            delta = p - pm_mean[node]
            pm_mean[node] += delta / pc
            pm_m2[node] += delta * (p - pm_mean[node])

            if 2 * node + 1 > n_nodes:
                leaves_out[i] = node
                break

            if c > warmup:
                sigma_hat = 0.0
                if pc >= 2:
                    sigma_hat = math.sqrt(max(pm_m2[node], 0.0) / pc)
                b_new, beta, h, deg = hyperplane_step(
                    V[node], B[node], xc, c, sigma_hat, C, alpha_factor, q, r,
                    gbar1_scale, gbar2, h_floor)
                B[node] = b_new
                if deg:
                    n_degenerate += 1

            p = 0.0
            for j in range(d):
                p += V[node, j] * xc[j]
            if p < B[node]:
                node = 2 * node
            else:
                node = 2 * node + 1
    return n_degenerate


@njit(cache=True)
def assign_rows(X, V, B, means, n_nodes, leaves_out):
    """Route rows through the frozen tree; no state is modified."""
    n = X.shape[0]
    d = X.shape[1]
    for i in range(n):
        node = 1
        while 2 * node + 1 <= n_nodes:
            p = 0.0
            for j in range(d):
                p += V[node, j] * (X[i, j] - means[node, j])
            if p < B[node]:
                node = 2 * node
            else:
                node = 2 * node + 1
        leaves_out[i] = node
