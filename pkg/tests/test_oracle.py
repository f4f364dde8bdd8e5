import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_rotation
from mdhstream import oracle
from mdhstream.exceptions import ConfigError, DimensionError
from mdhstream.optimizer import Hyperplane, gaussian_kernel
from mdhstream.oracle import GaussianMixture


def random_mixture(rng, K, d):
    w = rng.dirichlet(np.ones(K))
    mu = rng.normal(0.0, 2.0, size=(K, d))
    A = rng.standard_normal((K, d, d))
    S = A @ A.transpose(0, 2, 1) / d + 0.3 * np.eye(d)
    return GaussianMixture(w, mu, S)


def symmetric_pair():
    return GaussianMixture([0.5, 0.5], [[-3.0, 0.0], [3.0, 0.0]], [np.eye(2)] * 2)


def test_single_gaussian_values():
    g = GaussianMixture([1.0], [[0.0, 0.0]], [np.eye(2)])
    v = np.array([0.6, 0.8])
    assert oracle.proj_density(g, v, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    # symmetric point: gradient in v is radial, derivative in b vanishes
    gv = oracle.proj_density_grad_v(g, v, 0.0)
    np.testing.assert_allclose(gv - (gv @ v) * v, 0.0, atol=1e-15)
    assert oracle.proj_density_db(g, v, 0.0) == 0.0


def test_symmetric_pair_stationary_at_midplane():
    res = oracle.stationarity_residual(symmetric_pair(), Hyperplane([1.0, 0.0], 0.0), 10.0, 0.3)
    assert res.grad_v_tangent_norm < 1e-15
    assert res.grad_b_abs < 1e-15


@given(st.integers(0, 10 ** 6))
def test_grad_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    g = random_mixture(rng, int(rng.integers(1, 6)), int(rng.integers(1, 11)))
    v = rng.standard_normal(g.dim)
    v /= np.linalg.norm(v)
    b = float(v @ g.mean + rng.normal(0, 1.5))
    eps = 1e-5
    fd = np.array([(oracle.proj_density(g, v + eps * e, b) - oracle.proj_density(g, v - eps * e, b))
                   / (2 * eps) for e in np.eye(g.dim)])
    np.testing.assert_allclose(oracle.proj_density_grad_v(g, v, b), fd, rtol=1e-5, atol=1e-9)
    eb = 1e-6
    fdb = (oracle.proj_density(g, v, b + eb) - oracle.proj_density(g, v, b - eb)) / (2 * eb)
    assert oracle.proj_density_db(g, v, b) == pytest.approx(fdb, rel=1e-5, abs=1e-9)


@settings(max_examples=20)
@given(st.integers(0, 10 ** 6))
def test_projected_density_integrates_to_one(seed):
    rng = np.random.default_rng(seed)
    g = random_mixture(rng, 3, 4)
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    m = g.means @ v
    s = np.sqrt(np.einsum("i,kij,j->k", v, g.covariances, v))
    grid = np.linspace((m - 10 * s).min(), (m + 10 * s).max(), 4001)
    vals = np.array([oracle.proj_density(g, v, b) for b in grid])
    assert np.trapezoid(vals, grid) == pytest.approx(1.0, abs=1e-8)


@given(st.integers(0, 10 ** 6))
def test_rotation_equivariance(seed):
    rng = np.random.default_rng(seed)
    g = random_mixture(rng, 3, 5)
    Q = random_rotation(5, rng)
    gr = g.rotated(Q)
    v = rng.standard_normal(5)
    v /= np.linalg.norm(v)
    b = float(rng.normal())
    assert oracle.proj_density(gr, Q @ v, b) == pytest.approx(oracle.proj_density(g, v, b), rel=1e-10)
    np.testing.assert_allclose(oracle.proj_density_grad_v(gr, Q @ v, b),
                               Q @ oracle.proj_density_grad_v(g, v, b), rtol=1e-8, atol=1e-12)


def test_smoothed_gradient_matches_monte_carlo():
    g = GaussianMixture([0.3, 0.7], [[-1.0, 0.5], [0.4, -0.2]],
                        [np.diag([0.5, 1.0]), [[1.0, 0.3], [0.3, 0.6]]])
    v = np.array([math.cos(0.7), math.sin(0.7)])
    b, h = 0.2, 0.5
    X, _ = oracle.sample(g, 400000, 3)
    z = b - X @ v
    beta = z / h ** 3 * gaussian_kernel(z / h)
    u = (beta[:, None] * X).mean(axis=0)
    se = (beta[:, None] * X).std(axis=0) / math.sqrt(len(X))
    exact = oracle.smoothed_grad_v(g, v, b, h)
    assert np.all(np.abs(u - exact) < 4 * se)
    # E[beta] is minus the smoothed derivative in b
    assert abs(beta.mean() + oracle.smoothed_db(g, v, b, h)) < 4 * beta.std() / math.sqrt(len(X))
    # and h -> 0 recovers the unsmoothed values
    np.testing.assert_allclose(oracle.smoothed_grad_v(g, v, b, 1e-8),
                               oracle.proj_density_grad_v(g, v, b), rtol=1e-10)


def test_sampling_moments_and_determinism():
    g = GaussianMixture([0.2, 0.8], [[5.0, 0.0], [-1.0, 1.0]], [np.eye(2), np.diag([2.0, 0.5])])
    X, lab = oracle.sample(g, 100000, 9)
    X2, lab2 = oracle.sample(g, 100000, 9)
    np.testing.assert_array_equal(X, X2)
    np.testing.assert_array_equal(lab, lab2)
    freq = np.mean(lab == 0)
    assert abs(freq - 0.2) < 3 * math.sqrt(0.2 * 0.8 / 1e5)
    np.testing.assert_allclose(X[lab == 1].var(axis=0), [2.0, 0.5], rtol=0.03)
    assert oracle.sample(g, 0, 1)[0].shape == (0, 2)


def test_objective_penalises_far_offsets():
    g = symmetric_pair()
    v = np.array([1.0, 0.0])
    assert oracle.objective(g, v, 0.0, 10.0, 0.3) == pytest.approx(oracle.proj_density(g, v, 0.0))
    far = oracle.objective(g, v, 1.3, 10.0, 0.3)
    assert far == pytest.approx(oracle.proj_density(g, v, 1.3) + 10.0)


@pytest.mark.parametrize("spec", [
    {"weights": [0.5, 0.6], "means": [[0.0], [1.0]], "covariances": [[[1.0]], [[1.0]]]},
    {"weights": [1.0], "means": [[0.0, 0.0]], "covariances": [[[1.0, 2.0], [2.0, 1.0]]]},
    {"weights": [1.0], "means": [[0.0, 0.0]], "covariances": [[[1.0, 0.1], [0.0, 1.0]]]},
    {"weights": [1.0], "means": [[0.0, 0.0]], "covariances": [[[1.0]]]},
    {"weights": [1.0], "means": [[0.0]]},
])
def test_invalid_mixtures(spec):
    with pytest.raises(ConfigError):
        GaussianMixture.from_dict(spec)


def test_file_round_trip_and_flat_covariances(tmp_path):
    g = GaussianMixture([0.25, 0.75], [[1.0, 2.0], [0.0, -1.0]], [[1, 0, 0, 2], [3, 1, 1, 1]])
    g.save(tmp_path / "m.json")
    h = GaussianMixture.load(tmp_path / "m.json")
    np.testing.assert_array_equal(h.covariances, g.covariances)
    assert json.loads((tmp_path / "m.json").read_text())["weights"] == [0.25, 0.75]
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        GaussianMixture.load(tmp_path / "bad.json")


def test_dimension_check():
    with pytest.raises(DimensionError):
        oracle.proj_density(symmetric_pair(), [1.0, 0.0, 0.0], 0.0)
