import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdhstream.exceptions import ConfigError, DimensionError, InputError
from mdhstream.optimizer import (PHI_1, Hyperplane, LearnConfig, bandwidth, gaussian_kernel,
                                 learning_rates, mdh_step, mdh_step_sequence,
                                 random_hyperplane, stochastic_gradient, update_b, update_v)


def test_defaults():
    cfg = LearnConfig()
    assert (cfg.C, cfg.alpha_factor, cfg.q, cfg.r) == (10.0, 0.1, 0.2, 1.0)
    assert (cfg.gbar1_scale, cfg.gbar2, cfg.eta, cfg.h_floor) == (1.0, 1.0, 0.2, 0.01)
    assert cfg.violations() == []


@pytest.mark.parametrize("changes", [
    {"q": 0.6},           # r - q = 0.4
    {"r": 0.5, "q": 0.2},  # r + 2q = 0.9
    {"q": 0.1},           # q < eta
    {"r": 1.2},
    {"eta": 0.3},
    {"C": -1.0},
    {"h_floor": 0.0},
])
def test_inadmissible_schedules_rejected(changes):
    with pytest.raises(ConfigError):
        LearnConfig(**changes)


def test_config_round_trip():
    cfg = LearnConfig(C=3.0, seed=7, warmup=0)
    assert LearnConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.replace(q=0.3).q == 0.3


def test_schedules():
    cfg = LearnConfig()
    assert bandwidth(1, 2.0, cfg) == 2.0
    assert bandwidth(32, 2.0, cfg) == pytest.approx(2.0 * 32 ** -0.2)
    assert bandwidth(1, 0.0, cfg) == 0.01
    g1, g2 = learning_rates(4, 9, cfg)
    assert (g1, g2) == (pytest.approx(0.75), pytest.approx(0.25))
    with pytest.raises(InputError):
        bandwidth(0, 1.0, cfg)
    with pytest.raises(InputError):
        learning_rates(0, 2, cfg)


def test_gradient_at_known_point():
    # z = 0 - 1 = -1, h = 1: beta = -phi(1)
    g = stochastic_gradient(Hyperplane([1.0, 0.0], 0.0), [1.0, 0.0], 1.0)
    assert g.beta == pytest.approx(-PHI_1)
    np.testing.assert_allclose(g.u, [-PHI_1, 0.0])
    with pytest.raises(DimensionError):
        stochastic_gradient(Hyperplane([1.0, 0.0]), [1.0], 1.0)


def test_worked_step():
    # defaults, t=1, sigma=1: h=1, gamma1=sqrt(2), gamma2=1, alpha=0.1
    hp = mdh_step(Hyperplane([1.0, 0.0], 0.0), [1.0, 0.0], 1, 1.0, 2, LearnConfig())
    np.testing.assert_allclose(hp.v, [1.0, 0.0])
    assert hp.b == pytest.approx(-PHI_1)


def test_offset_penalty_signs():
    hp = Hyperplane([1.0, 0.0], 1.0)
    assert update_b(hp, 0.0, 0.1, 10.0, 0.5).b == pytest.approx(1.0 - 0.1 * 2 * 10 * 0.5)
    assert update_b(Hyperplane([1.0, 0.0], -1.0), 0.0, 0.1, 10.0, 0.5).b == pytest.approx(0.0)
    assert update_b(Hyperplane([1.0, 0.0], 0.3), 0.2, 0.5, 10.0, 0.5).b == pytest.approx(0.4)
    # b = 0 never feels the penalty, even with alpha = 0
    assert update_b(Hyperplane([1.0, 0.0], 0.0), 0.0, 1.0, 10.0, 0.0).b == 0.0


def test_degenerate_direction_step_is_skipped():
    hp = Hyperplane([1.0, 0.0], 0.0)
    out, deg = update_v(hp, [1.0, 0.0], 1.0)
    assert deg and out is hp
    out, deg = update_v(hp, [np.inf, 0.0], 1.0)
    assert deg


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 30))
def test_random_hyperplane_is_unit(seed, d):
    hp = random_hyperplane(d, np.random.default_rng(seed))
    assert abs(np.linalg.norm(hp.v) - 1.0) < 1e-12
    assert hp.b == 0.0


@given(st.integers(0, 10 ** 6), st.integers(1, 8), st.integers(1, 200),
       st.floats(0.0, 5.0), st.floats(-3.0, 3.0))
def test_compiled_sequence_matches_python_steps(seed, d, t0, sigma, b0):
    rng = np.random.default_rng(seed)
    cfg = LearnConfig()
    X = rng.standard_normal((25, d)) * 2.0
    hp0 = Hyperplane(random_hyperplane(d, rng).v, b0)
    hp = hp0
    for i, x in enumerate(X):
        hp = mdh_step(hp, x, t0 + i, sigma, d, cfg)
        assert abs(np.linalg.norm(hp.v) - 1.0) < 1e-10
    fast, trace = mdh_step_sequence(hp0, X, sigma, cfg, t0=t0)
    np.testing.assert_allclose(fast.v, hp.v, rtol=0, atol=1e-10)
    assert fast.b == pytest.approx(hp.b, abs=1e-10)
    assert np.all(trace["norm_dev"] < 1e-10)
    np.testing.assert_allclose(trace["h"], [bandwidth(t0 + i, sigma, cfg) for i in range(25)])


def test_sequence_input_checks():
    hp = Hyperplane([1.0, 0.0])
    with pytest.raises(DimensionError):
        mdh_step_sequence(hp, np.zeros((3, 3)), 1.0, LearnConfig())
    with pytest.raises(InputError):
        mdh_step_sequence(hp, np.zeros((3, 2)), 1.0, LearnConfig(), t0=0)


def test_kernel_is_standard_normal():
    assert gaussian_kernel(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert PHI_1 == pytest.approx(float(gaussian_kernel(1.0)))
