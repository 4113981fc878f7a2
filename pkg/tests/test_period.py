from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynspec.envs import LinearSystemEnv, NoiseModel
from dynspec.errors import BudgetError, ConfigError, DomainError
from dynspec.period import (
    PeriodConfig,
    divisor_search,
    estimate_period,
    is_aliquot_nearly_period,
    required_samples,
    threshold_eps,
)

LIFEGAME = dict(rho=0.98, delta=0.2, L_max=10, d=5, R=0.3, B=math.sqrt(5))


def test_threshold_examples():
    assert threshold_eps(PeriodConfig(**LIFEGAME)) == pytest.approx(0.0073045, abs=1e-7)
    assert threshold_eps(PeriodConfig(rho=24, delta=0.2, L_max=2, d=4, R=0.3, B=1)) == pytest.approx(1.0)
    a = threshold_eps(PeriodConfig(**{**LIFEGAME, "rho": 0.5}))
    assert threshold_eps(PeriodConfig(**{**LIFEGAME, "rho": 1.0})) == pytest.approx(2 * a)


def test_config_validation():
    for bad in [dict(rho=0), dict(delta=1.0), dict(L_max=1), dict(r_margin=1.0), dict(B=0), dict(budget=-1)]:
        with pytest.raises(ConfigError):
            PeriodConfig(**{**LIFEGAME, **bad})


def test_required_samples_examples():
    d, L = 3, 4
    cfg = PeriodConfig(rho=108 * math.sqrt(d) * L**3, delta=0.2, L_max=L, d=d, R=0.0, B=1.0)
    assert required_samples(cfg) == 1
    assert required_samples(PeriodConfig(**LIFEGAME)) == 584907
    circle = PeriodConfig(rho=0.3, delta=0.2, L_max=8, d=2, R=0.3, B=2.0, r_margin=0.25)
    assert required_samples(circle) == 835687


@given(
    st.floats(0.05, 2.0), st.floats(0.01, 0.9), st.integers(2, 12), st.integers(1, 6),
    st.floats(0.0, 1.0), st.floats(0.1, 3.0), st.floats(0.0, 0.9),
)
@settings(max_examples=60)
def test_required_samples_monotone(rho, delta, L, d, R, B, r):
    base = dict(rho=rho, delta=delta, L_max=L, d=d, R=R, B=B, r_margin=r)
    T = required_samples(PeriodConfig(**base))
    assert required_samples(PeriodConfig(**{**base, "L_max": L + 1})) >= T
    assert required_samples(PeriodConfig(**{**base, "R": R + 0.1})) >= T
    assert required_samples(PeriodConfig(**{**base, "B": B * 1.5})) >= T
    assert required_samples(PeriodConfig(**{**base, "rho": rho * 1.5})) <= T
    assert required_samples(PeriodConfig(**{**base, "delta": delta * 0.5 + 0.5})) <= T


def test_derived_quantities():
    cfg = PeriodConfig(**LIFEGAME)
    assert cfg.gamma == pytest.approx(1 / (1 + math.sqrt(41)))
    assert cfg.sigma0 == pytest.approx(0.98 / (2 * math.sqrt(50)))
    assert cfg.lambda_(0.0) == 0.0


def test_constant_state_gives_beta_one():
    cfg = PeriodConfig(rho=0.5, delta=0.2, L_max=6, d=3, R=0.0, B=1.0)
    env = LinearSystemEnv(np.eye(3), [0.6, 0.0, 0.8])
    est = estimate_period(env, cfg)
    assert est.beta == 1 and est.hits == []
    assert est.total_pulls == 3 * est.T_p == env.t


def test_budget_error():
    cfg = PeriodConfig(rho=0.5, delta=0.2, L_max=6, d=3, R=0.0, B=1.0, budget=10)
    with pytest.raises(BudgetError):
        estimate_period(LinearSystemEnv(np.eye(3), [1.0, 0, 0]), cfg)


def test_dimension_and_basis_checks():
    cfg = PeriodConfig(rho=0.5, delta=0.2, L_max=6, d=3, R=0.0, B=1.0)
    with pytest.raises(DomainError):
        estimate_period(LinearSystemEnv(np.eye(2), [1.0, 0]), cfg)
    with pytest.raises(DomainError):
        estimate_period(LinearSystemEnv(np.eye(3), [1.0, 0, 0]), cfg, basis=np.ones((3, 3)))


def _rotation(period: int) -> np.ndarray:
    a = 2 * math.pi / period
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


@pytest.mark.parametrize("L", [2, 3, 4, 5, 6])
def test_rotation_period_recovered(L):
    cfg = PeriodConfig(rho=0.5, delta=0.2, L_max=6, d=2, R=0.3, B=1.0)
    env = LinearSystemEnv(_rotation(L), [1.0, 0.0], NoiseModel("gaussian", 0.3, L))
    est = estimate_period(env, cfg)
    assert est.beta == L
    assert est.beta == math.prod(est.hits)
    assert est.beta <= cfg.L_max


def test_search_log_order_and_reset():
    # a pulse train of period 6 has energy at every harmonic
    a = np.resize([1.0, 0, 0, 0, 0, 0], 6000)
    beta, hits, log = divisor_search(a, 0.05, 6)
    assert (beta, hits) == (6, [2, 3])
    assert (log[0].beta, log[0].ell, log[0].s, log[0].hit) == (1, 2, 0, True)
    # after the hit, ell restarts so the next test is ell = 2 on stride-2 subsequences
    assert (log[1].beta, log[1].ell, log[1].s) == (2, 2, 0)
    assert [r.hit for r in log[1:]].count(True) == 1 and log[-1].hit
    assert all(r.value <= 0.05 for r in log if not r.hit)


periodic_signals = st.integers(2, 8).flatmap(
    lambda L: st.tuples(st.just(L), st.lists(st.floats(-1, 1), min_size=L, max_size=L))
)


@given(periodic_signals)
@settings(max_examples=60, deadline=None)
def test_noiseless_periodic_output_is_aliquot(sig):
    L, base = sig
    base = np.array(base)
    L_max, rho = 8, 0.5
    eps = rho / (6 * L_max)
    T = 4000
    a = np.resize(base, T)
    beta, hits, _ = divisor_search(a, eps, L_max)
    assert beta <= L_max and beta == math.prod(hits)
    if L % beta == 0:
        assert is_aliquot_nearly_period(a[:, None], beta, rho, 1.0, 0.0, L)
    else:
        # only possible when the per-class spread is already below the threshold
        assert is_aliquot_nearly_period(a[:, None], beta, rho, 1.0, 0.0, beta * L)


def test_noise_free_hits_dominate():
    # when every clean |R| clears the threshold by more than the noise radius, noise changes no decision
    T, eps, margin, R = 60000, 0.05, 0.03, 0.3
    radius = math.sqrt(4 * R * R * math.log(4 / 1e-6) / (T // 8))
    assert radius < margin
    checked = 0
    for seed in range(10):
        for L in range(2, 7):
            rng = np.random.default_rng([seed, L])
            clean = np.resize(rng.uniform(-1, 1, L), T)
            _, h_clean, log = divisor_search(clean, eps, 8)
            if any(abs(r.value - eps) <= margin for r in log):
                continue
            _, h_noisy, _ = divisor_search(clean + rng.uniform(-R, R, T), eps, 8)
            assert h_noisy == h_clean
            checked += 1
    assert checked >= 20


def test_anp_examples():
    base6 = np.arange(6, dtype=float)[:, None]
    y = np.tile(base6, (5, 1))
    assert is_aliquot_nearly_period(y, 6, 0.0 + 1e-12, 0.0, 0.0, 6)
    assert not is_aliquot_nearly_period(y, 4, 10.0, 0.0, 0.0, 6)
    v, w = np.array([0.0, 0.0]), np.array([1.0, 0.0])
    z = w + np.array([0.0, 0.1])
    y = np.tile(np.stack([v, w, v, w, v, z]), (4, 1))
    assert is_aliquot_nearly_period(y, 2, 0.1001, 1.0, 0.0, 6)
    assert not is_aliquot_nearly_period(y, 2, 0.1, 1.0, 0.0, 6)
    assert not is_aliquot_nearly_period(y, 2, 0.05, 1.0, 0.0, 6)


def test_anp_needs_two_strides():
    with pytest.raises(DomainError):
        is_aliquot_nearly_period(np.zeros((4, 1)), 2, 0.1, 1.0, 0.0, 2)


def test_anp_circle_hull_path():
    # a dense class in the plane goes through the convex-hull shortcut
    ang = np.linspace(0, 2 * np.pi, 500, endpoint=False)
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    assert is_aliquot_nearly_period(pts, 1, 2.0 + 1e-9, 0.0, 0.0, 1)
    assert not is_aliquot_nearly_period(pts, 1, 1.999, 0.0, 0.0, 1)
