"""Self-checks of the numerical building blocks, cheap enough to run on every build.

Each check returns a :class:`PropertyResult`; ``run_property_suite`` runs them all.
They back both the ``dynspec check`` command and the acceptance tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .eigen import EigenConfig, arm_schedule, build_A_matrices, collect_rewards, reward_index
from .envs import LinearSystemEnv, NoiseModel, random_unit_vectors
from .linalg import pseudo_inverse, truncate_singular
from .numerics import (
    concentration_radius,
    exp_sum,
    geometric_phase_bound,
    geometric_phase_exact,
    nondivisor_upper_bound,
    reduced_fractions,
    weyl_matrix_sum,
    weyl_sum_scalar,
)

#: Weyl-sum constant checked at ``N = 16 q^2``. A full period of length ``4q``
#: has magnitude ``sqrt(8q)``, so ``|W| >= N / sqrt(2q) - 1``; 1/2 leaves room for the extra term.
WEYL_C = 0.5


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _random_matrix(rng: np.random.Generator) -> np.ndarray:
    m, n = rng.integers(1, 7, size=2)
    A = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    if rng.random() < 0.4:
        r = int(rng.integers(0, min(m, n) + 1))
        U = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
        V = rng.standard_normal((r, n)) + 1j * rng.standard_normal((r, n))
        A = U @ V
    return A


def check_moore_penrose(count: int = 100, seed: int = 0, tol: float = 1e-8) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        A = _random_matrix(rng)
        P = pseudo_inverse(A)
        scale = max(1.0, np.linalg.norm(A, 2), np.linalg.norm(P, 2)) ** 3
        errs = [
            np.linalg.norm(A @ P @ A - A, 2),
            np.linalg.norm(P @ A @ P - P, 2),
            np.linalg.norm((A @ P).conj().T - A @ P, 2),
            np.linalg.norm((P @ A).conj().T - P @ A, 2),
        ]
        worst = max(worst, max(errs) / scale)
    return PropertyResult("(a) Moore-Penrose axioms", worst <= tol, f"worst relative residual {worst:.3e}")


def check_truncation(count: int = 100, seed: int = 1) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        A = _random_matrix(rng)
        smax = np.linalg.norm(A, 2)
        gamma = float(rng.uniform(1e-3, 1.5 * smax + 1e-3))
        worst = max(worst, np.linalg.norm(A - truncate_singular(A, gamma), 2) / gamma)
    return PropertyResult("(b) truncation error below threshold", worst < 1.0, f"max ||A - A_g|| / g = {worst:.4f}")


def check_geometric_phase() -> PropertyResult:
    grid = [k / 100 for k in range(1, 100)]
    slack = min(geometric_phase_bound(a) - geometric_phase_exact(a) for a in grid)
    return PropertyResult("(c) geometric phase bound on 99-point grid", slack >= 0, f"min slack {slack:.4e}")


def check_concentration(trials: int = 10_000, n: int = 200, R: float = 0.3,
                        deltas=(0.05, 0.2), seed: int = 3) -> PropertyResult:
    rng = np.random.default_rng(seed)
    parts, ok = [], True
    for kind in ("gaussian", "uniform"):
        if kind == "gaussian":
            eta = rng.normal(0.0, R, (trials, n))
        else:
            eta = rng.uniform(-R, R, (trials, n))
        w = np.exp(1j * rng.uniform(0, 2 * np.pi, (trials, n)))
        mags = np.abs((w * eta).sum(axis=1)) / n
        for delta in deltas:
            freq = float(np.mean(mags > concentration_radius(R, n, delta)))
            ok &= freq <= delta
            parts.append(f"{kind} d={delta}: {freq:.4f}")
    return PropertyResult("(d) concentration radius exceedance", ok, "; ".join(parts))


def check_weyl_lower(q_max: int = 10, c: float = WEYL_C) -> PropertyResult:
    worst = math.inf
    for q in range(1, q_max + 1):
        N = 16 * q * q
        for b in range(q):
            worst = min(worst, abs(weyl_sum_scalar(N, b, q)) * math.sqrt(q) / N)
    return PropertyResult("(e) Weyl sum lower bound", worst >= c, f"min |W| sqrt(q)/N = {worst:.4f} vs c = {c}")


def _structured_A(M, theta, X, N, L, s):
    d = M.shape[0]
    P = np.linalg.matrix_power
    Xm = np.stack([X[k] @ P(M, 2 * k * d + 1) for k in range(d)])
    step = P(M, 2 * d * d)
    powers = np.empty((N, d, d))
    powers[0] = np.eye(d)
    for j in range(1, N):
        powers[j] = powers[j - 1] @ step
    W = weyl_matrix_sum(powers, L)
    K = np.column_stack([P(M, ell) @ theta for ell in range(1, d + 1)])
    return Xm @ W @ P(M, s * d + N - 1) @ K


def check_structured_equivalence(seed: int = 4, tol: float = 1e-8) -> PropertyResult:
    rng = np.random.default_rng(seed)
    d, L = 3, 4
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    M = Q @ np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.5]]) @ Q.T
    theta = rng.standard_normal(d)
    X = random_unit_vectors(d, d, rng)
    N = 16 * L * L
    cfg = EigenConfig(N=N, L=L, d=d, R=0.0, Delta=0.5, kappa=1.0, B=2.0)
    # the first pull is global time 1, so the environment starts one step ahead
    env = LinearSystemEnv(M, M @ theta, NoiseModel("none"))
    A0, A1 = build_A_matrices(collect_rewards(env, X, N), cfg)
    err = max(
        np.abs(A0 - _structured_A(M, theta, X, N, L, 0)).max(),
        np.abs(A1 - _structured_A(M, theta, X, N, L, 1)).max(),
    )
    return PropertyResult("(f) reward matrices match structured product", err <= tol, f"max abs diff {err:.3e}")


def check_index_bijection(dims=(2, 3, 5), N: int = 7) -> PropertyResult:
    ok = True
    for d in dims:
        seen = []
        for k in range(1, d + 1):
            for ell in range(1, d + 1):
                for s in (0, 1):
                    for j in range(N):
                        t = reward_index(k, ell, s, j, N, d)
                        ok &= arm_schedule(t, N, d) == k
                        seen.append(t)
        ok &= sorted(seen) == list(range(N + 1, N + 2 * N * d * d + 1))
    return PropertyResult("(g) sampling schedule index bijection", bool(ok), f"d in {list(dims)}, N={N}")


def _worst_periodic_signal(L: int, T: int, q: Fraction) -> np.ndarray:
    """Unit-bounded ``L``-periodic signal maximizing ``|R(a; q)|`` over ``T`` samples."""
    j = np.arange(1, T + 1)
    ph = np.exp(2j * np.pi * float(q) * j)
    cls = np.array([ph[(c - 1) % L :: L].sum() for c in range(L)])
    base = np.exp(-1j * np.angle(cls))
    # sample j belongs to class j mod L
    return base[j % L]


def check_nondivisor_bound(max_len: int = 8, max_T: int = 200) -> PropertyResult:
    """Worst case over unit-bounded exactly periodic signals, every ``T <= max_T``."""
    worst, failing = 0.0, set()
    for L in range(1, max_len + 1):
        for beta in range(2, max_len + 1):
            if L % beta == 0:
                continue
            for q in reduced_fractions(beta):
                for T in range(L, max_T + 1):
                    ratio = abs(exp_sum(_worst_periodic_signal(L, T, q), q)) / nondivisor_upper_bound(L, T, 1.0)
                    worst = max(worst, ratio)
                    if ratio >= 1.0:
                        failing.add((L, beta))
    detail = f"max |R| / bound = {worst:.4f}"
    if failing:
        detail += f"; exceeded for (L, beta) in {sorted(failing)}"
    return PropertyResult("(h) non-divisor frequency bound", not failing, detail)


CHECKS = (
    check_moore_penrose,
    check_truncation,
    check_geometric_phase,
    check_concentration,
    check_weyl_lower,
    check_structured_equivalence,
    check_index_bijection,
    check_nondivisor_bound,
)


def run_property_suite() -> list[PropertyResult]:
    return [c() for c in CHECKS]
