from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dynspec.envs import load_matrix, random_unit_vectors, stream_rng
from dynspec.errors import DomainError
from dynspec.linalg import (
    distinct_eigen_oracle,
    eigen_components,
    eigenvalues,
    match_eigenvalues,
    pseudo_inverse,
    svd,
    truncate_singular,
)

OMEGA = complex(-0.5, math.sqrt(3) / 2)


def test_svd_examples():
    assert np.allclose(svd(np.eye(4)).singular_values, 1)
    assert np.allclose(svd(np.diag([3, 1, 0.1])).singular_values, [3, 1, 0.1])
    A = np.random.default_rng(0).standard_normal((5, 5)) + 1j * np.random.default_rng(1).standard_normal((5, 5))
    f = svd(A)
    assert np.linalg.norm(f.reconstruct() - A) / np.linalg.norm(A) < 1e-9
    assert np.all(np.diff(f.singular_values) <= 0)
    with pytest.raises(DomainError):
        svd(np.array([[1.0, np.inf]]))


def test_truncate_examples():
    assert np.allclose(truncate_singular(np.diag([3, 1, 0.1]), 0.5), np.diag([3, 1, 0]))
    A = np.random.default_rng(2).standard_normal((3, 4))
    assert np.all(truncate_singular(A, 1.01 * np.linalg.norm(A, 2)) == 0)
    # the threshold itself is kept
    assert np.allclose(truncate_singular(np.diag([3, 1, 0.5]), 0.5), np.diag([3, 1, 0.5]))
    with pytest.raises(DomainError):
        truncate_singular(A, 0.0)


def test_pseudo_inverse_examples():
    assert np.allclose(pseudo_inverse(np.eye(3)), np.eye(3))
    assert np.allclose(pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    rng = np.random.default_rng(3)
    A = rng.standard_normal((5, 3)) @ rng.standard_normal((3, 5))
    P = pseudo_inverse(A)
    for lhs, rhs in [(A @ P @ A, A), (P @ A @ P, P), ((A @ P).T, A @ P), ((P @ A).T, P @ A)]:
        assert np.abs(lhs - rhs).max() < 1e-8


matrices = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.floats(-10, 10, allow_subnormal=False))
)


@given(matrices)
@settings(max_examples=80)
def test_moore_penrose_axioms(A):
    P = pseudo_inverse(A)
    # residuals scale with the conditioning; skip numerically singular draws
    assume(np.linalg.norm(P, 2) < 1e12)
    s = max(1.0, np.linalg.norm(A, 2), np.linalg.norm(P, 2)) ** 3
    assert np.linalg.norm(A @ P @ A - A, 2) <= 1e-8 * s
    assert np.linalg.norm(P @ A @ P - P, 2) <= 1e-8 * s
    assert np.linalg.norm((A @ P).T - A @ P, 2) <= 1e-8 * s
    assert np.linalg.norm((P @ A).T - P @ A, 2) <= 1e-8 * s


@given(matrices, st.floats(1e-3, 50))
@settings(max_examples=80)
def test_truncation_error_below_threshold(A, gamma):
    assert np.linalg.norm(A - truncate_singular(A, gamma), 2) < gamma


@given(matrices)
def test_truncation_identity_when_all_kept(A):
    s = np.linalg.svd(A, compute_uv=False)
    if s.min() <= 1e-6:
        return
    assert np.allclose(truncate_singular(A, s.min() * (1 - 1e-9)), A, atol=1e-9 * max(1, s.max()))


def test_pseudo_inverse_matches_inverse_when_well_conditioned():
    rng = np.random.default_rng(4)
    for _ in range(20):
        A = rng.standard_normal((4, 4)) + 4 * np.eye(4)
        inv = np.linalg.inv(A)
        assert np.linalg.norm(pseudo_inverse(A) - inv) / np.linalg.norm(inv) < 1e-8


def test_perturbed_truncated_inverse_bound():
    rng = np.random.default_rng(5)
    d, C = 4, 1.0
    for N in (10**4, 10**6):
        for _ in range(10):
            A = rng.standard_normal((d, 2)) @ rng.standard_normal((2, d))
            E = rng.standard_normal((d, d))
            E *= (C / math.sqrt(N)) / np.linalg.norm(E, 2)
            Ah = truncate_singular(A + E, C / math.sqrt(N))
            lhs = np.linalg.norm(pseudo_inverse(A) - pseudo_inverse(Ah), 2)
            rhs = 8 * C * np.linalg.norm(pseudo_inverse(A), 2) ** 2 * (math.sqrt(d) + 1) / math.sqrt(N)
            assert lhs <= rhs


def test_random_arm_null_space():
    rng = np.random.default_rng(6)
    d = 5
    for _ in range(20):
        B = rng.standard_normal((d, 3))  # common null space has dimension 2
        null = np.linalg.svd(B.T)[2][3:].T
        Ms = [rng.standard_normal((d, 3)) @ B.T for _ in range(d)]
        X = random_unit_vectors(d, d, rng)
        S = np.stack([X[k] @ Ms[k] for k in range(d)])
        assert np.linalg.matrix_rank(S) == 3
        assert np.abs(S @ null).max() < 1e-10


def test_eigenvalues_examples():
    assert sorted(eigenvalues(np.diag([1, 1j, -1])), key=lambda z: (z.real, z.imag)) == pytest.approx(
        [-1, 1j, 1]
    )
    J = np.diag([1.0, 1.0, 1.0], k=1)
    assert np.allclose(eigenvalues(J), 0)
    with pytest.raises(DomainError):
        eigenvalues(np.ones((2, 3)))


def test_eigenvalues_permshrink_fifth_power():
    M5 = np.linalg.matrix_power(load_matrix(), 5)
    lam = eigenvalues(M5)
    expected = [1, 1, OMEGA.conjugate(), OMEGA, 0.7**5]
    assert match_eigenvalues(lam, expected) == pytest.approx(expected, abs=1e-9)
    assert np.prod(lam) == pytest.approx(np.linalg.det(M5), rel=1e-6, abs=1e-12)


def test_eigen_components_sum_to_theta():
    M = load_matrix()
    theta = random_unit_vectors(5, 1, stream_rng(7, "theta"))[0]
    comps = eigen_components(M, theta)
    assert np.allclose(sum(v for _, v in comps), theta, atol=1e-10)
    for alpha, v in comps:
        assert np.allclose(M @ v, alpha * v, atol=1e-8)


def test_distinct_oracle_examples():
    assert distinct_eigen_oracle(np.eye(3), [1, 0, 0], 1, 1.0) == pytest.approx([1])
    assert distinct_eigen_oracle(np.diag([1.0, 0.5]), [0, 1], 1, 1.0) == []
    theta = random_unit_vectors(5, 1, stream_rng(1234, "theta"))[0]
    got = distinct_eigen_oracle(load_matrix(), theta, 5, 1.0)
    assert got == pytest.approx([OMEGA.conjugate(), 1, OMEGA], abs=1e-9)
    with pytest.raises(DomainError):
        distinct_eigen_oracle(np.eye(3), [1, 0], 1, 1.0)


def test_match_eigenvalues_greedy_and_ties():
    refs = [1, -1]
    assert match_eigenvalues([-0.9, 1.1, 5.0], refs) == [1.1, -0.9]
    assert match_eigenvalues([0.5], refs)[1] is None
    # equal distance: smaller magnitude first, then smaller real part
    assert match_eigenvalues([1.0], [2.0, 0.0]) == [None, 1.0]
    assert match_eigenvalues([0.0], [0.5 + 0.5j, 0.5 - 0.5j, -0.5 + 0.5j]) == [None, None, 0.0]
