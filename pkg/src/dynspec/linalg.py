"""Dense complex matrix helpers: SVD, singular-value truncation, pseudo-inverse, spectra.

Thin wrappers over :mod:`numpy.linalg` plus the pieces the eigenvalue estimator
needs on top: threshold truncation with a closed interval ``[gamma, inf)``, a
generalized-eigenspace decomposition of an initial vector, and the brute-force
oracle for the identifiable (unit-modulus) part of a spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def as_matrix(A, *, square: bool = False) -> np.ndarray:
    """Validate ``A`` as a finite 2-D array (optionally square) and return it."""
    arr = np.asarray(A)
    if arr.ndim != 2 or arr.size == 0:
        raise DomainError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix has non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SvdFactors:
    """``A = U @ diag(singular_values) @ V.conj().T`` with nonincreasing singular values."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.conj().T

    def rank(self, tol: float) -> int:
        return int(np.count_nonzero(self.singular_values >= tol))


def svd(A) -> SvdFactors:
    A = as_matrix(A)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    return SvdFactors(U, s, Vh.conj().T)


def truncate_singular(A, gamma: float) -> np.ndarray:
    """Low-rank approximation keeping exactly the singular values in ``[gamma, inf)``."""
    if not gamma > 0:
        raise DomainError("truncation threshold must be positive")
    f = svd(A)
    kept = np.where(f.singular_values >= gamma, f.singular_values, 0.0)
    return (f.U * kept) @ f.V.conj().T


def pseudo_inverse(A, rcond: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse ``V diag(1/s) U*`` over the numerically nonzero singular values.

    The default cutoff is ``max(m, n) * eps * s_max``. Callers that need a
    problem-specific cutoff truncate first with :func:`truncate_singular`.
    """
    A = as_matrix(A)
    f = svd(A)
    s = f.singular_values
    if rcond is None:
        rcond = max(A.shape) * np.finfo(float).eps
    cutoff = rcond * (s[0] if s.size else 0.0)
    keep = s > cutoff
    return (f.V[:, keep] / s[keep]) @ f.U[:, keep].conj().T


def eigenvalues(A) -> np.ndarray:
    """All eigenvalues with algebraic multiplicity."""
    return np.linalg.eigvals(as_matrix(A, square=True))


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    centres: list[complex] = []
    for i, v in enumerate(values):
        for g, c in zip(groups, centres):
            if abs(v - c) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
            centres.append(v)
    return groups


def eigen_components(M, theta, cluster_tol: float = 1e-6) -> list[tuple[complex, np.ndarray]]:
    """Split ``theta`` along the generalized eigenspaces of ``M``.

    Returns ``(alpha, theta_alpha)`` pairs with ``sum(theta_alpha) == theta``.
    Numerically coincident eigenvalues (within ``cluster_tol``) share one space,
    spanned by the ``m`` smallest right singular vectors of ``(M - alpha I)^m``.
    """
    M = as_matrix(M, square=True)
    theta = np.asarray(theta, dtype=complex).ravel()
    d = M.shape[0]
    if theta.size != d:
        raise DomainError(f"theta has length {theta.size}, matrix is {d}x{d}")
    lam = np.linalg.eigvals(M)
    groups = _cluster(lam, cluster_tol)
    alphas, bases = [], []
    for g in groups:
        alpha = complex(np.mean(lam[g]))
        m = len(g)
        shifted = np.linalg.matrix_power(M - alpha * np.eye(d), m)
        _, _, Vh = np.linalg.svd(shifted)
        bases.append(Vh[-m:].conj().T)
        alphas.append(alpha)
    P = np.hstack(bases)
    coef = np.linalg.solve(P, theta)
    out, col = [], 0
    for alpha, basis in zip(alphas, bases):
        m = basis.shape[1]
        out.append((alpha, basis @ coef[col : col + m]))
        col += m
    return out


def distinct_eigen_oracle(M, theta, k: int, lam: float, tol: float = 1e-8) -> list[complex]:
    """Eigenvalues ``alpha^k`` of ``M`` with ``|alpha|^k == lam`` and a nonzero ``theta`` component.

    Brute-force reference for the part of the spectrum the estimator can see.
    Result is deduplicated (within ``tol``) and sorted by angle in ``(-pi, pi]``.
    """
    M = as_matrix(M, square=True)
    if np.asarray(theta).size != M.shape[0]:
        raise DomainError("theta and M dimensions differ")
    if k < 1:
        raise DomainError("k must be a positive integer")
    found: list[complex] = []
    for alpha, comp in eigen_components(M, theta):
        if abs(abs(alpha) ** k - lam) > tol or np.linalg.norm(comp) <= tol:
            continue
        beta = alpha**k
        if not any(abs(beta - f) <= 1e-6 for f in found):
            found.append(complex(beta))
    return sorted(found, key=lambda z: (round(float(np.angle(z)), 12), abs(z)))


def match_eigenvalues(estimates, references) -> list[complex | None]:
    """Greedy nearest-neighbour pairing of ``estimates`` to ``references``.

    Repeatedly takes the closest unused pair; ties go to the smaller reference
    magnitude, then the smaller real part. Entry ``i`` of the result is the
    estimate paired with ``references[i]`` (``None`` when estimates run out).
    """
    est = [complex(e) for e in estimates]
    ref = [complex(r) for r in references]
    pairs = sorted(
        ((abs(e - r), abs(r), r.real, i, j) for i, r in enumerate(ref) for j, e in enumerate(est)),
    )
    out: list[complex | None] = [None] * len(ref)
    used_r, used_e = set(), set()
    for _, _, _, i, j in pairs:
        if i in used_r or j in used_e:
            continue
        out[i] = est[j]
        used_r.add(i)
        used_e.add(j)
    return out
