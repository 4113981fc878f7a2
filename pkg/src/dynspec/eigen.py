"""Unit-circle eigenvalue estimation for a hidden linear system from bandit rewards.

After waiting ``N`` steps (so contracting modes die out) the learner cycles
through ``d`` random arms, each held for ``2d`` consecutive pulls, for ``N``
blocks of ``2 d^2`` pulls. Quadratic-phase averages of those rewards give two
``d x d`` matrices ``A_0`` and ``A_1`` that differ by ``d`` time steps; the
spectrum of ``A_1 pinv(trunc(A_0))`` approximates the eigenvalues of ``M^d``
that lie on the unit circle and are excited by the initial state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .envs import BanditEnv, PaddedEnv, random_unit_vectors, stream_rng
from .errors import ConfigError, DataError, DomainError
from .linalg import eigen_components, eigenvalues, pseudo_inverse, svd, truncate_singular
from .numerics import phase_weighted_mean

PULL_CHUNK = 1 << 18
MAX_ARM_DRAWS = 100
ARM_COND_LIMIT = 1e10


def min_effective_N(L: int, d: int, Delta: float, B: float, kappa: float) -> int:
    """Smallest effective sample size for which the error bound holds."""
    if not 0.0 < Delta <= 1.0:
        raise DomainError("Delta must lie in (0, 1]")
    if kappa < 1:
        raise DomainError("kappa must be at least 1")
    if not B > 0:
        raise DomainError("B must be positive")
    second = -(d - 1) * math.log(Delta) / Delta + (math.log(B * kappa * kappa) + d + 6) / Delta + d
    return max(16 * L * L, math.ceil(second * (1.0 - 1e-12)))


def svd_threshold(N: int, d: int, R: float, delta: float) -> float:
    """Truncation level ``gamma(N)`` that dominates the averaged noise matrix w.p. ``1 - delta``."""
    if N < 1:
        raise DomainError("N must be positive")
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    return (math.sqrt(4.0 * d * d * R * R * math.log(4.0 * d * d / delta)) + 1.0) / math.sqrt(N)


def arm_schedule(t: int, N: int, d: int) -> int:
    """1-based arm index pulled at 1-based global time ``t`` of the sampling window."""
    if not N + 1 <= t <= N + 2 * N * d * d:
        raise DomainError(f"time {t} is outside the sampling window [{N + 1}, {N + 2 * N * d * d}]")
    m0 = (t - N - 1) % (2 * d * d) + 1
    return -(-m0 // (2 * d))


def reward_index(k: int, ell: int, s: int, j: int, N: int, d: int) -> int:
    """Global time whose reward enters entry ``(k, ell)`` of ``A_s`` at Weyl index ``j``."""
    return 2 * (k - 1) * d + s * d + 2 * d * d * j + N + ell


@dataclass(frozen=True)
class EigenConfig:
    N: int
    L: int
    d: int
    delta: float = 0.2
    R: float = 0.3
    Delta: float = 0.1
    kappa: float = 6.0
    B: float = 1.0
    seed: int = 0
    unsafe: bool = False

    def __post_init__(self):
        if self.N < 1 or self.L < 1 or self.d < 1:
            raise ConfigError("N, L and d must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if self.R < 0:
            raise ConfigError("R must be nonnegative")
        try:
            need = min_effective_N(self.L, self.d, self.Delta, self.B, self.kappa)
        except DomainError as e:
            raise ConfigError(str(e)) from e
        if self.N < need and not self.unsafe:
            raise ConfigError(f"N={self.N} is below the required effective sample size {need}")

    @property
    def gamma(self) -> float:
        return svd_threshold(self.N, self.d, self.R, self.delta)

    @property
    def total_pulls(self) -> int:
        return self.N + 2 * self.N * self.d * self.d


@dataclass
class RewardBuffer:
    """Rewards for consecutive 1-based global times ``start_time, start_time + 1, ...``."""

    start_time: int
    values: np.ndarray
    arm_ids: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.arm_ids = np.asarray(self.arm_ids)
        if self.arm_ids.dtype.kind not in "iu":
            raise DataError("arm ids must be integers")
        if self.values.shape != self.arm_ids.shape or self.values.ndim != 1:
            raise DataError("values and arm_ids must be 1-D and aligned")

    @property
    def end_time(self) -> int:
        return self.start_time + self.values.size - 1

    def window(self, first: int, last: int) -> tuple[np.ndarray, np.ndarray]:
        if first < self.start_time or last > self.end_time:
            raise DataError(
                f"times {first}..{last} not covered by buffer {self.start_time}..{self.end_time}"
            )
        a, b = first - self.start_time, last - self.start_time + 1
        return self.values[a:b], self.arm_ids[a:b]

    def __getitem__(self, t: int) -> float:
        v, _ = self.window(t, t)
        return float(v[0])


def build_A_matrices(rewards: RewardBuffer, cfg: EigenConfig) -> tuple[np.ndarray, np.ndarray]:
    """Phase-weighted reward averages ``A_0`` and ``A_1`` (normalized by ``1/N``)."""
    N, d = cfg.N, cfg.d
    vals, arms = rewards.window(N + 1, N + 2 * N * d * d)
    # offset from time N+1 is 2d^2 j + 2d(k-1) + d s + (ell-1): axes (j, k, s, ell)
    vals = vals.reshape(N, d, 2, d)
    arms = arms.reshape(N, d, 2, d)
    expected = np.arange(1, d + 1)[None, :, None, None]
    if not np.all(arms == expected):
        raise DataError("reward buffer arms do not follow the sampling schedule")
    A0 = phase_weighted_mean(vals[:, :, 0, :], cfg.L)
    A1 = phase_weighted_mean(vals[:, :, 1, :], cfg.L)
    return A0, A1


@dataclass
class EigenEstimate:
    output_matrix: np.ndarray
    spectrum: np.ndarray
    raw_spectrum: np.ndarray
    gamma_used: float
    pulls_used: int
    A0: np.ndarray = field(repr=False)
    A1: np.ndarray = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    arms: np.ndarray = field(repr=False)

    def nonzero_spectrum(self) -> np.ndarray:
        return self.spectrum[self.spectrum != 0]

    def to_dict(self) -> dict:
        def cplx(z):
            return [float(np.real(z)), float(np.imag(z))]

        return {
            "output_matrix": [[cplx(z) for z in row] for row in self.output_matrix],
            "spectrum": [cplx(z) for z in self.spectrum],
            "gamma": self.gamma_used,
            "pulls": self.pulls_used,
            "singular_values_A0": [float(s) for s in self.singular_values],
        }


def draw_arms(d: int, rng: np.random.Generator) -> np.ndarray:
    """``d`` random unit arms, redrawn until they form a well-conditioned basis."""
    for _ in range(MAX_ARM_DRAWS):
        X = random_unit_vectors(d, d, rng)
        if np.linalg.cond(X) < ARM_COND_LIMIT:
            return X
    raise ConfigError("could not draw a full-rank arm set")


def collect_rewards(env: BanditEnv, arms: np.ndarray, N: int) -> RewardBuffer:
    """Wait ``N`` steps on the first arm (discarded), then run the ``2 N d^2`` scheduled pulls."""
    d = arms.shape[0]
    waited = 0
    while waited < N:
        c = min(PULL_CHUNK, N - waited)
        env.pull_many(np.broadcast_to(arms[0], (c, d)))
        waited += c
    block = np.repeat(np.arange(d), 2 * d)  # 0-based arm per step of one 2d^2 block
    per_chunk = max(1, PULL_CHUNK // block.size)
    total = 2 * N * d * d
    values = np.empty(total)
    ids = np.empty(total, dtype=np.min_scalar_type(d))
    pos, blocks_done = 0, 0
    while blocks_done < N:
        nb = min(per_chunk, N - blocks_done)
        idx = np.tile(block, nb)
        values[pos : pos + idx.size] = env.pull_many(arms[idx])
        ids[pos : pos + idx.size] = idx + 1
        pos += idx.size
        blocks_done += nb
    return RewardBuffer(N + 1, values, ids)


def estimate_eigen_map(env: BanditEnv, cfg: EigenConfig, arms=None) -> EigenEstimate:
    """Estimate ``A_1 pinv(trunc_gamma(A_0))`` from ``N + 2 N d^2`` pulls of ``env``."""
    d = cfg.d
    if env.dim != d:
        raise DomainError(f"environment dimension {env.dim} differs from config d={d}")
    if arms is None:
        arms = draw_arms(d, stream_rng(cfg.seed, "arms"))
    arms = np.asarray(arms, dtype=float)
    if arms.shape != (d, d):
        raise DomainError("arms must be a d x d array, one arm per row")
    buf = collect_rewards(env, arms, cfg.N)
    A0, A1 = build_A_matrices(buf, cfg)
    gamma = cfg.gamma
    A0_hat = truncate_singular(A0, gamma)
    out = A1 @ pseudo_inverse(A0_hat)
    raw = eigenvalues(out)
    spec = np.where(np.abs(raw) < gamma, 0.0, raw).astype(complex)
    return EigenEstimate(
        output_matrix=out,
        spectrum=spec,
        raw_spectrum=raw,
        gamma_used=gamma,
        pulls_used=cfg.N + buf.values.size,
        A0=A0,
        A1=A1,
        singular_values=svd(A0).singular_values,
        arms=arms,
    )


def target_matrix(M, theta, arms, unit_tol: float = 1e-8, comp_tol: float = 1e-10) -> np.ndarray:
    """Noise-free limit ``X_V diag(alpha^d) pinv(X_V)`` of the estimator's output.

    ``V`` collects the components of ``theta`` on unit-modulus eigenvalues
    ``alpha`` of ``M``; row ``k`` of ``X_V`` is ``x_k^T V diag(alpha^(2(k-1)d+1))``.
    The result does not depend on how ``theta`` is scaled or shifted in time
    along those components.
    """
    M = np.asarray(M, dtype=float)
    X = np.asarray(arms, dtype=float)
    d = M.shape[0]
    comps = [
        (a, v) for a, v in eigen_components(M, theta)
        if abs(abs(a) - 1.0) <= unit_tol and np.linalg.norm(v) > comp_tol
    ]
    if not comps:
        return np.zeros((d, d), dtype=complex)
    lam = np.array([a for a, _ in comps])
    V = np.column_stack([v for _, v in comps])
    XV = np.stack([X[k] @ V * lam ** (2 * k * d + 1) for k in range(d)])
    return XV @ np.diag(lam**d) @ np.linalg.pinv(XV)


def reconstruct_unit_eigenvalues(env: BanditEnv, cfg: EigenConfig, r_pad: int = 0,
                                 arms=None) -> np.ndarray:
    """Unit-circle eigenvalues of the hidden ``M`` itself, via a padded run and a matrix power.

    With ``D = d + r_pad`` coprime to ``L`` and ``m D = 1 (mod L)``, the ``m``-th
    power of the ``D``-dimensional estimate has eigenvalues ``alpha^(mD) = alpha``.
    """
    if r_pad < 0:
        raise ConfigError("r_pad must be nonnegative")
    D = cfg.d + r_pad
    if math.gcd(D, cfg.L) != 1:
        raise ConfigError(f"d + r_pad = {D} is not coprime to L = {cfg.L}")
    m = pow(D, -1, cfg.L) if cfg.L > 1 else 1
    if env.dim != cfg.d:
        raise DomainError(f"environment dimension {env.dim} differs from config d={cfg.d}")
    padded = PaddedEnv(env, r_pad) if r_pad else env
    est = estimate_eigen_map(padded, replace(cfg, d=D), arms=arms)
    P = np.linalg.matrix_power(est.output_matrix, m)
    lam = eigenvalues(P)
    lam = lam[np.abs(lam) >= est.gamma_used]
    return np.array(sorted(lam, key=lambda z: (round(float(np.angle(z)), 9), abs(z))), dtype=complex)
