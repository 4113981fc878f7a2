"""Period estimation from bandit rewards by a divisor search over exponential sums.

Each coordinate of the hidden trajectory is observed through one basis arm for
``T_p`` consecutive steps. The buffered rewards are then searched for a
frequency ``alpha/ell`` whose exponential sum over a stride-``beta``
subsequence clears the threshold ``eps``; each hit multiplies ``beta`` by
``ell``. The final ``beta`` is a divisor of the true nearly-period that keeps
the trajectory within ``rho + 2 lambda mu`` of itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .envs import BanditEnv
from .errors import BudgetError, ConfigError, DomainError
from .numerics import exp_sum, reduced_fractions

PULL_CHUNK = 1 << 18


@dataclass(frozen=True)
class PeriodConfig:
    rho: float
    delta: float
    L_max: int
    d: int
    R: float
    B: float
    r_margin: float = 0.0
    budget: int | None = None

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigError("rho must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if int(self.L_max) != self.L_max or self.L_max < 2:
            raise ConfigError("L_max must be an integer >= 2")
        if not 0.0 <= self.r_margin < 1.0:
            raise ConfigError("r_margin must lie in [0, 1)")
        if not self.B > 0:
            raise ConfigError("B must be positive")
        if self.d < 1:
            raise ConfigError("d must be positive")
        if self.R < 0:
            raise ConfigError("R must be nonnegative")
        if self.budget is not None and self.budget < 0:
            raise ConfigError("budget must be nonnegative")

    # quantities from the correctness argument, exposed for testing
    @property
    def gamma(self) -> float:
        return 1.0 / (1.0 + math.sqrt(4 * self.L_max + 1))

    @property
    def sigma0(self) -> float:
        return self.rho / (2.0 * math.sqrt(self.d * self.L_max))

    @property
    def xi(self) -> float:
        return 1.0 / (3.0 * self.gamma * math.sqrt(self.L_max))

    def lambda_(self, mu: float) -> float:
        return mu / (self.sigma0 * self.gamma)


@dataclass(frozen=True)
class SearchRecord:
    """One exponential-sum evaluation of the divisor search."""

    dimension: int
    beta: int
    ell: int
    s: int
    q: Fraction
    value: float
    hit: bool


@dataclass
class PeriodEstimate:
    beta: int
    per_dimension_log: list[list[SearchRecord]]
    total_pulls: int
    T_p: int
    eps: float
    hits: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "hits": list(self.hits),
            "total_pulls": self.total_pulls,
            "T_p": self.T_p,
            "eps": self.eps,
        }

    def spectrum_rows(self) -> list[dict]:
        return [
            {
                "dimension": r.dimension,
                "beta": r.beta,
                "ell": r.ell,
                "s": r.s,
                "q": f"{r.q.numerator}/{r.q.denominator}",
                "value": r.value,
                "hit": int(r.hit),
            }
            for log in self.per_dimension_log
            for r in log
        ]


def threshold_eps(cfg: PeriodConfig) -> float:
    return cfg.rho / (6.0 * math.sqrt(cfg.d) * cfg.L_max)


def _ceil(x: float) -> int:
    # absorb roundoff when the bound lands on an integer
    return math.ceil(x * (1.0 - 1e-12))


def required_samples(cfg: PeriodConfig) -> int:
    """Per-dimension sample count ``T_p`` guaranteeing the divisor search succeeds w.p. 1 - delta."""
    d, L, rho, one_r = cfg.d, cfg.L_max, cfg.rho, 1.0 - cfg.r_margin
    A = cfg.R**2 * math.log(4.0 * d * L * L * math.log(L) / cfg.delta)
    x = 72.0 * d * A * L * L / (rho * rho * one_r * one_r) + 108.0 * cfg.B * math.sqrt(d) * L**3 / (rho * one_r)
    return max(1, _ceil(x))


def divisor_search(rewards: np.ndarray, eps: float, L_max: int, beta: int = 1,
                   dimension: int = 0) -> tuple[int, list[int], list[SearchRecord]]:
    """Refine ``beta`` on one buffered reward run. Returns ``(beta, hit_ells, log)``."""
    T = rewards.size
    log: list[SearchRecord] = []
    hits: list[int] = []
    ell = 1
    while (ell + 1) * beta <= L_max:
        ell += 1
        n = T // beta
        if n == 0:
            break
        hit = False
        for s in range(beta):
            sub = rewards[s :: beta][:n]
            for q in reduced_fractions(ell):
                v = abs(exp_sum(sub, q))
                hit = v > eps
                log.append(SearchRecord(dimension, beta, ell, s, q, v, hit))
                if hit:
                    break
            if hit:
                break
        if hit:
            beta *= ell
            hits.append(ell)
            ell = 1
    return beta, hits, log


def estimate_period(env: BanditEnv, cfg: PeriodConfig, basis=None) -> PeriodEstimate:
    """Sweep the basis arms for ``T_p`` steps each and refine ``beta`` after every sweep."""
    d = cfg.d
    if env.dim != d:
        raise DomainError(f"environment dimension {env.dim} differs from config d={d}")
    U = np.eye(d) if basis is None else np.asarray(basis, dtype=float)
    if U.shape != (d, d) or not np.allclose(U @ U.T, np.eye(d), atol=1e-9):
        raise DomainError("basis must be d orthonormal vectors")
    T_p = required_samples(cfg)
    eps = threshold_eps(cfg)
    if cfg.budget is not None and d * T_p > cfg.budget:
        raise BudgetError(f"needs {d * T_p} pulls, budget is {cfg.budget}")

    beta = 1
    logs, hits = [], []
    total = 0
    for m in range(d):
        buf = np.empty(T_p)
        done = 0
        while done < T_p:
            c = min(PULL_CHUNK, T_p - done)
            buf[done : done + c] = env.pull_many(np.broadcast_to(U[m], (c, d)))
            done += c
        total += T_p
        beta, h, log = divisor_search(buf, eps, cfg.L_max, beta, dimension=m)
        hits.extend(h)
        logs.append(log)
    return PeriodEstimate(beta, logs, total, T_p, eps, hits)


def _class_diameter(points: np.ndarray) -> float:
    """Largest pairwise distance in a point set (exact)."""
    pts = np.unique(points, axis=0)
    if pts.shape[0] < 2:
        return 0.0
    if pts.shape[1] == 2 and pts.shape[0] > 64:
        from scipy.spatial import ConvexHull, QhullError

        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            # collinear points: the extremes along the principal direction
            c = pts - pts.mean(axis=0)
            _, _, vt = np.linalg.svd(c, full_matrices=False)
            proj = c @ vt[0]
            pts = pts[[int(np.argmin(proj)), int(np.argmax(proj))]]
    best = 0.0
    step = max(1, 4_000_000 // max(pts.shape[0], 1))
    for i in range(0, pts.shape[0], step):
        blk = pts[i : i + step]
        diff = blk[:, None, :] - pts[None, :, :]
        best = max(best, float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff)))))
    return best


def is_aliquot_nearly_period(trajectory, ell: int, rho: float, lam: float, mu: float, L: int) -> bool:
    """True iff ``ell | L`` and every pair ``y_s, y_{s + ell t}`` is closer than ``rho + 2 lam mu``."""
    y = np.asarray(trajectory, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if ell < 1 or L < 1:
        raise DomainError("ell and L must be positive")
    if y.shape[0] <= 2 * ell:
        raise DomainError("trajectory must cover at least two full strides")
    if L % ell:
        return False
    bound = rho + 2.0 * lam * mu
    return all(_class_diameter(y[c::ell]) < bound for c in range(ell))
