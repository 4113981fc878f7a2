"""Bandit environments: a hidden trajectory ``f^t(theta)`` observed one noisy scalar at a time.

Each pull at clock ``t`` returns ``f^t(theta) . x + eta_t`` and advances the
clock by one. Noise comes from a per-environment counter-based stream that
moves once per pull, whatever the arm, so one seed and one pull sequence give
one reward stream. ``pull_many`` is the vectorized equivalent of repeated
``pull`` calls and produces identical numbers.
"""
from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, EnvironmentExhausted

STREAMS = {"noise": 1, "arms": 2, "theta": 3}


def stream_rng(seed: int, stream: str | int) -> np.random.Generator:
    """Philox generator keyed by ``(seed, stream)``; different streams never share draws."""
    sid = STREAMS[stream] if isinstance(stream, str) else int(stream)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & (2**64 - 1), sid])))


def random_unit_vectors(d: int, count: int, seed) -> np.ndarray:
    """``count`` vectors uniform on the unit sphere of R^d (normalized Gaussians), shape (count, d)."""
    if d < 1 or count < 0:
        raise DomainError("need d >= 1 and count >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else stream_rng(seed, "arms")
    out = np.empty((count, d))
    for i in range(count):
        v = rng.standard_normal(d)
        n = np.linalg.norm(v)
        while n == 0.0:
            v = rng.standard_normal(d)
            n = np.linalg.norm(v)
        out[i] = v / n
    return out


@dataclass
class NoiseModel:
    """i.i.d. additive noise: ``gaussian`` is N(0, R^2), ``uniform`` is U[-R, R]; both R-sub-Gaussian."""

    kind: str = "none"
    proxy: float = 0.0
    rng_seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform", "none"):
            raise DomainError(f"unknown noise kind {self.kind!r}")
        if not self.proxy >= 0:
            raise DomainError("noise proxy must be nonnegative")
        self._rng = stream_rng(self.rng_seed, "noise")

    def draw(self, n: int) -> np.ndarray:
        if self.kind == "gaussian":
            return self._rng.normal(0.0, self.proxy, n)
        if self.kind == "uniform":
            return self._rng.uniform(-self.proxy, self.proxy, n)
        return np.zeros(n)


class BanditEnv:
    """Shared pull logic. Subclasses implement ``_states(n)`` and ``hidden_state()``."""

    dim: int

    def __init__(self, dim: int, noise: NoiseModel | None = None, horizon: int | None = None,
                 arm_bound: float = 1.0):
        self.dim = dim
        self.noise = noise if noise is not None else NoiseModel()
        self.horizon = horizon
        self.arm_bound = arm_bound
        self.t = 0

    def _states(self, n: int) -> np.ndarray:
        """Hidden states for clocks ``t .. t+n-1``; advances the internal dynamics by ``n``."""
        raise NotImplementedError

    def hidden_state(self) -> np.ndarray:
        raise NotImplementedError

    def pull(self, x) -> float:
        return float(self.pull_many(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def pull_many(self, arms) -> np.ndarray:
        arms = np.asarray(arms, dtype=float)
        if arms.ndim != 2 or arms.shape[1] != self.dim:
            raise DomainError(f"arms must have shape (n, {self.dim}), got {arms.shape}")
        n = arms.shape[0]
        if n == 0:
            return np.zeros(0)
        norms = np.sqrt(np.einsum("ij,ij->i", arms, arms))
        if norms.max() > self.arm_bound * (1 + 1e-9):
            raise DomainError(f"arm norm {norms.max():.6g} exceeds the arm-set bound {self.arm_bound}")
        if self.horizon is not None and self.t + n > self.horizon:
            raise EnvironmentExhausted(f"horizon {self.horizon} reached at t={self.t}")
        states = self._states(n)
        rewards = np.einsum("ij,ij->i", states, arms) + self.noise.draw(n)
        self.t += n
        return rewards

    def peek_trajectory(self, n: int) -> np.ndarray:
        """The next ``n`` hidden states, without touching this environment's clock or noise."""
        return copy.deepcopy(self)._states(n)


class LinearSystemEnv(BanditEnv):
    """``f(theta) = M theta`` for a real square matrix ``M``."""

    _CHUNK = 4096

    def __init__(self, M, theta, noise: NoiseModel | None = None, horizon: int | None = None,
                 arm_bound: float = 1.0):
        M = np.asarray(M, dtype=float)
        theta = np.asarray(theta, dtype=float).ravel()
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != theta.size:
            raise DomainError("M must be square and match theta")
        super().__init__(theta.size, noise, horizon, arm_bound)
        self.M = M
        self.theta = theta.copy()
        self._powers: np.ndarray | None = None

    def _power_stack(self) -> np.ndarray:
        if self._powers is None:
            d = self.dim
            P = np.empty((self._CHUNK + 1, d, d))
            P[0] = np.eye(d)
            for k in range(1, self._CHUNK + 1):
                P[k] = self.M @ P[k - 1]
            self._powers = P
        return self._powers

    def _states(self, n: int) -> np.ndarray:
        P = self._power_stack()
        out = np.empty((n, self.dim))
        done = 0
        while done < n:
            c = min(self._CHUNK, n - done)
            out[done : done + c] = P[:c] @ self.theta
            self.theta = P[c] @ self.theta
            done += c
        return out

    def hidden_state(self) -> np.ndarray:
        return self.theta.copy()


def life_step(grid: np.ndarray) -> np.ndarray:
    """One LifeGame generation on a bounded grid (outside cells are dead)."""
    g = np.asarray(grid, dtype=bool)
    p = np.pad(g.astype(np.int8), 1)
    h, w = g.shape
    n = sum(
        p[1 + di : 1 + di + h, 1 + dj : 1 + dj + w]
        for di in (-1, 0, 1)
        for dj in (-1, 0, 1)
        if (di, dj) != (0, 0)
    )
    return (g & ((n == 2) | (n == 3))) | (~g & (n == 3))


class LifeGameEnv(BanditEnv):
    """LifeGame grid observed through a fixed set of cells (alive = 1).

    The state space is finite, so the orbit is computed once until a grid
    repeats and later pulls just index into it.
    """

    MAX_ORBIT = 1 << 16

    def __init__(self, grid, observed_cells: Sequence[tuple[int, int]],
                 noise: NoiseModel | None = None, horizon: int | None = None,
                 arm_bound: float = 1.0):
        grid = np.asarray(grid, dtype=bool)
        if grid.ndim != 2:
            raise DomainError("grid must be 2-D")
        cells = [tuple(int(v) for v in c) for c in observed_cells]
        for r, c in cells:
            if not (0 <= r < grid.shape[0] and 0 <= c < grid.shape[1]):
                raise DomainError(f"observed cell {(r, c)} is off the grid")
        super().__init__(len(cells), noise, horizon, arm_bound)
        self.grid0 = grid.copy()
        self.observed_cells = cells
        self._rows = np.array([r for r, _ in cells])
        self._cols = np.array([c for _, c in cells])
        self._build_orbit()

    def _build_orbit(self):
        seen: dict[bytes, int] = {}
        grids = []
        g = self.grid0
        while True:
            key = np.packbits(g).tobytes()
            if key in seen:
                self.preperiod = seen[key]
                self.period = len(grids) - seen[key]
                break
            if len(grids) >= self.MAX_ORBIT:
                raise DomainError("LifeGame orbit did not close within the search limit")
            seen[key] = len(grids)
            grids.append(g)
            g = life_step(g)
        self._grids = np.stack(grids)
        self._obs = self._grids[:, self._rows, self._cols].astype(float)

    def _orbit_index(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t)
        return np.where(t < self.preperiod, t, self.preperiod + (t - self.preperiod) % self.period)

    def _states(self, n: int) -> np.ndarray:
        out = self._obs[self._orbit_index(np.arange(self.t, self.t + n))]
        return out

    def peek_trajectory(self, n: int) -> np.ndarray:
        return self._states(n)

    def hidden_state(self) -> np.ndarray:
        return self._obs[int(self._orbit_index(self.t))].copy()

    def grid(self) -> np.ndarray:
        return self._grids[int(self._orbit_index(self.t))].copy()


class CircleEnv(BanditEnv):
    """Point circling the origin in ``L`` steps while its radius wobbles inside ``(1 - mu, 1]``.

    Radius map: ``r' = mu (alpha (r-1)/mu - ceil(alpha (r-1)/mu)) + 1``. It is
    tracked through the offset ``u = (r-1)/mu`` to avoid cancellation. The angle
    is computed from the integer clock, so it is exactly ``L``-periodic.
    """

    def __init__(self, mu: float = 0.001, alpha: float = math.pi, L: int = 5,
                 radius: float = 1.0, angle: float = 0.0,
                 noise: NoiseModel | None = None, horizon: int | None = None,
                 arm_bound: float = 1.0):
        if not mu > 0:
            raise DomainError("mu must be positive")
        if L < 1:
            raise DomainError("L must be a positive integer")
        if not (1.0 - mu < radius <= 1.0):
            raise DomainError("initial radius must lie in (1 - mu, 1]")
        super().__init__(2, noise, horizon, arm_bound)
        self.mu = mu
        self.alpha = alpha
        self.L = L
        self.angle0 = angle
        self._u = (radius - 1.0) / mu

    @property
    def radius(self) -> float:
        return 1.0 + self.mu * self._u

    @property
    def angle(self) -> float:
        return self.angle0 + 2.0 * math.pi * (self.t % self.L) / self.L

    def _states(self, n: int) -> np.ndarray:
        u = self._u
        radii = np.empty(n)
        if u == 0.0:
            radii.fill(1.0)
        else:
            a, mu = self.alpha, self.mu
            for i in range(n):
                radii[i] = 1.0 + mu * u
                v = a * u
                u = v - math.ceil(v)
        self._u = u
        ticks = (self.t + np.arange(n)) % self.L
        ang = self.angle0 + 2.0 * np.pi * ticks / self.L
        return np.column_stack([radii * np.cos(ang), radii * np.sin(ang)])

    def peek_trajectory(self, n: int) -> np.ndarray:
        clone = copy.deepcopy(self)
        return clone._states(n)

    def hidden_state(self) -> np.ndarray:
        r, a = self.radius, self.angle
        return np.array([r * math.cos(a), r * math.sin(a)])


class PaddedEnv(BanditEnv):
    """Wrap an environment so its state is zero-padded with ``r`` extra coordinates.

    Equivalent to running the block matrix ``diag(M, 0)`` from ``(theta, 0)``.
    """

    def __init__(self, inner: BanditEnv, r: int):
        if r < 0:
            raise DomainError("padding must be nonnegative")
        super().__init__(inner.dim + r, inner.noise, None, inner.arm_bound)
        self.inner = inner
        self.r = r

    @property
    def t(self):
        return self.inner.t

    @t.setter
    def t(self, value):
        # the inner environment owns the clock
        pass

    def pull_many(self, arms) -> np.ndarray:
        arms = np.asarray(arms, dtype=float)
        if arms.ndim != 2 or arms.shape[1] != self.dim:
            raise DomainError(f"arms must have shape (n, {self.dim}), got {arms.shape}")
        norms = np.linalg.norm(arms, axis=1) if arms.size else np.zeros(0)
        if norms.size and norms.max() > self.arm_bound * (1 + 1e-9):
            raise DomainError("arm exceeds the arm-set bound")
        return self.inner.pull_many(arms[:, : self.inner.dim])

    def hidden_state(self) -> np.ndarray:
        return np.concatenate([self.inner.hidden_state(), np.zeros(self.r)])

    def peek_trajectory(self, n: int) -> np.ndarray:
        inner = self.inner.peek_trajectory(n)
        return np.hstack([inner, np.zeros((n, self.r))])


# ---------- fixtures ----------

def _data_path(name: str) -> Path:
    return Path(str(resources.files("dynspec") / "data" / name))


def load_lifegame_fixture(path: str | Path | None = None) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Read a grid of ``O``/``.`` rows plus an ``observed: r,c r,c ...`` line."""
    path = Path(path) if path is not None else _data_path("lifegame_figure8.txt")
    rows, cells = [], []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("observed:"):
            for tok in line.split(":", 1)[1].split():
                r, c = tok.split(",")
                cells.append((int(r), int(c)))
            continue
        rows.append([ch == "O" for ch in line])
    if not rows or len({len(r) for r in rows}) != 1:
        raise DomainError(f"{path}: malformed grid")
    return np.array(rows, dtype=bool), cells


def load_matrix(path: str | Path | None = None) -> np.ndarray:
    """Whitespace-separated real matrix; ``#`` starts a comment."""
    path = Path(path) if path is not None else _data_path("permshrink.txt")
    M = np.loadtxt(path, comments="#", ndmin=2)
    if M.shape[0] != M.shape[1]:
        raise DomainError(f"{path}: matrix is not square")
    return M


def write_reward_csv(path: str | Path, times: Iterable[int], arm_ids: Iterable[int],
                     rewards: Iterable[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "arm_id", "reward"])
        for t, a, r in zip(times, arm_ids, rewards):
            w.writerow([int(t), int(a), repr(float(r))])
