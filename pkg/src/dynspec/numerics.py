"""Exponential sums, Weyl sums and the concentration bounds both estimators rest on.

Everything here is a pure function of its arguments. Long sums (the period
estimator feeds ~10^6 samples) go through :func:`math.fsum`, so roundoff stays
far below the detection thresholds (~1e-3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import DomainError

#: Constant of the non-divisor upper bound, ``1 + 2 / (sqrt(2) pi (3/4)^(pi^2/6))``.
C0 = 1.0 + 2.0 / (math.sqrt(2.0) * math.pi * 0.75 ** (math.pi**2 / 6.0))


def reduced_rational(numerator: int, denominator: int) -> Fraction:
    """Return ``numerator/denominator`` after checking it is in lowest terms and in (0, 1)."""
    if denominator <= 0 or numerator <= 0:
        raise DomainError("numerator and denominator must be positive")
    if math.gcd(numerator, denominator) != 1:
        raise DomainError(f"{numerator}/{denominator} is not reduced")
    if numerator >= denominator:
        raise DomainError(f"{numerator}/{denominator} is not in (0, 1)")
    return Fraction(numerator, denominator)


def reduced_fractions(denominator: int) -> list[Fraction]:
    """All fractions in (0, 1) whose reduced denominator is exactly ``denominator``, ascending."""
    if denominator < 1:
        raise DomainError("denominator must be positive")
    return [
        Fraction(a, denominator)
        for a in range(1, denominator)
        if math.gcd(a, denominator) == 1
    ]


@dataclass(frozen=True)
class ComplexSeries:
    """A finite run of samples ``a_1..a_T`` observed from global time ``origin_time`` on.

    ``origin_time`` is bookkeeping only; sums always index the samples from 1.
    """

    samples: np.ndarray = field(repr=False)
    origin_time: int = 1

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("a series needs at least one sample")
        if not np.all(np.isfinite(arr)):
            raise DomainError("series samples must be finite")
        if self.origin_time < 1:
            raise DomainError("origin_time starts at 1")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class SubGaussianSpec:
    """Variance proxy ``R`` of a conditionally sub-Gaussian noise sequence."""

    proxy: float

    def __post_init__(self):
        if not (self.proxy >= 0 and math.isfinite(self.proxy)):
            raise DomainError("sub-Gaussian proxy must be a finite nonnegative number")


SeriesLike = Union[ComplexSeries, Sequence[complex], np.ndarray]


def _samples(series: SeriesLike) -> np.ndarray:
    if isinstance(series, ComplexSeries):
        return series.samples
    arr = np.asarray(series)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("a series needs at least one sample")
    if not np.all(np.isfinite(arr)):
        raise DomainError("series samples must be finite")
    return arr


def _fsum_real(x: np.ndarray) -> float:
    return math.fsum(x.ravel().tolist())


def accurate_sum(x: np.ndarray) -> np.ndarray | complex | float:
    """Correctly rounded sum along axis 0 (``math.fsum`` per output entry).

    Works for real or complex arrays of any trailing shape.
    """
    x = np.asarray(x)
    if x.ndim == 1:
        if np.iscomplexobj(x):
            return complex(_fsum_real(x.real), _fsum_real(x.imag))
        return _fsum_real(x)
    n = x.shape[0]
    flat = x.reshape(n, -1)
    if np.iscomplexobj(flat):
        out = np.array([complex(_fsum_real(c.real), _fsum_real(c.imag)) for c in flat.T])
    else:
        out = np.array([_fsum_real(c) for c in flat.T])
    return out.reshape(x.shape[1:])


def _as_fraction(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, (int, np.integer)):
        return Fraction(int(q))
    if isinstance(q, tuple) and len(q) == 2:
        return Fraction(int(q[0]), int(q[1]))
    raise DomainError(f"frequency must be rational (Fraction or (num, den)), got {q!r}")


def exp_sum(series: SeriesLike, q) -> complex:
    """Normalized exponential sum ``(1/T) sum_{j=1}^T a_j exp(i 2 pi q j)``.

    ``q`` is a rational number. Samples are grouped by ``j mod den(q)`` so every
    phase is evaluated exactly once from an integer residue.
    """
    a = _samples(series)
    q = _as_fraction(q)
    den = q.denominator
    num = q.numerator % den
    T = a.size
    total_re: list[float] = []
    total_im: list[float] = []
    for c in range(den):
        # sample j (1-based) sits at index j-1; j = c (mod den)
        cls = a[(c - 1) % den :: den]
        if cls.size == 0:
            continue
        s = accurate_sum(cls)
        s = complex(s)
        ang = 2.0 * math.pi * ((num * c) % den) / den
        ph = complex(math.cos(ang), math.sin(ang))
        v = s * ph
        total_re.append(v.real)
        total_im.append(v.imag)
    return complex(math.fsum(total_re), math.fsum(total_im)) / T


def sigma_window(series: SeriesLike, L: int) -> float:
    """Largest population standard deviation over all length-``L`` windows of the series."""
    a = _samples(series)
    if L < 1:
        raise DomainError("window length must be positive")
    if a.size < L:
        raise DomainError(f"series of length {a.size} is shorter than the window {L}")
    win = np.lib.stride_tricks.sliding_window_view(a, L)
    centred = win - win.mean(axis=1, keepdims=True)
    var = np.mean(np.abs(centred) ** 2, axis=1)
    return float(np.sqrt(var.max()))


def weyl_sum_scalar(N: int, b: int, q: int) -> complex:
    """Unnormalized Weyl sum ``sum_{j=0}^N exp(i 2 pi (2 b j + j^2) / (4 q))``."""
    if N < 0 or b < 0 or q < 1:
        raise DomainError("need N >= 0, b >= 0, q >= 1")
    if b >= q:
        raise DomainError(f"b={b} must be smaller than q={q}")
    mod = 4 * q
    r = np.arange(mod)
    # the summand depends only on j mod 4q
    counts = (N - r) // mod + 1
    counts[r > N] = 0
    expo = (r * r + 2 * b * r) % mod
    ang = 2.0 * np.pi * expo / mod
    return complex(
        math.fsum((counts * np.cos(ang)).tolist()),
        math.fsum((counts * np.sin(ang)).tolist()),
    )


def weyl_lower_constant(q: int, N: int | None = None) -> float:
    """Empirical constant ``min_b |W(N, b, q)| sqrt(q) / N`` at ``N = 16 q^2`` by default.

    This stands in for the non-computable inf/sup constant of the Weyl lower bound;
    it is used for diagnostics only.
    """
    if N is None:
        N = 16 * q * q
    return min(abs(weyl_sum_scalar(N, b, q)) * math.sqrt(q) / N for b in range(q))


def phase_weighted_mean(values: np.ndarray, L: int) -> np.ndarray:
    """``(1/N) sum_{j=0}^{N-1} values[j] exp(i 2 pi j^2 / (4 L))`` along axis 0.

    The phase depends only on ``j mod 2L``, so rows are summed per residue class
    first and each class is multiplied by its phase once.
    """
    values = np.asarray(values)
    if L < 1:
        raise DomainError("L must be positive")
    N = values.shape[0]
    if N == 0:
        raise DomainError("need at least one term")
    period = 2 * L
    parts = []
    for r in range(min(period, N)):
        s = accurate_sum(values[r::period])
        ang = 2.0 * math.pi * ((r * r) % (4 * L)) / (4 * L)
        parts.append(np.asarray(s) * complex(math.cos(ang), math.sin(ang)))
    stacked = np.stack([np.asarray(p, dtype=complex) for p in parts])
    acc = accurate_sum(stacked)
    return np.asarray(acc) / N


def weyl_matrix_sum(matrices, L: int) -> np.ndarray:
    """Phase-weighted average ``(1/N) sum_{j=0}^{N-1} M_{j+1} exp(i 2 pi j^2 / (4 L))``."""
    if isinstance(matrices, np.ndarray):
        mats = matrices
    else:
        mats = list(matrices)
        if not mats:
            raise DomainError("need at least one matrix")
        shapes = {np.shape(m) for m in mats}
        if len(shapes) != 1:
            raise DomainError(f"matrix dimensions differ: {sorted(shapes)}")
        mats = np.stack([np.asarray(m) for m in mats])
    if mats.ndim != 3 or mats.shape[0] == 0 or mats.shape[1] != mats.shape[2]:
        raise DomainError("expected a non-empty stack of square matrices")
    return phase_weighted_mean(mats, L)


def concentration_radius(spec: SubGaussianSpec | float, n: int, delta: float) -> float:
    """Radius ``sqrt(4 R^2 log(4/delta) / n)`` bounding a unit-weighted noise average w.p. 1-delta."""
    R = spec.proxy if isinstance(spec, SubGaussianSpec) else float(spec)
    if R < 0:
        raise DomainError("proxy must be nonnegative")
    if n < 1:
        raise DomainError("n must be at least 1")
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    return math.sqrt(4.0 * R * R * math.log(4.0 / delta) / n)


def geometric_phase_exact(a: float) -> float:
    """``|1 / (1 - exp(i 2 pi a))|``."""
    return 1.0 / abs(1.0 - complex(math.cos(2 * math.pi * a), math.sin(2 * math.pi * a)))


def geometric_phase_bound(a: float) -> float:
    """Upper bound ``1 / (sqrt(2) (1 - a^2)^(pi^2/6) a)`` on :func:`geometric_phase_exact`."""
    if not 0.0 < a < 1.0:
        raise DomainError("a must lie in (0, 1)")
    return 1.0 / (math.sqrt(2.0) * (1.0 - a * a) ** (math.pi**2 / 6.0) * a)


def nondivisor_upper_bound(L: int, T: int, sup_abs: float, mu: float = 0.0) -> float:
    # |R(a; alpha/beta)| for a mu-nearly L-periodic a and reduced beta not dividing L
    return mu + L * L * C0 * (mu + sup_abs) / T


def divisor_lower_bound(sigma: float, L: int, T: int, sup_abs: float, mu: float = 0.0) -> float:
    # some s < L has |R(a; s/L)| above this value
    inner = max(sigma * sigma - 2.0 * mu * sigma, 0.0)
    return math.sqrt(inner / L) - mu - L * sup_abs / T
