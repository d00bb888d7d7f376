"""Entry distributions, seeding and truncation for quaternion data matrices.

Seeds: a trial's generator is ``numpy.random.Generator(PCG64(mix(seed, stream)))``
where ``mix`` is the SplitMix64 finalizer applied to
``seed * 0x9E3779B97F4A7C15 + stream`` (all arithmetic mod 2**64):

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qmatrix import QMatrix

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

KINDS = ("gaussian", "signed-unit", "pareto-heavy", "shifted-mean")
ALIASES = {"pareto": "pareto-heavy", "shifted": "shifted-mean", "signed": "signed-unit"}


def mix(seed: int, stream: int) -> int:
    """64-bit child seed for ``(seed, stream)``."""
    z = (int(seed) * GOLDEN + int(stream)) & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(mix(seed, stream)))


@dataclass(frozen=True)
class EntryDistribution:
    """Law of one quaternion entry.

    ``sigma2`` is ``E||x - Ex||^2``. ``tail_index`` only matters for
    ``pareto-heavy`` and ``shift`` (the mean, a quaternion given by its
    coefficients) only for ``shifted-mean``.
    """

    kind: str = "gaussian"
    sigma2: float = 1.0
    tail_index: float = 3.0
    shift: tuple[float, float, float, float] = field(default=(1.0, 0.0, 0.0, 0.0))

    def __post_init__(self):
        kind = ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown distribution {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "shift", tuple(float(c) for c in self.shift))
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if kind == "pareto-heavy" and self.tail_index <= 2:
            raise ValueError("tail_index must exceed 2 for a finite variance")

    @property
    def pareto_scale(self) -> float:
        """Scale ``x_m`` making ``E||x||^2 = sigma2`` for Pareto(alpha) norms."""
        alpha = self.tail_index
        return math.sqrt(self.sigma2 * (alpha - 2.0) / alpha)

    def sample(self, rng: np.random.Generator, size: tuple[int, ...]) -> np.ndarray:
        """Coefficient array of shape ``size + (4,)``."""
        shape = tuple(size) + (4,)
        if self.kind in ("gaussian", "shifted-mean"):
            out = rng.standard_normal(shape) * math.sqrt(self.sigma2 / 4.0)
            if self.kind == "shifted-mean":
                out += np.asarray(self.shift)
            return out
        if self.kind == "signed-unit":
            axis = rng.integers(0, 4, size=size)
            sign = rng.integers(0, 2, size=size) * 2.0 - 1.0
            out = np.zeros(shape)
            np.put_along_axis(out, axis[..., None], sign[..., None], axis=-1)
            return out * math.sqrt(self.sigma2)
        # pareto-heavy: Pareto norm, uniform direction on the unit 3-sphere
        direction = rng.standard_normal(shape)
        direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
        radius = self.pareto_scale * (1.0 - rng.random(size)) ** (-1.0 / self.tail_index)
        return direction * radius[..., None]

    def tail_probability(self, r: float) -> float:
        """``P(||x|| > r)`` for ``pareto-heavy``."""
        if self.kind != "pareto-heavy":
            raise ValueError("closed-form tail only for pareto-heavy")
        xm = self.pareto_scale
        return 1.0 if r < xm else (xm / r) ** self.tail_index


def sample_matrix(dist: EntryDistribution, p: int, n: int, seed: int, stream: int = 0) -> QMatrix:
    if p < 1 or n < 1:
        raise ValueError("p and n must be positive")
    return QMatrix(dist.sample(generator(seed, stream), (p, n)))


@dataclass(frozen=True)
class TruncationSchedule:
    """``delta_n = scale * n**(-exponent)``; needs ``0 < exponent < 1/2``."""

    exponent: float = 0.125
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.exponent < 0.5:
            raise ValueError("exponent must lie in (0, 1/2) so that delta_n * sqrt(n) grows")

    def delta(self, n: int) -> float:
        return self.scale * float(n) ** (-self.exponent)

    def threshold(self, n: int) -> float:
        return self.delta(n) * math.sqrt(n)


def truncate_centralize(x: QMatrix, n: int | None = None,
                        schedule: TruncationSchedule = TruncationSchedule()) -> QMatrix:
    """Zero entries with norm above ``delta_n sqrt(n)``, then subtract the grand mean."""
    if n is None:
        n = x.cols
    c = np.array(x.coeffs)
    keep = x.entry_norms() <= schedule.threshold(n)
    c[~keep] = 0.0
    c -= c.reshape(-1, 4).mean(axis=0)
    return QMatrix(c)


def truncated_fraction(x: QMatrix, n: int | None = None,
                       schedule: TruncationSchedule = TruncationSchedule()) -> float:
    if n is None:
        n = x.cols
    return float(np.mean(x.entry_norms() > schedule.threshold(n)))
