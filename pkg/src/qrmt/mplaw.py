"""Marcenko-Pastur law with ratio ``y`` and scale ``sigma2``.

The CDF is computed by adaptive Simpson quadrature after the substitution
``x = a + (b - a) sin^2(theta)``, which removes the square-root behaviour
of the density at both edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

QUAD_TOL = 1e-10
MAX_DEPTH = 50
MIN_DEPTH = 4


class QuadratureError(RuntimeError):
    pass


def adaptive_simpson(f, lo: float, hi: float, tol: float = QUAD_TOL,
                     max_depth: int = MAX_DEPTH, min_depth: int = MIN_DEPTH) -> float:
    """Integrate ``f`` over ``[lo, hi]`` with Richardson-corrected adaptive Simpson.

    Intervals are always split ``min_depth`` times before the error test is
    trusted; symmetric integrands can otherwise pass it by coincidence.
    """
    if hi == lo:
        return 0.0
    flo, fhi = f(lo), f(hi)
    mid = 0.5 * (lo + hi)
    fmid = f(mid)
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    # explicit stack: (lo, hi, flo, fmid, fhi, whole, tol, depth)
    stack = [(lo, hi, flo, fmid, fhi, whole, tol, 0)]
    total = 0.0
    while stack:
        a, b, fa, fm, fb, s, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - s
        if depth >= min_depth and abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        elif depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge on [{a}, {b}]")
        else:
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
    return total


@dataclass(frozen=True)
class MPLaw:
    y: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not (self.y > 0 and self.sigma2 > 0):
            raise ValueError("y and sigma2 must be positive")

    @property
    def a(self) -> float:
        return self.sigma2 * (1.0 - math.sqrt(self.y)) ** 2

    @property
    def b(self) -> float:
        return self.sigma2 * (1.0 + math.sqrt(self.y)) ** 2

    @property
    def atom(self) -> float:
        """Mass at zero: ``1 - 1/y`` for ``y > 1``."""
        return 1.0 - 1.0 / self.y if self.y > 1 else 0.0

    def support(self) -> tuple[float, float]:
        return support(self)

    def density(self, x: float) -> float:
        return density(self, x)

    def cdf(self, x):
        return cdf(self, x)

    def moment(self, k: int) -> float:
        return moment(self, k)


def support(law: MPLaw) -> tuple[float, float]:
    return law.a, law.b


def density(law: MPLaw, x: float) -> float:
    """Absolutely continuous part of the law (the atom at 0 is excluded)."""
    if x <= 0:
        raise ValueError("density is defined for x > 0 only")
    a, b = law.a, law.b
    if x <= a or x >= b:
        return 0.0
    return math.sqrt((b - x) * (x - a)) / (2.0 * math.pi * x * law.y * law.sigma2)


def _theta_integrand(law: MPLaw, power: int = 0):
    """Density times ``x**power`` in the variable ``theta``.

    With ``x = a + (b-a) sin^2 t`` the integrand becomes
    ``(b-a)^2 sin^2(2t) x^(power-1) / (4 pi y sigma2)``.
    """
    a, b = law.a, law.b
    w = b - a
    const = 1.0 / (4.0 * math.pi * law.y * law.sigma2)

    if power == 0 and a == 0.0:
        # y == 1: sin^2(2t) / sin^2(t) = 4 cos^2(t)
        def f(t):
            return const * w * 4.0 * math.cos(t) ** 2
        return f

    def f(t):
        s2 = math.sin(t) ** 2
        x = a + w * s2
        return const * w * w * math.sin(2.0 * t) ** 2 * x ** (power - 1)
    return f


def _theta_of(law: MPLaw, x: float) -> float:
    a, b = law.a, law.b
    u = (x - a) / (b - a)
    return math.asin(math.sqrt(min(max(u, 0.0), 1.0)))


def continuous_mass(law: MPLaw) -> float:
    """Integral of the density over ``[a, b]``; equals ``min(1, 1/y)``."""
    return adaptive_simpson(_theta_integrand(law), 0.0, 0.5 * math.pi)


def cdf(law: MPLaw, x):
    """``F(x)`` including the atom at 0 when ``y > 1``. Accepts a scalar or array."""
    if np.ndim(x):
        return cdf_many(law, np.asarray(x, dtype=float))
    if x < 0:
        return 0.0
    if x >= law.b:
        return 1.0
    base = law.atom
    if x <= law.a:
        return base
    val = base + adaptive_simpson(_theta_integrand(law), 0.0, _theta_of(law, x))
    return min(max(val, 0.0), 1.0)


def cdf_many(law: MPLaw, xs: np.ndarray) -> np.ndarray:
    """Vectorised CDF: integrates between consecutive sorted points only once."""
    xs = np.asarray(xs, dtype=float)
    flat = xs.ravel()
    order = np.argsort(flat, kind="stable")
    out = np.empty_like(flat)
    f = _theta_integrand(law)
    acc = 0.0
    prev_t = 0.0
    for idx in order:
        x = flat[idx]
        if x < 0:
            out[idx] = 0.0
            continue
        if x >= law.b:
            out[idx] = 1.0
            continue
        t = _theta_of(law, x) if x > law.a else 0.0
        if t > prev_t:
            acc += adaptive_simpson(f, prev_t, t)
            prev_t = t
        out[idx] = min(max(law.atom + acc, 0.0), 1.0)
    return out.reshape(xs.shape)


def quantile(law: MPLaw, q: float, tol: float = 1e-12) -> float:
    """Smallest ``x`` with ``F(x) >= q`` (bisection on the CDF)."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    if q <= law.atom:
        return 0.0
    lo, hi = law.a, law.b
    while hi - lo > tol * max(1.0, law.b):
        mid = 0.5 * (lo + hi)
        if cdf(law, mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def moment(law: MPLaw, k: int) -> float:
    """``E X^k`` for the full law; the atom contributes nothing for ``k >= 1``.

    m_k = sigma2^k * sum_{r=0}^{k-1} y^r / (r+1) * C(k, r) * C(k-1, r)
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return 1.0
    total = sum(law.y ** r * (math.comb(k, r) * math.comb(k - 1, r) // (r + 1))
                for r in range(k))
    return law.sigma2 ** k * total


def moment_quadrature(law: MPLaw, k: int, rtol: float = 1e-13) -> float:
    """``E X^k`` by adaptive Simpson on the density (independent of the closed form).

    The absolute tolerance is ``rtol * b**k``, ``b**k`` bounding the moment.
    """
    if k == 0:
        return 1.0
    tol = rtol * max(1.0, law.b ** k)
    return adaptive_simpson(_theta_integrand(law, power=k), 0.0, 0.5 * math.pi, tol=tol)


def narayana(k: int, s: int) -> int:
    """``N(k, s) = C(k, s) C(k, s-1) / k``."""
    if not 1 <= s <= k:
        return 0
    return math.comb(k, s) * math.comb(k, s - 1) // k
