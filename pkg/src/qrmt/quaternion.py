"""Quaternion scalars and their 2x2 complex representation.

A quaternion ``a e + b i + c j + d k`` is stored by its four real
coefficients. The complex form

    [[a + bi,  c + di],
     [-c + di, a - bi]]

is only built on request (``embed2``); arithmetic works on the
coefficients directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ATOL = 1e-12
RTOL = 1e-10


@dataclass(frozen=True)
class Quaternion:
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0

    @classmethod
    def from_complex_pair(cls, lam: complex, omega: complex) -> "Quaternion":
        """Build from ``lam = a + bi`` and ``omega = c + di``."""
        return cls(lam.real, lam.imag, omega.real, omega.imag)

    @property
    def coeffs(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def __iter__(self):
        return iter(self.coeffs)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.a + other.a, self.b + other.b,
                          self.c + other.c, self.d + other.d)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.a - other.a, self.b - other.b,
                          self.c - other.c, self.d - other.d)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return mul(self, other)
        return Quaternion(self.a * other, self.b * other,
                          self.c * other, self.d * other)

    def __rmul__(self, other):
        # scalar * quaternion; real scalars commute
        return Quaternion(self.a * other, self.b * other,
                          self.c * other, self.d * other)

    def isclose(self, other: "Quaternion", atol: float = ATOL,
                rtol: float = RTOL) -> bool:
        return all(math.isclose(x, y, rel_tol=rtol, abs_tol=atol)
                   for x, y in zip(self.coeffs, other.coeffs))


E = Quaternion(1.0, 0.0, 0.0, 0.0)
I = Quaternion(0.0, 1.0, 0.0, 0.0)
J = Quaternion(0.0, 0.0, 1.0, 0.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)
ZERO = Quaternion()


def mul(x: Quaternion, y: Quaternion) -> Quaternion:
    """Hamilton product; ``embed2(mul(x, y)) == embed2(x) @ embed2(y)``."""
    a1, b1, c1, d1 = x.a, x.b, x.c, x.d
    a2, b2, c2, d2 = y.a, y.b, y.c, y.d
    return Quaternion(
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )


def conj(x: Quaternion) -> Quaternion:
    return Quaternion(x.a, -x.b, -x.c, -x.d)


def norm(x: Quaternion) -> float:
    return math.sqrt(x.a * x.a + x.b * x.b + x.c * x.c + x.d * x.d)


def embed2(x: Quaternion) -> np.ndarray:
    """The 2x2 complex matrix representing ``x``."""
    lam = complex(x.a, x.b)
    omega = complex(x.c, x.d)
    return np.array([[lam, omega],
                     [-omega.conjugate(), lam.conjugate()]], dtype=complex)


def det2(x: Quaternion) -> float:
    """Determinant of ``embed2(x)``; real and equal to ``norm(x)**2``."""
    m = embed2(x)
    return float((m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real)
