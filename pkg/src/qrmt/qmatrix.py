"""Quaternion matrices: complex embedding, star and Diamond products.

A ``QMatrix`` holds a ``(p, n, 4)`` real coefficient array. Products are
carried out on the complex pair form ``(lam, omega)`` where each entry is
``[[lam, omega], [-conj(omega), conj(lam)]]``, so a quaternion matrix
product costs four complex matrix products.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quaternion import Quaternion, mul as qmul

BRUTEFORCE_LIMIT = 10**7


class DimensionError(ValueError):
    """Incompatible matrix shapes."""


class GuardExceeded(ValueError):
    """Raised when an exhaustive routine would exceed its work limit."""


def _pair_from_coeffs(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam = coeffs[..., 0] + 1j * coeffs[..., 1]
    omega = coeffs[..., 2] + 1j * coeffs[..., 3]
    return lam, omega


def _coeffs_from_pair(lam: np.ndarray, omega: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam)
    omega = np.asarray(omega)
    return np.stack([lam.real, lam.imag, omega.real, omega.imag], axis=-1)


@dataclass(frozen=True, eq=False)
class QMatrix:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 3 or c.shape[2] != 4:
            raise DimensionError(f"expected a (p, n, 4) array, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction ---------------------------------------------------------

    @classmethod
    def from_pair(cls, lam, omega) -> "QMatrix":
        return cls(_coeffs_from_pair(lam, omega))

    @classmethod
    def from_entries(cls, rows: Sequence[Sequence[Quaternion]]) -> "QMatrix":
        return cls(np.array([[q.coeffs for q in row] for row in rows], dtype=float))

    @classmethod
    def from_embedding(cls, c: np.ndarray) -> "QMatrix":
        """Inverse of ``embed``; reads ``lam`` and ``omega`` off the first block row."""
        c = np.asarray(c)
        return cls.from_pair(c[0::2, 0::2], c[0::2, 1::2])

    @classmethod
    def identity(cls, p: int) -> "QMatrix":
        c = np.zeros((p, p, 4))
        c[np.arange(p), np.arange(p), 0] = 1.0
        return cls(c)

    @classmethod
    def zeros(cls, p: int, n: int) -> "QMatrix":
        return cls(np.zeros((p, n, 4)))

    @classmethod
    def filled(cls, p: int, n: int, q: Quaternion) -> "QMatrix":
        c = np.empty((p, n, 4))
        c[...] = q.coeffs
        return cls(c)

    # basic properties -----------------------------------------------------

    @property
    def rows(self) -> int:
        return self.coeffs.shape[0]

    @property
    def cols(self) -> int:
        return self.coeffs.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[:2]

    def pair(self) -> tuple[np.ndarray, np.ndarray]:
        return _pair_from_coeffs(self.coeffs)

    def __getitem__(self, idx: tuple[int, int]) -> Quaternion:
        return Quaternion(*map(float, self.coeffs[idx]))

    def entry_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.coeffs ** 2, axis=-1))

    def embed(self) -> np.ndarray:
        """The ``2p x 2n`` complex matrix with every entry replaced by its 2x2 block."""
        lam, omega = self.pair()
        p, n = self.shape
        out = np.empty((2 * p, 2 * n), dtype=complex)
        out[0::2, 0::2] = lam
        out[0::2, 1::2] = omega
        out[1::2, 0::2] = -omega.conj()
        out[1::2, 1::2] = lam.conj()
        return out

    def adjoint(self) -> "QMatrix":
        c = np.transpose(self.coeffs, (1, 0, 2)).copy()
        c[..., 1:] *= -1.0
        return QMatrix(c)

    @property
    def H(self) -> "QMatrix":
        return self.adjoint()

    # arithmetic -----------------------------------------------------------

    def __add__(self, other: "QMatrix") -> "QMatrix":
        _same_shape(self, other)
        return QMatrix(self.coeffs + other.coeffs)

    def __sub__(self, other: "QMatrix") -> "QMatrix":
        _same_shape(self, other)
        return QMatrix(self.coeffs - other.coeffs)

    def __neg__(self) -> "QMatrix":
        return QMatrix(-self.coeffs)

    def __mul__(self, scalar: float) -> "QMatrix":
        return QMatrix(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "QMatrix":
        return QMatrix(self.coeffs / float(scalar))

    def __matmul__(self, other: "QMatrix") -> "QMatrix":
        return matmul(self, other)

    def allclose(self, other: "QMatrix", atol: float = 1e-12, rtol: float = 1e-10) -> bool:
        return self.shape == other.shape and np.allclose(
            self.coeffs, other.coeffs, atol=atol, rtol=rtol)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        if self.rows != self.cols:
            return False
        scale = max(1.0, float(np.max(np.abs(self.coeffs), initial=0.0)))
        return float(np.max(np.abs(self.coeffs - self.adjoint().coeffs), initial=0.0)) <= tol * scale

    def __repr__(self) -> str:
        return f"QMatrix({self.rows}x{self.cols})"


def _same_shape(a: QMatrix, b: QMatrix) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def _pair_matmul(al, ao, bl, bo):
    return al @ bl - ao @ bo.conj(), al @ bo + ao @ bl.conj()


def _pair_mul(al, ao, bl, bo):
    return al * bl - ao * bo.conj(), al * bo + ao * bl.conj()


def matmul(a: QMatrix, b: QMatrix) -> QMatrix:
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return QMatrix.from_pair(*_pair_matmul(*a.pair(), *b.pair()))


def star(a: QMatrix, b: QMatrix) -> QMatrix:
    """Entrywise (Hadamard) quaternion product ``(a_jl b_jl)``."""
    _same_shape(a, b)
    return QMatrix.from_pair(*_pair_mul(*a.pair(), *b.pair()))


def blockdiag(a: QMatrix) -> QMatrix:
    """Keep the diagonal quaternion entries ``a_jj`` and zero the rest."""
    c = np.zeros_like(a.coeffs)
    m = min(a.shape)
    idx = np.arange(m)
    c[idx, idx] = a.coeffs[idx, idx]
    return QMatrix(c)


def offdiag(a: QMatrix) -> QMatrix:
    return a - blockdiag(a)


def norm2(a: QMatrix) -> float:
    """Operator 2-norm: the largest singular value of ``a.embed()``.

    Uses the smaller Gram matrix and the package eigensolver.
    """
    from .spectra import eigh

    if a.rows == 0 or a.cols == 0:
        return 0.0
    c = a.embed()
    gram = c @ c.conj().T if a.rows <= a.cols else c.conj().T @ c
    gram = 0.5 * (gram + gram.conj().T)
    top = float(eigh(gram)[-1])
    return float(np.sqrt(max(top, 0.0)))


# Diamond product -----------------------------------------------------------

def _check_chain(factors: Sequence[QMatrix]) -> None:
    if len(factors) < 1:
        raise DimensionError("a Diamond chain needs at least one factor")
    for left, right in zip(factors, factors[1:]):
        if left.cols != right.rows:
            raise DimensionError(
                f"chained dimensions disagree: {left.shape} then {right.shape}")


def _diag_of_product(al, ao, bl, bo, rows: int, cols: int):
    """Diagonal entries ``Q_jj`` of ``A B`` for ``j < min(rows, cols)``."""
    m = min(rows, cols)
    ql = np.einsum("jt,tj->j", al[:m], bl[:, :m]) - np.einsum("jt,tj->j", ao[:m], bo[:, :m].conj())
    qo = np.einsum("jt,tj->j", al[:m], bo[:, :m]) + np.einsum("jt,tj->j", ao[:m], bl[:, :m].conj())
    return ql, qo


def _triple(h1, h2, h3):
    """Matrix with entries ``h1_jl h2_lj h3_jl``; zero where an index is out of range."""
    (l1, o1), (l2, o2), (l3, o3) = h1, h2, h3
    n1 = l1.shape[0]
    n2 = l1.shape[1]
    n3 = l3.shape[0]
    n4 = l3.shape[1]
    jm = min(n1, n3)
    lm = min(n2, n4)
    ml = np.zeros((n1, n4), dtype=complex)
    mo = np.zeros((n1, n4), dtype=complex)
    tl, to = _pair_mul(l1[:jm, :lm], o1[:jm, :lm], l2[:lm, :jm].T, o2[:lm, :jm].T)
    tl, to = _pair_mul(tl, to, l3[:jm, :lm], o3[:jm, :lm])
    ml[:jm, :lm] = tl
    mo[:jm, :lm] = to
    return ml, mo


def _diamond_pairs(fs: list):
    """Diamond product of a chain of ``(lam, omega)`` pairs.

    ``chain(first, i)`` is the product of ``[first] + fs[i:]``. Suffix
    products of the original chain are memoised, so the three-term
    recursion costs O(k) matrix products instead of O(2^k).
    """
    memo: dict[int, tuple] = {}

    def suffix(i: int):
        if i not in memo:
            memo[i] = chain(fs[i], i + 1)
        return memo[i]

    def chain(first, i: int):
        if i == len(fs):
            return first
        (l1, o1), (l2, o2) = first, fs[i]
        if i + 1 == len(fs):
            rl, ro = _pair_matmul(l1, o1, l2, o2)
            idx = np.arange(min(rl.shape))
            rl[idx, idx] = 0.0
            ro[idx, idx] = 0.0
            return rl, ro
        hl, ho = _pair_matmul(l1, o1, *suffix(i))
        tl, to = suffix(i + 1)
        dl, do = _diag_of_product(l1, o1, l2, o2, l1.shape[0], l2.shape[1])
        m = dl.shape[0]
        # diag(Q) is n1 x n3 with Q_jj at (j, j): rows j >= n3 of the product vanish
        sl, so = _pair_mul(dl[:, None], do[:, None], tl[:m], to[:m])
        hl[:m] -= sl
        ho[:m] -= so
        rl, ro = chain(_triple(first, fs[i], fs[i + 1]), i + 2)
        return hl + rl, ho + ro

    return suffix(0)


def diamond(factors: Sequence[QMatrix]) -> QMatrix:
    """Diamond product ``H_1 <> ... <> H_k``.

    Entry ``(alpha, beta)`` sums ``h1[alpha,t2] h2[t2,t3] ... hk[tk,beta]`` over
    index chains with ``t_j != t_{j+2}``, where ``t_1 = alpha`` and
    ``t_{k+1} = beta``. Evaluated with the three-term recursion

        H1 <> ... <> Hk = H1 (H2 <> ... <> Hk)
                          - diag(H1 H2) (H3 <> ... <> Hk)
                          + (h1_jl h2_lj h3_jl) <> H4 <> ... <> Hk

    rather than by enumerating chains (see ``diamond_bruteforce``).
    """
    factors = list(factors)
    _check_chain(factors)
    if len(factors) == 1:
        return factors[0]
    return QMatrix.from_pair(*_diamond_pairs([f.pair() for f in factors]))


def diamond_bruteforce(factors: Sequence[QMatrix], limit: int = BRUTEFORCE_LIMIT) -> QMatrix:
    """Direct constrained sum over all index chains; a test oracle for ``diamond``."""
    factors = list(factors)
    _check_chain(factors)
    k = len(factors)
    dims = [factors[0].rows] + [f.cols for f in factors]
    total = int(np.prod(dims, dtype=object))
    if total > limit:
        raise GuardExceeded(f"{total} index chains exceeds the limit {limit}")
    if k == 1:
        return factors[0]
    entries = [[[f[i, j] for j in range(f.cols)] for i in range(f.rows)] for f in factors]
    out = np.zeros((dims[0], dims[-1], 4))
    for chain in itertools.product(*(range(d) for d in dims)):
        if any(chain[j] == chain[j + 2] for j in range(k - 1)):
            continue
        acc = entries[0][chain[0]][chain[1]]
        for f in range(1, k):
            acc = qmul(acc, entries[f][chain[f]][chain[f + 1]])
        out[chain[0], chain[-1]] += acc.coeffs
    return QMatrix(out)


def build_R(x: QMatrix, l: int, n: int | None = None) -> QMatrix:
    """``n**-l`` times the alternating Diamond product ``X <> X* <> ... <> X*`` (2l factors).

    ``l = 0`` gives the identity; ``l = 1`` is ``X X* / n`` with its diagonal removed.
    """
    if l < 0:
        raise ValueError("l must be nonnegative")
    if n is None:
        n = x.cols
    if l == 0:
        return QMatrix.identity(x.rows)
    xh = x.adjoint()
    return diamond([x, xh] * l) * (float(n) ** -l)


def cj_coefficients(k: int) -> dict[tuple[int, int], int]:
    """Integer constants ``C_j(k, r)`` of the expansion

        (R - y s2 I)^k = sum_r (-1)^(r+1) s2^(k-r) R(r) sum_j C_j(k,r) y^(k-r-j)

    obtained by expanding with ``R R(r) = R(r+1) + y s2 R(r) + y s2^2 R(r-1)``
    (``r >= 1``) and ``R R(0) = R(1)`` taken as exact. Keys are ``(j, r)``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    table = {(0, 1): 1, (0, 0): 1}
    for m in range(1, k):
        nxt: dict[tuple[int, int], int] = {}
        for r in range(m + 2):
            for j in range((m + 1 - r) // 2 + 1):
                val = 0
                if r >= 1:
                    val -= table.get((j, r - 1), 0)
                else:
                    val -= table.get((j, 0), 0)
                if j >= 1:
                    val -= table.get((j - 1, r + 1), 0)
                nxt[(j, r)] = val
        table = nxt
    return table


def expansion_coefficients(k: int, y: float, sigma2: float = 1.0) -> list[float]:
    """Scalar weights ``w_r`` with ``(R - y s2 I)^k ~ sum_r w_r R(r)``."""
    table = cj_coefficients(k)
    weights = []
    for r in range(k + 1):
        inner = sum(table.get((j, r), 0) * y ** (k - r - j) for j in range((k - r) // 2 + 1))
        weights.append((-1) ** (r + 1) * sigma2 ** (k - r) * inner)
    return weights
