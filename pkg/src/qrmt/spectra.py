"""Hermitian eigenvalues through the complex embedding.

``eigh`` reduces a complex Hermitian matrix to real symmetric tridiagonal
form with Householder reflectors and a diagonal phase change, then runs
implicit-shift QL with Wilkinson shifts. Quaternion eigenvalues are the
embedding eigenvalues taken once from each consecutive pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._tql import MAX_SWEEPS, tql
from .qmatrix import QMatrix, norm2

HERMITIAN_TOL = 1e-10
PAIR_RTOL = 1e-8
BLOCK = 32


class NotHermitianError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, index: int):
        super().__init__(f"eigenvalue {index} did not converge within {MAX_SWEEPS} QL sweeps")
        self.index = index


class PairingError(ValueError):
    """Embedding eigenvalues do not come in coincident pairs."""


def _householder(x: np.ndarray):
    """Unit ``v`` and ``alpha`` with ``(I - 2 v v*) x = alpha e_1``, or ``None``."""
    xnorm = np.linalg.norm(x)
    if xnorm == 0.0:
        return None, 0.0
    x0 = x[0]
    phase = x0 / abs(x0) if x0 != 0 else 1.0
    alpha = -phase * xnorm
    v = x.copy()
    v[0] -= alpha
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        return None, x0
    return v / vnorm, alpha


def _tridiagonalize(a: np.ndarray, want_q: bool, block: int = BLOCK):
    """Householder reduction ``a = Q T Q*`` of a Hermitian matrix.

    Reflectors are generated one column at a time, but the trailing matrix
    is only updated once per panel of ``block`` columns with
    ``A -= V Y* + Y V*``; inside a panel, columns and matrix-vector products
    are corrected on the fly. Returns the real diagonal, the complex
    subdiagonal and (optionally) Q. Overwrites ``a``.
    """
    n = a.shape[0]
    diag = np.zeros(n)
    off = np.zeros(max(n - 1, 0), dtype=complex)
    reflectors: list = []
    k0 = 0
    while k0 < n:
        k1 = min(k0 + block, n)
        vs = np.zeros((n, k1 - k0), dtype=complex)
        ys = np.zeros((n, k1 - k0), dtype=complex)
        for j, k in enumerate(range(k0, k1)):
            if j:
                col = a[k:, k] - vs[k:, :j] @ ys[k, :j].conj() - ys[k:, :j] @ vs[k, :j].conj()
            else:
                col = a[k:, k].copy()
            diag[k] = col[0].real
            if k >= n - 1:
                continue
            if k == n - 2:
                off[k] = col[1]
                reflectors.append(None)
                continue
            v, alpha = _householder(col[1:])
            off[k] = alpha
            reflectors.append(v)
            if v is None:
                continue
            w = a[k + 1:, k + 1:] @ v
            if j:
                vt, yt = vs[k + 1:, :j], ys[k + 1:, :j]
                w -= vt @ (yt.conj().T @ v) + yt @ (vt.conj().T @ v)
            c = np.vdot(v, w).real
            vs[k + 1:, j] = v
            ys[k + 1:, j] = 2.0 * (w - c * v)
        if k1 < n:
            vt, yt = vs[k1:], ys[k1:]
            a[k1:, k1:] -= vt @ yt.conj().T + yt @ vt.conj().T
        k0 = k1

    q = None
    if want_q:
        q = np.eye(n, dtype=complex)
        for k in range(len(reflectors) - 1, -1, -1):
            v = reflectors[k]
            if v is None:
                continue
            sub = q[k + 1:, k + 1:]
            sub -= 2.0 * np.outer(v, v.conj() @ sub)
    return diag, off, q


def eigh(c: np.ndarray, vectors: bool = False, check: bool = True):
    """Eigenvalues (ascending) of a complex Hermitian matrix.

    Parameters
    ----------
    c : array_like
        Square complex (or real) Hermitian matrix.
    vectors : bool
        Also return a unitary ``U`` with ``c = U diag(w) U*``.
    check : bool
        Verify the Hermitian precondition.

    Raises
    ------
    NotHermitianError
        If ``c`` is not square or differs from its conjugate transpose by more
        than ``1e-10`` relative to its largest entry.
    ConvergenceError
        If QL needs more than 30 sweeps for some eigenvalue.
    """
    a = np.array(c, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if check and n:
        scale = max(1.0, float(np.max(np.abs(a))))
        asym = float(np.max(np.abs(a - a.conj().T)))
        if asym > HERMITIAN_TOL * scale:
            raise NotHermitianError(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    a = 0.5 * (a + a.conj().T)
    if n == 0:
        return (np.zeros(0), np.zeros((0, 0), dtype=complex)) if vectors else np.zeros(0)

    diag, off, q = _tridiagonalize(a, vectors)

    # phase change D* T D turns the complex off-diagonal into |off|
    e = np.zeros(n)
    e[:n - 1] = np.abs(off)
    phases = np.ones(n, dtype=complex)
    for i in range(n - 1):
        if e[i] != 0.0:
            phases[i + 1] = phases[i] * off[i] / e[i]
        else:
            phases[i + 1] = phases[i]

    d = diag.astype(np.float64)
    if vectors:
        z = np.eye(n)
    else:
        z = np.zeros((1, 1))
    info = tql(d, e, z, vectors)
    if info >= 0:
        raise ConvergenceError(int(info))

    order = np.argsort(d, kind="stable")
    w = d[order]
    if not vectors:
        return w
    u = (q * phases[None, :]) @ z[:, order]
    return w, u


@dataclass(frozen=True)
class HermitianSpectrum:
    values: np.ndarray
    paired_values: np.ndarray
    max_pair_gap: float
    vectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def p(self) -> int:
        return len(self.paired_values)


def collapse_pairs(values: np.ndarray) -> tuple[np.ndarray, float]:
    """Average strictly consecutive sorted values ``(2i, 2i+1)``."""
    values = np.asarray(values, dtype=float)
    if len(values) % 2:
        raise PairingError("odd number of embedding eigenvalues")
    lo, hi = values[0::2], values[1::2]
    gap = float(np.max(hi - lo)) if len(values) else 0.0
    return 0.5 * (lo + hi), gap


def spectrum(a: QMatrix, vectors: bool = False) -> HermitianSpectrum:
    """Quaternion eigenvalues of a Hermitian quaternion matrix."""
    if a.rows != a.cols:
        raise NotHermitianError(f"expected a square quaternion matrix, got {a.shape}")
    if not a.is_hermitian():
        raise NotHermitianError("quaternion matrix is not self-adjoint")
    out = eigh(a.embed(), vectors=vectors)
    values, vecs = out if vectors else (out, None)
    paired, gap = collapse_pairs(values)
    # |eigenvalue| is bounded by the operator norm of a Hermitian matrix
    scale = float(np.max(np.abs(values))) if len(values) else 0.0
    tol = PAIR_RTOL * max(1.0, scale)
    if gap > tol:
        raise PairingError(f"max pair gap {gap:.3e} exceeds tolerance {tol:.3e}")
    return HermitianSpectrum(values, paired, gap, vecs)


def smin_index(p: int, n: int) -> int:
    """0-based index of ``s_min``: ``p - n`` when ``p > n``, else 0."""
    return p - n if p > n else 0


def extreme_eigs(s: QMatrix | HermitianSpectrum, p: int, n: int,
                 psd_tol: float = 1e-9) -> tuple[float, float]:
    """``(s_min, s_max)`` of a sample covariance matrix.

    ``s_min`` is the ``(p - n + 1)``-th smallest eigenvalue when ``p > n``
    (the ``p - n`` smallest vanish) and the smallest otherwise. Slightly
    negative round-off values are clamped to zero in the report.
    """
    sp = s if isinstance(s, HermitianSpectrum) else spectrum(s)
    vals = sp.paired_values
    if len(vals) != p:
        raise ValueError(f"spectrum has {len(vals)} eigenvalues, expected p={p}")
    s_max = float(vals[-1])
    if vals[0] < -psd_tol * max(1.0, abs(s_max)):
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {vals[0]:.3e})")
    s_min = float(vals[smin_index(p, n)])
    return max(s_min, 0.0), max(s_max, 0.0)


def zero_count(sp: HermitianSpectrum, rel: float = 1e-10) -> int:
    """Number of quaternion eigenvalues below ``rel * s_max``."""
    vals = sp.paired_values
    if len(vals) == 0:
        return 0
    thr = rel * max(float(vals[-1]), 0.0)
    return int(np.count_nonzero(vals < thr))


__all__ = [
    "ConvergenceError", "HermitianSpectrum", "NotHermitianError", "PairingError",
    "collapse_pairs", "eigh", "extreme_eigs", "norm2", "spectrum", "zero_count",
]
