"""Implicit-shift QL iteration for real symmetric tridiagonal matrices.

Compiled with numba when it is importable; the plain Python path gives
identical results, only slower.
"""

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

MAX_SWEEPS = 30
EPS = 2.220446049250313e-16


@njit(cache=True)
def tql(d, e, z, want_vectors):
    """Diagonalise the tridiagonal matrix with diagonal ``d`` and off-diagonal ``e``.

    ``e[i]`` couples rows ``i`` and ``i + 1``; ``e[-1]`` is ignored. ``d`` is
    overwritten with the eigenvalues (unsorted) and, when ``want_vectors``
    is set, the columns of ``z`` are rotated accordingly.

    An off-diagonal entry is neglected when it is below ``EPS`` relative
    to its two diagonal neighbours or below ``EPS`` times the matrix norm;
    the second test keeps clusters of round-off sized eigenvalues from
    stalling.

    Returns -1 on success or the index of the eigenvalue that failed to
    converge within ``MAX_SWEEPS`` iterations.
    """
    n = d.shape[0]
    if n == 0:
        return -1
    e[n - 1] = 0.0
    # absolute deflation floor: eps times a norm bound of the matrix
    anorm = 0.0
    for i in range(n):
        anorm = max(anorm, abs(d[i]) + abs(e[i]) + (abs(e[i - 1]) if i else 0.0))
    floor = EPS * anorm
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= EPS * dd or abs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            if it == MAX_SWEEPS:
                return l
            it += 1
            # Wilkinson shift from the leading 2x2 block
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    for k in range(z.shape[0]):
                        f = z[k, i + 1]
                        z[k, i + 1] = s * z[k, i] + c * f
                        z[k, i] = c * z[k, i] - s * f
                i -= 1
            if underflow and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


def tql_numpy(d, e, z=None):
    d = np.array(d, dtype=np.float64)
    e = np.array(e, dtype=np.float64)
    want = z is not None
    if z is None:
        z = np.zeros((1, 1))
    else:
        z = np.array(z, dtype=np.float64)
    info = tql(d, e, z, want)
    return d, z if want else None, info
