"""Monte Carlo experiments on quaternion sample covariance matrices.

Every trial owns the generator ``(cfg.seed, trial)``, so results depend only
on the configuration and never on execution order or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .mplaw import MPLaw, cdf_many, moment
from .qmatrix import (QMatrix, build_R, expansion_coefficients,
                      matmul, norm2)
from .randgen import (EntryDistribution, TruncationSchedule, sample_matrix,
                      truncate_centralize)
from .spectra import HermitianSpectrum, extreme_eigs, spectrum, zero_count

MAX_MOMENTS = 8
MAX_BOUND_L = 3
MAX_EXPANSION_K = 4
ZERO_REL = 1e-10


class TrialError(RuntimeError):
    """A trial failed; ``trial`` is its index."""

    def __init__(self, trial: int, cause: Exception):
        super().__init__(f"trial {trial} failed: {cause}")
        self.trial = trial
        self.cause = cause


@dataclass(frozen=True)
class TrialConfig:
    p: int
    n: int
    dist: EntryDistribution = field(default_factory=EntryDistribution)
    trials: int = 1
    seed: int = 0
    truncate: bool = False

    def __post_init__(self):
        if self.p < 2 or self.n < 2:
            raise ValueError("p and n must be at least 2")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")

    @property
    def y_n(self) -> float:
        return self.p / self.n

    @property
    def sigma2(self) -> float:
        return self.dist.sigma2

    def law(self) -> MPLaw:
        return MPLaw(self.y_n, self.sigma2)

    def sample(self, trial: int) -> QMatrix:
        x = sample_matrix(self.dist, self.p, self.n, self.seed, stream=trial)
        if self.truncate:
            x = truncate_centralize(x, self.n, TruncationSchedule())
        return x

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dist"]["shift"] = list(self.dist.shift)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialConfig":
        d = dict(d)
        dist = dict(d.pop("dist"))
        dist["shift"] = tuple(dist.get("shift", (1.0, 0.0, 0.0, 0.0)))
        return cls(dist=EntryDistribution(**dist), **d)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    y_n: float
    s_min: float
    s_max: float
    ks: float
    moments: tuple[float, ...]
    zero_count: int


def covariance(x: QMatrix, n: int | None = None) -> QMatrix:
    """``S = (1/n) X X*``, symmetrised against round-off."""
    n = x.cols if n is None else n
    s = matmul(x, x.adjoint()) / n
    return QMatrix(0.5 * (s.coeffs + s.adjoint().coeffs))


def power_moments(values: np.ndarray, k_max: int) -> tuple[float, ...]:
    """``(1/p) sum lam^k`` for ``k = 1..k_max``."""
    values = np.asarray(values, dtype=float)
    return tuple(float(np.mean(values ** k)) for k in range(1, k_max + 1))


def ks_distance(sp: HermitianSpectrum | np.ndarray, law: MPLaw,
                zero_rel: float = ZERO_REL) -> float:
    """Kolmogorov distance between the ESD and ``law``.

    Both CDFs are compared at and just below every distinct eigenvalue,
    which is where the supremum of the difference is attained. Eigenvalues
    within ``zero_rel * max`` of zero are treated as exact zeros, so they
    sit on the law's atom when ``y > 1``.
    """
    vals = np.sort(np.asarray(
        sp.paired_values if isinstance(sp, HermitianSpectrum) else sp, dtype=float))
    p = len(vals)
    if p == 0:
        raise ValueError("empty spectrum")
    scale = max(float(np.max(np.abs(vals))), 0.0)
    vals = np.where(np.abs(vals) <= zero_rel * scale, 0.0, vals)
    uniq, first = np.unique(vals, return_index=True)
    below = first / p
    at = np.append(first[1:], p) / p
    f_at = cdf_many(law, uniq)
    # the law is continuous except at 0, where the atom sits
    f_below = np.where(uniq == 0.0, 0.0, f_at)
    f_below = np.where(uniq < 0.0, 0.0, f_below)
    return float(max(np.max(np.abs(at - f_at)), np.max(np.abs(below - f_below))))


def _one_trial(cfg: TrialConfig, trial: int, k_moments: int) -> TrialRecord:
    try:
        x = cfg.sample(trial)
        sp = spectrum(covariance(x, cfg.n))
        s_min, s_max = extreme_eigs(sp, cfg.p, cfg.n)
        return TrialRecord(
            trial=trial,
            y_n=cfg.y_n,
            s_min=s_min,
            s_max=s_max,
            ks=ks_distance(sp, cfg.law()),
            moments=power_moments(sp.paired_values, k_moments),
            zero_count=zero_count(sp, ZERO_REL),
        )
    except Exception as exc:  # noqa: BLE001 - re-raised with the trial index
        raise TrialError(trial, exc) from exc


def _map_trials(fn: Callable, cfg: TrialConfig, args: tuple, jobs: int) -> list:
    idx = range(cfg.trials)
    if jobs <= 1 or cfg.trials == 1:
        return [fn(cfg, t, *args) for t in idx]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, cfg, t, *args) for t in idx]
        return [f.result() for f in futures]


def run_extremes(cfg: TrialConfig, k_moments: int = 4, jobs: int = 1) -> list[TrialRecord]:
    """One record per trial, ordered by trial index."""
    if not 0 <= k_moments <= MAX_MOMENTS:
        raise ValueError(f"k_moments must lie in [0, {MAX_MOMENTS}]")
    return _map_trials(_one_trial, cfg, (k_moments,), jobs)


@dataclass(frozen=True)
class MomentRow:
    k: int
    empirical: float
    theoretical: float
    rel_error: float


def moment_compare(cfg: TrialConfig, K: int, jobs: int = 1,
                   records: Sequence[TrialRecord] | None = None) -> list[MomentRow]:
    """Trial-averaged ``(1/p) tr S^k`` against the law's moments at ``y_n``."""
    if not 1 <= K <= MAX_MOMENTS:
        raise ValueError(f"K must lie in [1, {MAX_MOMENTS}]")
    if records is None:
        records = run_extremes(cfg, K, jobs)
    law = cfg.law()
    rows = []
    for k in range(1, K + 1):
        emp = float(np.mean([r.moments[k - 1] for r in records]))
        th = moment(law, k)
        rows.append(MomentRow(k, emp, th, abs(emp - th) / th))
    return rows


# lemma checks -----------------------------------------------------------------

@dataclass(frozen=True)
class CheckRow:
    """One ``(n, trial)`` result. ``target`` is NaN for pure trend statistics."""

    check: str
    p: int
    n: int
    trial: int
    statistic: float
    target: float
    margin: float


def diamond_bound(l: int, y: float, sigma2: float = 1.0) -> float:
    return (2 * l + 1) * (l + 1) * y ** ((l - 1) / 2.0) * sigma2 ** l


def _bound_trial(cfg: TrialConfig, trial: int, l: int) -> CheckRow:
    obs = norm2(build_R(cfg.sample(trial), l, cfg.n))
    bound = diamond_bound(l, cfg.y_n, cfg.sigma2)
    return CheckRow("bound", cfg.p, cfg.n, trial, obs, bound, bound - obs)


def diamond_bound_check(cfg: TrialConfig, l: int, jobs: int = 1) -> list[CheckRow]:
    """``||R_n(l)||_2`` per trial against ``(2l+1)(l+1) y_n^((l-1)/2) sigma^(2l)``."""
    if not 1 <= l <= MAX_BOUND_L:
        raise ValueError(f"l must lie in [1, {MAX_BOUND_L}]")
    return _map_trials(_bound_trial, cfg, (l,), jobs)


def recursion_residual_matrix(x: QMatrix, k: int, sigma2: float, n: int | None = None) -> float:
    """``||R(1) R(k) - R(k+1) - y sigma2 R(k) - y sigma2^2 R(k-1)||_2``."""
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    n = x.cols if n is None else n
    y = x.rows / n
    r = [build_R(x, l, n) for l in range(k + 2)]
    res = matmul(r[1], r[k]) - r[k + 1] - (y * sigma2) * r[k] - (y * sigma2 ** 2) * r[k - 1]
    return norm2(res)


def expansion_residual_matrix(x: QMatrix, k: int, sigma2: float, n: int | None = None) -> float:
    """``||(R(1) - y sigma2 I)^k - sum_r w_r R(r)||_2`` with the tabulated weights."""
    if not 1 <= k <= MAX_EXPANSION_K:
        raise ValueError(f"k must lie in [1, {MAX_EXPANSION_K}]")
    n = x.cols if n is None else n
    p = x.rows
    y = p / n
    r = [build_R(x, l, n) for l in range(k + 1)]
    base = r[1] - (y * sigma2) * QMatrix.identity(p)
    lhs = base
    for _ in range(k - 1):
        lhs = matmul(lhs, base)
    rhs = QMatrix.zeros(p, p)
    for w, rr in zip(expansion_coefficients(k, y, sigma2), r):
        rhs = rhs + w * rr
    return norm2(lhs - rhs)


def _recursion_trial(cfg: TrialConfig, trial: int, k: int) -> CheckRow:
    obs = recursion_residual_matrix(cfg.sample(trial), k, cfg.sigma2, cfg.n)
    return CheckRow("recursion", cfg.p, cfg.n, trial, obs, math.nan, math.nan)


def _expansion_trial(cfg: TrialConfig, trial: int, k: int, exact_tol: float) -> CheckRow:
    obs = expansion_residual_matrix(cfg.sample(trial), k, cfg.sigma2, cfg.n)
    if k == 1:
        return CheckRow("expansion", cfg.p, cfg.n, trial, obs, exact_tol, exact_tol - obs)
    return CheckRow("expansion", cfg.p, cfg.n, trial, obs, math.nan, math.nan)


def recursion_residual(cfg: TrialConfig, k: int, jobs: int = 1) -> list[CheckRow]:
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    return _map_trials(_recursion_trial, cfg, (k,), jobs)


EXACT_TOL = 1e-9


def expansion_check(cfg: TrialConfig, k: int, jobs: int = 1) -> list[CheckRow]:
    """Expansion residual per trial; for ``k = 1`` the target is ``EXACT_TOL``."""
    if not 1 <= k <= MAX_EXPANSION_K:
        raise ValueError(f"k must lie in [1, {MAX_EXPANSION_K}]")
    return _map_trials(_expansion_trial, cfg, (k, EXACT_TOL), jobs)


def median_by_n(rows: Sequence[CheckRow]) -> dict[int, float]:
    out: dict[int, list[float]] = {}
    for r in rows:
        out.setdefault(r.n, []).append(r.statistic)
    return {n: float(np.median(v)) for n, v in sorted(out.items())}


def strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


# invariants ---------------------------------------------------------------------

def row_mean_statistic(x: QMatrix, n: int | None = None) -> float:
    """``max_u (1/n) sum_v ||x_uv||^2``, a lower bound for ``s_max``.

    It is ``e* S e`` for the embedding basis vector of row ``u``.
    """
    n = x.cols if n is None else n
    return float(np.max(np.sum(x.coeffs ** 2, axis=(1, 2))) / n)


def triangle_terms(x: QMatrix, sigma2: float, n: int | None = None) -> tuple[float, float, float]:
    """``(||S - sigma2 (1+y) I||, ||S - sigma2 I - R(1)||, ||R(1) - y sigma2 I||)``."""
    n = x.cols if n is None else n
    p = x.rows
    y = p / n
    eye = QMatrix.identity(p)
    s = covariance(x, n)
    r1 = build_R(x, 1, n)
    lhs = norm2(s - (sigma2 * (1.0 + y)) * eye)
    diag_part = norm2(s - sigma2 * eye - r1)
    off_part = norm2(r1 - (y * sigma2) * eye)
    return lhs, diag_part, off_part


# necessity demonstrations -----------------------------------------------------

NECESSITY_KINDS = ("heavy-tail", "nonzero-mean", "bounded")


@dataclass(frozen=True)
class NecessityRow:
    seed: int
    p: int
    n: int
    s_max: float
    row_stat: float


@dataclass(frozen=True)
class NecessityReport:
    kind: str
    y: float
    sigma2: float
    rows: tuple[NecessityRow, ...]

    @property
    def edge_limit(self) -> float:
        return self.sigma2 * (1.0 + math.sqrt(self.y)) ** 2

    def by_seed(self) -> dict[int, list[NecessityRow]]:
        out: dict[int, list[NecessityRow]] = {}
        for r in self.rows:
            out.setdefault(r.seed, []).append(r)
        return out

    def monotone_fraction(self) -> float:
        """Fraction of seeds whose ``s_max`` strictly increases with ``n``."""
        groups = self.by_seed()
        hits = sum(strictly_decreasing([-r.s_max for r in g]) for g in groups.values())
        return hits / len(groups)

    def max_ratio(self) -> float:
        return max(r.s_max for r in self.rows) / self.edge_limit

    def min_ratio(self) -> float:
        return min(r.s_max for r in self.rows) / self.edge_limit


def _largest_eig(x: QMatrix, n: int) -> float:
    return float(spectrum(covariance(x, n)).paired_values[-1])


def necessity_demo(kind: str, sizes: Sequence[int], y: float = 0.25,
                   seeds: Sequence[int] = range(5), sigma2: float = 1.0,
                   p: int | None = None,
                   shift: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0),
                   nested: bool = True) -> NecessityReport:
    """``s_max`` and the row-mean statistic across ascending sample sizes.

    ``heavy-tail`` draws Pareto(3) norms, ``nonzero-mean`` adds ``shift`` to
    Gaussian entries and ``bounded`` is the signed-unit control arm. ``p``
    defaults to ``round(y n)``; a fixed ``p`` overrides it.

    With ``nested`` (the default) each seed draws one matrix at the largest
    size and every smaller ``X_n`` is its top-left block, so the sizes
    follow a single realisation of an i.i.d. double array. Otherwise size
    ``i`` gets an independent draw from stream ``i``.
    """
    if kind not in NECESSITY_KINDS:
        raise ValueError(f"kind must be one of {NECESSITY_KINDS}")
    sizes = list(sizes)
    if not sizes or sizes != sorted(sizes):
        raise ValueError("sizes must be nonempty and ascending")
    dist = {
        "heavy-tail": EntryDistribution("pareto-heavy", sigma2, tail_index=3.0),
        "nonzero-mean": EntryDistribution("shifted-mean", sigma2, shift=shift),
        "bounded": EntryDistribution("signed-unit", sigma2),
    }[kind]
    dims = [(p if p is not None else max(2, round(y * n)), n) for n in sizes]
    rows = []
    for seed in seeds:
        big = sample_matrix(dist, max(d[0] for d in dims), sizes[-1], seed) if nested else None
        for idx, (pp, n) in enumerate(dims):
            if nested:
                x = QMatrix(big.coeffs[:pp, :n])
            else:
                x = sample_matrix(dist, pp, n, seed, stream=idx)
            rows.append(NecessityRow(seed, pp, n, _largest_eig(x, n), row_mean_statistic(x, n)))
    return NecessityReport(kind, y, sigma2, tuple(rows))


__all__ = [
    "CheckRow", "MomentRow", "NecessityReport", "NecessityRow", "TrialConfig",
    "TrialError", "TrialRecord", "covariance", "diamond_bound", "diamond_bound_check",
    "expansion_check", "expansion_residual_matrix", "ks_distance", "median_by_n",
    "moment_compare", "necessity_demo", "power_moments", "recursion_residual",
    "recursion_residual_matrix", "row_mean_statistic", "run_extremes",
    "strictly_decreasing", "triangle_terms",
]
