"""End-to-end acceptance criteria.

Each test is tagged ``acceptance(number, title)``; ``conftest.py`` prints a
PASS/FAIL line per criterion. Seeds are fixed at 0..k-1 throughout.
"""

import math
import time

import numpy as np
import pytest

from qrmt.cli import main
from qrmt.experiments import (TrialConfig, diamond_bound_check, expansion_check,
                              median_by_n, moment_compare, necessity_demo,
                              recursion_residual, run_extremes)
from qrmt.graphs import leading_moment_counts, verify_chain_lemmas
from qrmt.mplaw import MPLaw, moment, moment_quadrature
from qrmt.qmatrix import QMatrix, diamond, diamond_bruteforce, norm2, star
from qrmt.spectra import eigh, spectrum

acceptance = pytest.mark.acceptance


def edge(y, sigma2=1.0):
    return sigma2 * (1.0 + math.sqrt(y)) ** 2


@pytest.fixture(scope="module")
def esd_records():
    return run_extremes(TrialConfig(400, 1600, trials=10, seed=0), k_moments=4)


@acceptance(1, "extreme eigenvalue limits, Gaussian p=200 n=800")
def test_extreme_limits(record_property):
    start = time.perf_counter()
    recs = run_extremes(TrialConfig(200, 800, trials=10, seed=0), k_moments=0)
    elapsed = time.perf_counter() - start
    s_max = np.mean([r.s_max for r in recs])
    s_min = np.mean([r.s_min for r in recs])
    record_property("detail", f"mean s_max={s_max:.4f} mean s_min={s_min:.4f} time={elapsed:.1f}s")
    assert 2.15 <= s_max <= 2.35
    assert 0.17 <= s_min <= 0.33
    assert elapsed <= 60.0


@acceptance(2, "y > 1 convention, p=400 n=200")
def test_wide_convention(record_property):
    recs = run_extremes(TrialConfig(400, 200, trials=10, seed=0), k_moments=0)
    zeros = [r.zero_count for r in recs]
    s_min = np.mean([r.s_min for r in recs])
    target = (1.0 - math.sqrt(2.0)) ** 2
    record_property("detail", f"zero counts={sorted(set(zeros))} mean s_min={s_min:.4f}")
    assert all(z == 200 for z in zeros)
    assert abs(s_min - target) <= 0.06


@acceptance(3, "ESD Kolmogorov distance, p=400 n=1600")
def test_esd_convergence(esd_records, record_property):
    ks = [r.ks for r in esd_records]
    good = sum(k <= 0.05 for k in ks)
    record_property("detail", f"ks<=0.05 in {good}/10, max ks={max(ks):.4f}")
    assert good >= 9


@acceptance(4, "moment method and closed-form moments")
def test_moments(esd_records, record_property):
    rows = moment_compare(TrialConfig(400, 1600, trials=5, seed=0), 4, records=esd_records[:5])
    worst = max(r.rel_error for r in rows)
    quad = max(abs(moment_quadrature(MPLaw(y), k) - moment(MPLaw(y), k)) / moment(MPLaw(y), k)
               for y in (0.1, 0.25, 0.5, 1.0, 2.0) for k in range(1, 9))
    record_property("detail", f"max moment rel err={worst:.2e} closed form vs quadrature={quad:.1e}")
    assert worst <= 0.05
    assert quad <= 1e-8


@acceptance(5, "Diamond product oracle and norm inequalities")
def test_diamond(record_property):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        k = int(rng.integers(1, 5))
        dims = rng.integers(1, 6, size=k + 1)
        fs = [QMatrix(rng.standard_normal((dims[i], dims[i + 1], 4))) for i in range(k)]
        worst = max(worst, float(np.max(np.abs(diamond(fs).coeffs - diamond_bruteforce(fs).coeffs))))
    star_slack = diamond_slack = -np.inf
    for _ in range(100):
        a, b = (QMatrix(rng.standard_normal((4, 3, 4))) for _ in range(2))
        star_slack = max(star_slack, norm2(star(a, b)) - norm2(a) * norm2(b))
    for _ in range(100):
        k = int(rng.integers(1, 5))
        dims = rng.integers(1, 6, size=k + 1)
        fs = [QMatrix(rng.standard_normal((dims[i], dims[i + 1], 4))) for i in range(k)]
        bound = 3 ** (k - 1) * np.prod([norm2(f) for f in fs])
        diamond_slack = max(diamond_slack, norm2(diamond(fs)) - bound)
    record_property("detail", f"max |diamond - brute|={worst:.1e}")
    assert worst <= 1e-12
    assert star_slack <= 1e-9
    assert diamond_slack <= 1e-9


@acceptance(6, "Diamond norm bound, p=100 n=400, 50 trials")
@pytest.mark.parametrize("l", [1, 2])
def test_diamond_bound(l, record_property):
    rows = diamond_bound_check(TrialConfig(100, 400, trials=50, seed=0), l)
    ok = sum(r.statistic < r.target for r in rows)
    record_property("detail", f"l={l}: {ok}/50 below {rows[0].target:g}, "
                              f"max={max(r.statistic for r in rows):.3f}")
    assert ok >= 0.98 * 50


@acceptance(7, "recursion and expansion residuals shrink with n")
def test_shrinkage(record_property):
    def med(fn, k):
        rows = []
        for n in (200, 1600):
            rows += fn(TrialConfig(n // 4, n, trials=5, seed=0), k)
        return median_by_n(rows)

    rec = med(recursion_residual, 1)
    exp2 = med(expansion_check, 2)
    exact = [r.statistic for n in (200, 1600)
             for r in expansion_check(TrialConfig(n // 4, n, trials=5, seed=0), 1)]
    record_property("detail", f"recursion {rec[200]:.4f}->{rec[1600]:.4f}, "
                              f"expansion {exp2[200]:.4f}->{exp2[1600]:.4f}, "
                              f"k=1 max={max(exact):.1e}")
    assert rec[1600] < rec[200]
    assert exp2[1600] < exp2[200]
    assert max(exact) <= 1e-9


@acceptance(8, "graph combinatorics")
def test_graphs(record_property):
    rows = {k: leading_moment_counts(k) for k in range(1, 5)}
    expected = {1: [1], 2: [1, 1], 3: [1, 3, 1], 4: [1, 6, 6, 1]}
    bad = sum(len(verify_chain_lemmas(k).counterexamples) for k in (1, 2, 3))
    record_property("detail", f"rows={[list(r.values()) for r in rows.values()]} counterexamples={bad}")
    for k, want in expected.items():
        assert [rows[k][s] for s in range(1, k + 1)] == want
    assert [sum(r.values()) for r in rows.values()] == [1, 2, 5, 14]
    assert bad == 0


@acceptance(9, "spectra integrity on random Hermitian quaternion matrices")
def test_spectra_integrity(record_property):
    rng = np.random.default_rng(0)
    gap = resid = trace_err = 0.0
    for _ in range(50):
        p = int(rng.integers(1, 51))
        a = QMatrix(rng.standard_normal((p, p, 4)))
        a = QMatrix(0.5 * (a.coeffs + a.adjoint().coeffs))
        sp = spectrum(a)
        scale = max(1.0, float(np.max(np.abs(sp.values))))
        gap = max(gap, sp.max_pair_gap / scale)
        c = a.embed()
        w, u = eigh(c, vectors=True)
        resid = max(resid, np.linalg.norm(c - (u * w) @ u.conj().T, 2) / (1.0 + scale))
        trace_err = max(trace_err, abs(sp.paired_values.sum() - a.coeffs[np.arange(p), np.arange(p), 0].sum()),
                        abs(w.sum() - np.trace(c).real))
    record_property("detail", f"pair gap={gap:.1e} residual={resid:.1e} trace err={trace_err:.1e}")
    assert gap <= 1e-8
    assert resid <= 1e-10
    assert trace_err <= 1e-9


@acceptance(10, "necessity: heavy tails and nonzero mean")
def test_necessity_heavy_tail(record_property):
    rep = necessity_demo("heavy-tail", [200, 800, 3200], y=0.25, seeds=range(5))
    hits = round(rep.monotone_fraction() * 5)
    record_property("detail", f"heavy-tail monotone in {hits}/5 seeds")
    assert hits >= 4


@acceptance(10, "necessity: heavy tails and nonzero mean")
def test_necessity_nonzero_mean(record_property):
    rep = necessity_demo("nonzero-mean", [800], p=200, seeds=range(5))
    record_property("detail", f"shifted-mean min s_max/limit={rep.min_ratio():.1f}")
    assert rep.min_ratio() > 4.0


@acceptance(10, "necessity: heavy tails and nonzero mean")
def test_necessity_control(record_property):
    rep = necessity_demo("bounded", [800], y=0.25, seeds=range(5))
    record_property("detail", f"signed-unit max s_max/limit={rep.max_ratio():.3f}")
    assert rep.max_ratio() <= 1.2


@acceptance(11, "determinism: byte-identical CSV output")
def test_determinism(tmp_path, capsys, record_property):
    args = ["--p", "30", "--n", "60", "--trials", "3", "--seed", "42", "--dist", "pareto"]
    for d in ("a", "b"):
        assert main(["simulate", *args, "--out-dir", str(tmp_path / d)]) == 0
    assert main(["replay", str(tmp_path / "a" / "manifest.json"), "--out-dir", str(tmp_path / "c")]) == 0
    for d in ("a", "b", "c"):
        assert main(["lemmas", "--check", "bound", "--l", "1", "--sizes", "40", "80", "--seeds", "2",
                     "--seed", "42", "--out-dir", str(tmp_path / f"l{d}")]) == 0
    capsys.readouterr()
    trials = {(tmp_path / d / "trials.csv").read_bytes() for d in ("a", "b", "c")}
    lemmas = {(tmp_path / f"l{d}" / "lemmas.csv").read_bytes() for d in ("a", "b", "c")}
    record_property("detail", f"distinct trials.csv={len(trials)} distinct lemmas.csv={len(lemmas)}")
    assert len(trials) == 1 and len(lemmas) == 1
