import math

import numpy as np
import pytest

from qrmt.experiments import (TrialConfig, TrialError, covariance, diamond_bound,
                              diamond_bound_check, expansion_check,
                              expansion_residual_matrix, ks_distance, median_by_n,
                              moment_compare, necessity_demo, power_moments,
                              recursion_residual, recursion_residual_matrix,
                              row_mean_statistic, run_extremes, strictly_decreasing,
                              triangle_terms)
from qrmt.mplaw import MPLaw, quantile
from qrmt.qmatrix import QMatrix
from qrmt.randgen import EntryDistribution, sample_matrix
from qrmt.spectra import spectrum


def test_config_validation_and_roundtrip():
    with pytest.raises(ValueError):
        TrialConfig(1, 10)
    with pytest.raises(ValueError):
        TrialConfig(5, 10, trials=0)
    cfg = TrialConfig(6, 12, EntryDistribution("shifted", 2.0, shift=(0, 1, 0, 0)), 3, 17, True)
    assert cfg.y_n == 0.5
    assert TrialConfig.from_dict(cfg.to_dict()) == cfg


def test_ks_quantile_spectrum():
    law = MPLaw(0.25)
    p = 200
    vals = np.array([quantile(law, (i + 0.5) / p) for i in range(p)])
    assert ks_distance(vals, law) <= 1.0 / p


def test_ks_point_mass():
    law = MPLaw(0.25)
    assert ks_distance(np.full(50, 100.0), law) == pytest.approx(1.0)
    assert ks_distance(np.full(50, 0.01), law) == pytest.approx(1.0)


def test_ks_atom_handling():
    law = MPLaw(2.0)
    p = 400
    zeros = np.zeros(200)
    bulk = np.array([quantile(law, 0.5 + (i + 0.5) / p) for i in range(200)])
    assert ks_distance(np.concatenate([zeros + 1e-17, bulk]), law) <= 1.0 / p


def test_ks_against_direct_scan():
    # brute-force sup over a fine grid plus left limits approximated from below
    rng = np.random.default_rng(0)
    law = MPLaw(0.5)
    vals = np.sort(rng.uniform(0.1, 3.0, size=25))
    grid = np.concatenate([vals, vals - 1e-12, np.linspace(0, 3.5, 2000)])
    esd = np.searchsorted(vals, grid, side="right") / len(vals)
    direct = np.max(np.abs(esd - law.cdf(grid)))
    assert ks_distance(vals, law) == pytest.approx(direct, abs=1e-9)


def test_power_moments_trace_identity():
    rng = np.random.default_rng(1)
    x = QMatrix(rng.standard_normal((8, 20, 4)))
    s = covariance(x)
    sp = spectrum(s)
    m1, m2 = power_moments(sp.paired_values, 2)
    assert m1 == pytest.approx(np.sum(x.coeffs ** 2) / (8 * 20), rel=1e-12)
    s2 = (s @ s).coeffs[np.arange(8), np.arange(8), 0].sum() / 8
    assert m2 == pytest.approx(s2, rel=1e-12)


def test_run_extremes_records_and_determinism():
    cfg = TrialConfig(10, 30, trials=3, seed=5)
    a, b = run_extremes(cfg, 3), run_extremes(cfg, 3)
    assert a == b
    assert [r.trial for r in a] == [0, 1, 2]
    for r in a:
        assert 0 <= r.s_min <= r.s_max and 0 <= r.ks <= 1 and len(r.moments) == 3
    assert run_extremes(cfg, 3, jobs=2) == a


def test_wide_case_zero_count():
    recs = run_extremes(TrialConfig(40, 20, trials=2), 1)
    assert all(r.zero_count == 20 for r in recs)


def test_trial_error_carries_index(monkeypatch):
    import qrmt.experiments as ex

    def boom(*args, **kwargs):
        raise RuntimeError("solver failure")

    monkeypatch.setattr(ex, "spectrum", boom)
    with pytest.raises(TrialError) as info:
        run_extremes(TrialConfig(4, 8, trials=2))
    assert info.value.trial == 0


def test_moment_compare_k1():
    rows = moment_compare(TrialConfig(20, 80, trials=2), 4)
    assert [r.k for r in rows] == [1, 2, 3, 4]
    assert rows[0].theoretical == 1.0 and rows[0].rel_error < 0.05
    with pytest.raises(ValueError):
        moment_compare(TrialConfig(20, 80), 9)


def test_diamond_bound_values():
    assert diamond_bound(1, 0.3) == 6.0
    assert diamond_bound(2, 0.25) == pytest.approx(7.5)
    assert diamond_bound(3, 0.25, 2.0) == pytest.approx(7 * 4 * 0.25 * 8)
    rows = diamond_bound_check(TrialConfig(10, 40, trials=2), 1)
    assert all(r.margin == pytest.approx(r.target - r.statistic) for r in rows)
    with pytest.raises(ValueError):
        diamond_bound_check(TrialConfig(10, 40), 4)


def test_zero_matrix_residuals():
    z = QMatrix.zeros(10, 40)
    assert recursion_residual_matrix(z, 1, 1.0) == pytest.approx(0.25, abs=1e-15)
    assert recursion_residual_matrix(z, 1, 2.0) == pytest.approx(0.25 * 4, abs=1e-15)
    with pytest.raises(ValueError):
        recursion_residual_matrix(z, 3, 1.0)


def test_expansion_k1_exact():
    rng = np.random.default_rng(2)
    x = QMatrix(rng.standard_normal((6, 15, 4)))
    assert expansion_residual_matrix(x, 1, 1.0) <= 1e-12
    rows = expansion_check(TrialConfig(6, 15, trials=3), 1)
    assert all(r.statistic <= 1e-9 and r.margin >= 0 for r in rows)


def test_expansion_k2_equals_recursion_k1():
    # the degree-2 expansion is the k = 1 three-term rule rearranged
    rng = np.random.default_rng(3)
    x = QMatrix(rng.standard_normal((7, 21, 4)))
    assert expansion_residual_matrix(x, 2, 1.0) == pytest.approx(
        recursion_residual_matrix(x, 1, 1.0), rel=1e-10)


def test_residual_helpers():
    rows = recursion_residual(TrialConfig(8, 32, trials=3), 1)
    med = median_by_n(rows)
    assert list(med) == [32] and med[32] == pytest.approx(np.median([r.statistic for r in rows]))
    assert all(math.isnan(r.target) for r in rows)
    assert strictly_decreasing([3, 2, 1]) and not strictly_decreasing([3, 3, 1])


@pytest.mark.parametrize("dist", ["gaussian", "signed-unit", "pareto-heavy", "shifted-mean"])
def test_row_mean_lower_bound(dist):
    for seed in range(3):
        x = sample_matrix(EntryDistribution(dist), 12, 30, seed)
        s_max = spectrum(covariance(x)).paired_values[-1]
        assert s_max >= row_mean_statistic(x) - 1e-9


def test_triangle_decomposition():
    for seed in range(5):
        x = sample_matrix(EntryDistribution(), 15, 60, seed)
        lhs, d, o = triangle_terms(x, 1.0)
        assert lhs <= d + o + 1e-9


def test_necessity_demo_small():
    rep = necessity_demo("nonzero-mean", [40], p=20, seeds=[0])
    assert rep.rows[0].s_max > 4 * rep.edge_limit
    rep = necessity_demo("bounded", [40, 80], seeds=[0, 1])
    assert len(rep.rows) == 4 and rep.max_ratio() < 2.0
    rep = necessity_demo("heavy-tail", [40, 80], seeds=[0])
    assert all(r.s_max >= r.row_stat - 1e-9 for r in rep.rows)
    with pytest.raises(ValueError):
        necessity_demo("heavy-tail", [80, 40])
    with pytest.raises(ValueError):
        necessity_demo("cauchy", [40])


def test_necessity_nested_blocks():
    a = necessity_demo("heavy-tail", [40, 80], seeds=[3])
    b = necessity_demo("heavy-tail", [80], seeds=[3])
    assert a.rows[1] == b.rows[0]
    c = necessity_demo("heavy-tail", [40, 80], seeds=[3], nested=False)
    assert c.rows[0] != a.rows[0]
