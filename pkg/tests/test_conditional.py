"""Conditional critical values, test procedures, and engine consistency."""

import numpy as np
import pytest

from conftest import random_model
from weakiv._engine import (
    EngineMaps,
    conditional_rejections_clr,
    conditional_rejections_pair,
    quantile_index,
)
from weakiv.conditional import McOptions, conditional_critical_value, run_test
from weakiv.distance import chi2_quantile
from weakiv.errors import InvalidInput
from weakiv.model import build_blocks, compute_st, make_design_point, sample_vec_r
from weakiv.statistics import qlr_stat


class TestConditionalCriticalValue:
    def test_ar_kind_matches_chi2_quantile(self):
        config, blocks = random_model(3, 501)
        crit = conditional_critical_value(
            "AR", np.ones(3), config, blocks, 0.05, 100_000, seed=7
        )
        assert crit == pytest.approx(chi2_quantile(0.95, 3), abs=0.1)

    def test_clr_k1_matches_chi2_quantile(self):
        config, blocks = random_model(1, 502)
        crit = conditional_critical_value(
            "CLR", np.array([0.8]), config, blocks, 0.05, 100_000, seed=3
        )
        assert crit == pytest.approx(chi2_quantile(0.95, 1), abs=0.1)

    def test_clr_k4_below_chi2_cutoff(self):
        config, blocks = random_model(4, 503, beta0=0.2)
        rng = np.random.default_rng(1)
        for scale in (0.5, 2.0, 8.0):
            t = scale * rng.standard_normal(4)
            crit = conditional_critical_value(
                "CLR", t, config, blocks, 0.05, 20_000, seed=11
            )
            assert crit <= chi2_quantile(0.95, 4) + 0.15

    def test_monotone_in_alpha_shared_seed(self):
        config, blocks = random_model(3, 504)
        t = np.array([1.0, -0.5, 2.0])
        crits = [
            conditional_critical_value("CQLR2", t, config, blocks, a, 5000, seed=9)
            for a in (0.01, 0.05, 0.10)
        ]
        assert crits[0] >= crits[1] >= crits[2]

    def test_insufficient_draws_guard(self):
        config, blocks = random_model(2, 505)
        with pytest.raises(InvalidInput):
            conditional_critical_value("AR", np.ones(2), config, blocks, 0.05, 10, 0)


class TestRunTest:
    def test_zero_observation_never_rejects(self):
        config, blocks = random_model(2, 510)
        for name in ("AR", "LM", "CLR", "CQLR1", "CQLR2"):
            out = run_test(name, np.zeros(4), config, 0.05, McOptions(n_cond=2000))
            assert out.statistic == 0.0
            assert not out.reject
        lm_out = run_test("LM", np.zeros(4), config, 0.05, McOptions(n_cond=2000))
        assert lm_out.degenerate

    def test_reject_flag_consistency(self, rng):
        config, blocks = random_model(2, 511)
        r = 3.0 * rng.standard_normal(4)
        for name in ("AR", "LM", "CLR", "CQLR1", "CQLR2"):
            out = run_test(name, r, config, 0.05, McOptions(n_cond=2000, seed=4))
            assert out.reject == (out.statistic > out.critical_value)
            assert out.alpha == 0.05

    def test_determinism(self, rng):
        config, blocks = random_model(3, 512)
        r = rng.standard_normal(6)
        a = run_test("CLR", r, config, 0.05, McOptions(n_cond=3000, seed=77))
        b = run_test("CLR", r, config, 0.05, McOptions(n_cond=3000, seed=77))
        assert a == b

    def test_k1_clr_equals_ar_statistic(self, rng):
        config, blocks = random_model(1, 513)
        for _ in range(5):
            r = rng.standard_normal(2)
            ar = run_test("AR", r, config, 0.05)
            clr = run_test("CLR", r, config, 0.05, McOptions(n_cond=2000))
            assert clr.statistic == pytest.approx(ar.statistic, rel=1e-12)

    def test_clc_needs_weight(self, rng):
        config, blocks = random_model(2, 514)
        r = rng.standard_normal(4)
        with pytest.raises(InvalidInput):
            run_test("CLC", r, config, 0.05)
        out = run_test(
            "CLC", r, config, 0.05,
            McOptions(n_cond=2000, weight_fn=lambda t: 0.5),
        )
        assert out.reject == (out.statistic > out.critical_value)

    def test_null_simulation_ar_size(self):
        config, blocks = random_model(2, 515, beta0=0.0)
        point = make_design_point([1.0, 2.0], 0.0, blocks)
        draws = sample_vec_r(point, config, seed=21, n_draws=100_000, blocks=blocks)
        s_mat = draws @ blocks._s_map.T
        ar = np.einsum("ij,ij->i", s_mat, s_mat)
        rate = np.mean(ar > chi2_quantile(0.95, 2))
        assert 0.045 <= rate <= 0.055


class TestEngineKernelEquivalence:
    """The counting kernels must make the same decisions as the direct
    order-statistic construction on an identical pool."""

    @pytest.mark.parametrize("k,seed", [(2, 601), (3, 602), (4, 603)])
    def test_clr_counts_match_direct(self, k, seed):
        config, blocks = random_model(k, seed)
        maps = EngineMaps(config, blocks, n_theta=64)
        rng = np.random.default_rng(seed)
        n_cond, n_outer = 2000, 48
        pool = rng.standard_normal((n_cond, k))
        ar_pool = np.einsum("ij,ij->i", pool, pool)
        order = np.argsort(ar_pool, kind="stable")
        pool_sorted = np.ascontiguousarray(pool[order])
        ar_sorted = np.ascontiguousarray(ar_pool[order])
        vec_r = rng.standard_normal((n_outer, 2 * k)) * 1.5
        stats = maps.lr_values(vec_r)
        alphas = [0.05, 0.2]
        ms = np.array([quantile_index(a, n_cond) for a in alphas], dtype=np.int64)
        rej = conditional_rejections_clr(maps, pool_sorted, ar_sorted, vec_r, stats, ms)
        t_mat = vec_r @ blocks._t_map.T
        for j in range(n_outer):
            psi = maps.pool_psi_clr(pool_sorted, t_mat[j])
            psi_sorted = np.sort(psi)
            for a, m in enumerate(ms):
                crit = psi_sorted[m - 1]
                assert bool(rej[a, j]) == bool(stats[j] > crit), (j, a)

    def test_pair_counts_match_direct_qlr(self):
        config, blocks = random_model(3, 640)
        rng = np.random.default_rng(640)
        n_cond, n_outer = 1500, 40
        pool = rng.standard_normal((n_cond, k := 3))
        ar_pool = np.einsum("ij,ij->i", pool, pool)
        order = np.argsort(ar_pool, kind="stable")
        pool_sorted = np.ascontiguousarray(pool[order])
        ar_sorted = np.ascontiguousarray(ar_pool[order])
        t_mat = rng.standard_normal((n_outer, k)) * 2.0
        g_mat = t_mat @ blocks._lm_weight.T
        gn2 = np.einsum("ij,ij->i", g_mat, g_mat)
        r_stats = np.einsum("ij,ij->i", t_mat, t_mat)
        stats = rng.chisquare(3, n_outer)
        ms = np.array([quantile_index(0.1, n_cond)], dtype=np.int64)
        rej = conditional_rejections_pair(
            k, pool_sorted, ar_sorted, np.ascontiguousarray(g_mat), gn2,
            np.ascontiguousarray(r_stats), 0, stats, ms,
        )
        for j in range(n_outer):
            lm = (pool_sorted @ g_mat[j]) ** 2 / gn2[j]
            lm = np.minimum(lm, ar_sorted)
            psi = np.array(
                [qlr_stat(a, l, r_stats[j]) for a, l in zip(ar_sorted, lm)]
            )
            crit = np.sort(psi)[ms[0] - 1]
            assert bool(rej[0, j]) == bool(stats[j] > crit), j

    def test_pool_psi_vs_observed_statistic_roundtrip(self, rng):
        # reconstructing (S, t) from an actual draw reproduces its LR value
        config, blocks = random_model(3, 660)
        maps = EngineMaps(config, blocks, n_theta=64)
        r = rng.standard_normal(6)
        pair = compute_st(r, config, blocks)
        lr_direct = maps.lr_values(r[None, :])[0]
        lr_via_pool = maps.pool_psi_clr(pair.s[None, :], pair.t)[0]
        assert lr_via_pool == pytest.approx(lr_direct, abs=1e-9)
