"""Drift/variance formulas: dense oracles, simulation checks, boundedness."""

import numpy as np
import pytest

from conftest import random_model
from weakiv.asymptotics import (
    AsymptoticInputs,
    lm_fa_drift,
    lm_fa_variance,
    lm_fa_variance_components,
    lm_id_limit,
    lm_la_drift,
)
from weakiv.diagnostics import make_id_design
from weakiv.errors import DegenerateDenominator
from weakiv.model import build_blocks


def sym_isqrt(m):
    w, v = np.linalg.eigh(m)
    return (v / np.sqrt(w)) @ v.T


def simulate_lm1(blocks, mu, delta, n_rep, seed):
    """Draw LM1 from the joint (S, T) normal representation."""
    rng = np.random.default_rng(seed)
    k = mu.shape[0]
    isq11 = blocks._sigma11_isqrt
    s11_inv = np.linalg.inv(blocks.sigma11)
    up22_sqrt = blocks._up22_sqrt
    mean_s = delta * isq11 @ mu
    mean_t = up22_sqrt @ (np.eye(k) - delta * blocks.sigma21 @ s11_inv) @ mu
    s = mean_s + rng.standard_normal((n_rep, k))
    t = mean_t + rng.standard_normal((n_rep, k))
    g = t @ blocks._lm_weight.T
    return np.einsum("ij,ij->i", s, g) / np.linalg.norm(g, axis=1)


class TestRepresentationConsistency:
    def test_st_means_match_model_maps(self):
        # the (S, T) mean representation used in simulation checks agrees
        # with the model's own linear maps applied to the mean observation
        config, blocks = random_model(3, 901, beta0=0.6)
        rng = np.random.default_rng(2)
        mu = rng.standard_normal(3)
        delta = 1.7
        beta_star = config.beta0 + delta
        vec_mean = np.concatenate([beta_star * mu, mu])
        s_mean = blocks._s_map @ vec_mean
        t_mean = blocks._t_map @ vec_mean
        k = 3
        expect_s = delta * blocks._sigma11_isqrt @ mu
        expect_t = blocks._up22_sqrt @ (
            np.eye(k) - delta * blocks.sigma21 @ np.linalg.inv(blocks.sigma11)
        ) @ mu
        assert np.allclose(s_mean, expect_s, atol=1e-10)
        assert np.allclose(t_mean, expect_t, atol=1e-10)


class TestLaDrift:
    def test_zero_local_distance(self):
        config, blocks = random_model(2, 902)
        inputs = AsymptoticInputs(pi=[1.0, 0.0], d_mat=np.eye(2), h_delta=0.0)
        assert lm_la_drift(inputs, blocks) == 0.0

    def test_identity_collapse(self):
        config, blocks = random_model(2, 903)
        # override blocks with identity covariance for the collapse case
        from weakiv.model import ModelConfig

        cfg = ModelConfig(k=2, beta0=0.0, sigma=np.eye(4))
        blk = build_blocks(cfg)
        inputs = AsymptoticInputs(pi=[1.0, 0.0], d_mat=np.eye(2), h_delta=2.0)
        assert lm_la_drift(inputs, blk) == pytest.approx(2.0, rel=1e-12)

    def test_dense_oracle(self, rng):
        config, blocks = random_model(3, 904)
        pi = rng.standard_normal(3)
        a = rng.standard_normal((3, 3))
        d_mat = a @ a.T + np.eye(3)
        inputs = AsymptoticInputs(pi=pi, d_mat=d_mat, h_delta=1.3)
        dsq = sym_isqrt(np.linalg.inv(d_mat))  # D^{1/2}
        val = 1.3 * np.sqrt(
            pi @ dsq @ np.linalg.inv(blocks.sigma11) @ dsq @ pi
        )
        assert lm_la_drift(inputs, blocks) == pytest.approx(val, rel=1e-9)

    def test_simulation_check(self):
        # local alternatives: delta_n = h/sqrt(n), mu_n = sqrt(n) D^{1/2} pi
        config, blocks = random_model(3, 905)
        rng = np.random.default_rng(7)
        pi = rng.standard_normal(3)
        d_mat = np.eye(3) * 1.5
        h_delta = 1.8
        inputs = AsymptoticInputs(pi=pi, d_mat=d_mat, h_delta=h_delta)
        n = 10_000
        mu_n = np.sqrt(n) * sym_isqrt(np.linalg.inv(d_mat)) @ pi
        delta_n = h_delta / np.sqrt(n)
        draws = simulate_lm1(blocks, mu_n, delta_n, 10_000, seed=3)
        drift = lm_la_drift(inputs, blocks)
        se = draws.std(ddof=1) / np.sqrt(draws.shape[0])
        assert abs(draws.mean() - drift) < 3.0 * se + 2e-2
        assert 0.9 <= draws.var(ddof=1) <= 1.1


class TestFaDrift:
    def test_zero_delta(self, rng):
        config, blocks = random_model(3, 906)
        assert lm_fa_drift(0.0, rng.standard_normal(3), blocks) == 0.0

    def test_block_diagonal_linear_growth(self):
        # with sigma21 = 0 the drift reduces to delta * sqrt(mu'S11i mu)
        from weakiv.model import ModelConfig

        s11 = np.array([[2.0, 0.3], [0.3, 1.0]])
        sigma = np.block([[s11, np.zeros((2, 2))], [np.zeros((2, 2)), np.eye(2)]])
        cfg = ModelConfig(k=2, beta0=0.0, sigma=sigma)
        blk = build_blocks(cfg)
        mu = np.array([1.0, -0.7])
        base = np.sqrt(mu @ np.linalg.inv(s11) @ mu)
        for delta in (0.5, 3.0, 50.0):
            assert lm_fa_drift(delta, mu, blk) == pytest.approx(
                delta * base, rel=1e-10
            )

    def test_id_large_delta_limit_matches_mbar(self):
        config, mu = make_id_design(4, 25.0, offdiag_scale=0.6)
        blocks = build_blocks(config)
        mbar = lm_id_limit(mu, blocks)
        drift = lm_fa_drift(1e6, mu, blocks)
        assert drift == pytest.approx(mbar, rel=1e-4)

    def test_id_bounded_over_delta_grid(self):
        config, mu = make_id_design(4, 25.0)
        blocks = build_blocks(config)
        mbar = lm_id_limit(mu, blocks)
        grid = [10.0**j for j in range(1, 7)]
        sup = max(abs(lm_fa_drift(d, mu, blocks)) for d in grid)
        assert abs(sup - mbar) / mbar < 0.01

    def test_generic_linear_growth_without_id(self, rng):
        config, blocks = random_model(3, 907)
        mu = rng.standard_normal(3)
        # generic mu has mu'A mu != 0, so |drift| grows linearly
        r = abs(lm_fa_drift(1e4, mu, blocks)) / abs(lm_fa_drift(1e3, mu, blocks))
        assert 9.0 <= r <= 11.0


class TestFaVariance:
    def test_delta_zero_and_k1(self, rng):
        config, blocks = random_model(3, 908)
        inputs = AsymptoticInputs(pi=rng.standard_normal(3), d_mat=np.eye(3))
        assert lm_fa_variance(0.0, inputs, blocks) == pytest.approx(1.0, abs=1e-12)
        config1, blocks1 = random_model(1, 909)
        inputs1 = AsymptoticInputs(pi=[0.8], d_mat=np.eye(1))
        for delta in (0.0, 1.0, 40.0):
            assert lm_fa_variance(delta, inputs1, blocks1) == pytest.approx(
                1.0, abs=1e-12
            )

    def test_dense_oracle_k3(self, rng):
        config, blocks = random_model(3, 910)
        pi = rng.standard_normal(3)
        a = rng.standard_normal((3, 3))
        d_mat = a @ a.T + 2 * np.eye(3)
        delta = 1.4
        inputs = AsymptoticInputs(pi=pi, d_mat=d_mat)
        # explicit construction with M_gamma formed densely
        s11_isq = sym_isqrt(blocks.sigma11)
        dhalf = sym_isqrt(np.linalg.inv(d_mat))
        v = dhalf @ pi
        gamma = s11_isq @ (
            np.eye(3) - delta * blocks.sigma21 @ np.linalg.inv(blocks.sigma11)
        ) @ v
        m_g = np.eye(3) - np.outer(gamma, gamma) / (gamma @ gamma)
        up22_inv = np.linalg.inv(blocks.sigma_up22)
        mid = m_g @ s11_isq @ up22_inv @ s11_isq @ m_g
        val = 1.0 + (delta**2 / (gamma @ gamma)) * (v @ s11_isq @ mid @ s11_isq @ v)
        assert lm_fa_variance(delta, inputs, blocks) == pytest.approx(val, rel=1e-9)
        assert val >= 1.0

    def test_components_sum_to_total(self, rng):
        config, blocks = random_model(3, 911)
        inputs = AsymptoticInputs(pi=rng.standard_normal(3), d_mat=np.eye(3))
        total = lm_fa_variance(0.9, inputs, blocks)
        first, second = lm_fa_variance_components(0.9, inputs, blocks)
        assert first + second == pytest.approx(total, rel=1e-10)


class TestIdLimit:
    def test_homogeneous_degree_one(self, rng):
        config, blocks = random_model(3, 912)
        mu = rng.standard_normal(3)
        assert lm_id_limit(2.0 * mu, blocks) == pytest.approx(
            2.0 * lm_id_limit(mu, blocks), rel=1e-12
        )

    def test_design_value_finite_while_ar_diverges(self):
        config, mu = make_id_design(10, 100.0)
        blocks = build_blocks(config)
        mbar = lm_id_limit(mu, blocks)
        assert np.isfinite(mbar)
        assert mbar == pytest.approx(1.0 / (4.0 * 0.75), rel=1e-12)
        # AR noncentrality grows without bound in delta
        s11_inv = np.linalg.inv(blocks.sigma11)
        d_at = lambda delta: delta**2 * mu @ s11_inv @ mu
        assert d_at(100.0) > 1e5

    def test_dense_oracle(self, rng):
        config, blocks = random_model(4, 913)
        mu = rng.standard_normal(4)
        s11_inv = np.linalg.inv(blocks.sigma11)
        num = mu @ s11_inv @ mu
        den = np.sqrt(
            mu @ s11_inv @ blocks.sigma12 @ s11_inv @ blocks.sigma21 @ s11_inv @ mu
        )
        assert lm_id_limit(mu, blocks) == pytest.approx(num / den, rel=1e-9)

    def test_degenerate_channel_raises(self):
        from weakiv.model import ModelConfig

        sigma = np.block(
            [[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), np.eye(2)]]
        )
        cfg = ModelConfig(k=2, beta0=0.0, sigma=sigma)
        blk = build_blocks(cfg)
        with pytest.raises(DegenerateDenominator):
            lm_id_limit(np.array([1.0, 0.0]), blk)
