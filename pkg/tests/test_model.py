"""Model-core contracts: rotation, (S, T) maps, reconstruction, sampling."""

import numpy as np
import pytest

from conftest import random_model, random_sigma
from weakiv.distance import chi2_cdf
from weakiv.errors import DimensionMismatch, InvalidInput, NonPositiveDefinite
from weakiv.model import (
    ModelConfig,
    build_blocks,
    compute_st,
    invert_st,
    make_design_point,
    sample_vec_r,
)


def dense_st_oracle(config):
    """Explicit-Kronecker construction of the (S, T) maps."""
    k, sigma = config.k, config.sigma
    eye = np.eye(k)
    a0 = np.array([config.beta0, 1.0])
    b0 = np.array([1.0, -config.beta0])
    pa = np.kron(a0.reshape(1, 2), eye)
    pb = np.kron(b0.reshape(1, 2), eye)
    sig_inv = np.linalg.inv(sigma)

    def isqrt(m):
        w, v = np.linalg.eigh(m)
        return (v / np.sqrt(w)) @ v.T

    ls = isqrt(pb @ sigma @ pb.T) @ pb
    lt = isqrt(pa @ sig_inv @ pa.T) @ pa @ sig_inv
    return ls, lt


class TestModelConfig:
    def test_validation(self):
        with pytest.raises(InvalidInput):
            ModelConfig(k=0, beta0=0.0, sigma=np.eye(0))
        with pytest.raises(DimensionMismatch):
            ModelConfig(k=2, beta0=0.0, sigma=np.eye(3))
        with pytest.raises(NonPositiveDefinite):
            ModelConfig(k=1, beta0=0.0, sigma=np.array([[1.0, 2.0], [2.0, 1.0]]))
        asym = np.eye(2)
        asym[0, 1] = 1e-6
        with pytest.raises(NonPositiveDefinite):
            ModelConfig(k=1, beta0=0.0, sigma=asym)

    def test_spd_tolerance_rejects_near_singular(self):
        sigma = np.diag([1.0, 1e-12])
        with pytest.raises(NonPositiveDefinite):
            ModelConfig(k=1, beta0=0.0, sigma=sigma)


class TestBuildBlocks:
    def test_identity_rotation_at_null_zero(self):
        sigma = random_sigma(3, 11)
        config = ModelConfig(k=3, beta0=0.0, sigma=sigma)
        blocks = build_blocks(config)
        assert np.array_equal(blocks.sigma0, 0.5 * (sigma + sigma.T))

    def test_hand_rotated_covariance_k1(self):
        # (B0' kron I) Sigma (B0 kron I) with B0 = [[1,0],[-1,1]], Sigma = I2:
        # hand multiplication gives [[2,-1],[-1,1]]
        config = ModelConfig(k=1, beta0=1.0, sigma=np.eye(2))
        blocks = build_blocks(config)
        assert blocks.sigma0 == pytest.approx(np.array([[2.0, -1.0], [-1.0, 1.0]]))
        # direct evaluation of the inverse Schur complement on that result:
        # (1 - (-1)(1/2)(-1))^(-1) = 2
        assert blocks.sigma_up22[0, 0] == pytest.approx(2.0, rel=1e-12)

    @pytest.mark.parametrize("k,seed", [(1, 3), (2, 4), (4, 5)])
    def test_inverse_block_identities(self, k, seed):
        _, blocks = random_model(k, seed)
        s11_inv = np.linalg.inv(blocks.sigma11)
        schur = np.linalg.inv(blocks.sigma22 - blocks.sigma21 @ s11_inv @ blocks.sigma12)
        assert np.allclose(blocks.sigma_up22, schur, rtol=1e-10)
        assert np.allclose(
            blocks.sigma_up21, -blocks.sigma_up22 @ blocks.sigma21 @ s11_inv,
            rtol=1e-9, atol=1e-12,
        )
        assert np.allclose(blocks.sigma21, blocks.sigma12.T)
        s11_up = np.linalg.inv(
            blocks.sigma11 - blocks.sigma12 @ np.linalg.inv(blocks.sigma22) @ blocks.sigma21
        )
        assert np.allclose(blocks.sigma_up11, s11_up, rtol=1e-9)


class TestComputeSt:
    def test_zero_maps_to_zero(self):
        config, blocks = random_model(2, 21)
        pair = compute_st(np.zeros(4), config, blocks)
        assert np.all(pair.s == 0.0) and np.all(pair.t == 0.0)

    def test_k1_identity_sigma_null_zero(self):
        config = ModelConfig(k=1, beta0=0.0, sigma=np.eye(2))
        blocks = build_blocks(config)
        pair = compute_st([1.3, -0.4], config, blocks)
        # b0 = (1, 0), a0 = (0, 1): the sandwiches collapse to scalars
        assert pair.s[0] == pytest.approx(1.3, abs=1e-12)
        assert pair.t[0] == pytest.approx(-0.4, abs=1e-12)

    def test_matches_dense_kronecker_oracle_k3(self, rng):
        config, blocks = random_model(3, 33)
        ls, lt = dense_st_oracle(config)
        for _ in range(5):
            r = rng.standard_normal(6)
            pair = compute_st(r, config, blocks)
            assert np.allclose(pair.s, ls @ r, atol=1e-10)
            assert np.allclose(pair.t, lt @ r, atol=1e-10)

    def test_st_covariance_identity_and_independence(self):
        config, blocks = random_model(3, 41)
        stacked = np.vstack([blocks._s_map, blocks._t_map])
        cov = stacked @ config.sigma @ stacked.T
        assert np.allclose(cov, np.eye(6), atol=1e-10)


class TestInvertSt:
    def test_zero_roundtrip(self):
        config, blocks = random_model(2, 55)
        pair = compute_st(np.zeros(4), config, blocks)
        assert np.allclose(invert_st(pair, config, blocks), 0.0)

    def test_k1_identity_inverse(self):
        config = ModelConfig(k=1, beta0=0.0, sigma=np.eye(2))
        blocks = build_blocks(config)
        from weakiv.model import StatPair

        vec = invert_st(StatPair(s=[0.7], t=[-2.0]), config, blocks)
        assert vec == pytest.approx([0.7, -2.0], abs=1e-12)

    def test_random_roundtrip_k4(self, rng):
        config, blocks = random_model(4, 60)
        for _ in range(10):
            r = rng.standard_normal(8)
            pair = compute_st(r, config, blocks)
            assert np.allclose(invert_st(pair, config, blocks), r, atol=1e-8)


class TestSampling:
    def test_zero_mean_case(self):
        config, blocks = random_model(2, 70, beta0=0.3)
        point = make_design_point(np.zeros(2), 0.0, blocks)
        draws = sample_vec_r(point, config, seed=9, n_draws=100_000, blocks=blocks)
        se = np.sqrt(np.diag(config.sigma) / draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0)) < 4.0 * se)

    def test_k1_identity_mean(self):
        config = ModelConfig(k=1, beta0=0.0, sigma=np.eye(2))
        blocks = build_blocks(config)
        point = make_design_point([2.0], 1.0, blocks)
        draws = sample_vec_r(point, config, seed=2, n_draws=60_000, blocks=blocks)
        # at beta0 = 0 the frames coincide; a_Delta = (1, 1) so mean = (2, 2)
        assert draws.mean(axis=0) == pytest.approx([2.0, 2.0], abs=4.5 / np.sqrt(60_000))

    def test_empirical_covariance_lln(self):
        config, blocks = random_model(2, 81, beta0=-0.6)
        point = make_design_point([1.0, -0.5], 0.7, blocks)
        draws = sample_vec_r(point, config, seed=5, n_draws=100_000, blocks=blocks)
        rot = np.kron(config.b0_mat.T, np.eye(2))
        r0 = draws @ rot.T
        emp = np.cov(r0.T)
        err = np.linalg.norm(emp - blocks.sigma0) / np.linalg.norm(blocks.sigma0)
        assert err < 0.05

    def test_deterministic_given_seed(self):
        config, blocks = random_model(2, 90)
        point = make_design_point([1.0, 0.0], 0.5, blocks)
        a = sample_vec_r(point, config, seed=123, n_draws=5000, blocks=blocks)
        b = sample_vec_r(point, config, seed=123, n_draws=5000, blocks=blocks)
        assert np.array_equal(a, b)
        # prefix stability: a shorter run is a prefix of a longer one
        c = sample_vec_r(point, config, seed=123, n_draws=1000, blocks=blocks)
        assert np.array_equal(a[:1000], c)


class TestNullDistribution:
    def test_ar_pivotal_ks_and_independence(self):
        config, blocks = random_model(2, 101, beta0=0.8)
        point = make_design_point([3.0, -1.0], 0.0, blocks)  # null, nonzero mu
        draws = sample_vec_r(point, config, seed=17, n_draws=100_000, blocks=blocks)
        s_mat = draws @ blocks._s_map.T
        t_mat = draws @ blocks._t_map.T
        ar = np.einsum("ij,ij->i", s_mat, s_mat)
        xs = np.sort(ar)
        n = xs.shape[0]
        cdf = np.array([chi2_cdf(x, 2) for x in xs])
        ks = np.max(np.abs(cdf - np.arange(1, n + 1) / n))
        assert ks < 0.01
        # S independent of T: all cross-correlations small
        for i in range(2):
            for j in range(2):
                c = np.corrcoef(s_mat[:, i], t_mat[:, j])[0, 1]
                assert abs(c) < 0.02
