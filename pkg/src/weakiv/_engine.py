"""Internal Monte-Carlo engine shared by the test procedures and the
power-curve driver.

The conditional tests compare a statistic against the empirical
(1-alpha) quantile of its null law given T, approximated by resampling
the pivotal S.  For rejection decisions only the *rank* of the observed
statistic in the conditional pool matters, so the power engine counts
pool values below the observed statistic instead of materializing
quantiles.  Counting exploits two exact facts:

* every conditional statistic here is bounded by the pool draw's AR
  value, so once the pool is sorted by AR the draws with AR below the
  observed statistic count automatically;
* for the LR statistic the pairwise minimum over the direction grid can
  be accumulated branch-free in a compiled kernel.

Both tricks change nothing statistically; results are identical to the
naive quantile construction up to ties of probability zero.

Direction grid: LR is evaluated on a fixed grid of ``n_theta`` uniform
directions on [0, pi) augmented with the null direction, the same grid
for observed statistics and conditional draws, so the comparison is
exchangeable under the null.  At k = 1 the LR statistic equals AR
identically and the grid is bypassed.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from ._linalg import sym_inv_sqrt
from .errors import SingularMap
from .model import ModelConfig, RotatedBlocks

_DEGENERATE_GNORM2 = 1e-24
_JTILE = 16

TEST_AR = "AR"
TEST_LM = "LM"
TEST_CLR = "CLR"
TEST_CQLR1 = "CQLR1"
TEST_CQLR2 = "CQLR2"
TEST_CLC = "CLC"

ALL_TESTS = (TEST_AR, TEST_LM, TEST_CLR, TEST_CQLR1, TEST_CQLR2, TEST_CLC)
TEST_IDS = {name: i for i, name in enumerate(ALL_TESTS)}


def quantile_index(alpha: float, n_draws: int) -> int:
    """1-based order-statistic index ceil((1-alpha)*n) of the empirical
    upper quantile."""
    return int(math.ceil((1.0 - alpha) * n_draws))


class EngineMaps:
    """Per-model precomputation: direction grid and whitened linear maps.

    ``grids[i]`` maps vec(R) to the whitened residual for direction i, so
    Q_i(r) = ||grids[i] @ r||^2.  ``pool_a`` / ``pool_b`` compose those
    maps with the (S, T) reconstruction, letting conditional draws be
    evaluated directly from (S*, t).
    """

    def __init__(self, config: ModelConfig, blocks: RotatedBlocks, n_theta: int = 256):
        k = config.k
        sigma = config.sigma
        thetas = np.arange(n_theta) * (math.pi / n_theta)
        theta0 = math.atan(config.beta0) % math.pi
        if np.min(np.abs(thetas - theta0)) > 1e-12:
            thetas = np.append(thetas, theta0)
        self.config = config
        self.blocks = blocks
        self.k = k
        self.thetas = thetas
        n = thetas.shape[0]
        grids = np.empty((n, k, 2 * k))
        s11, s12 = sigma[:k, :k], sigma[:k, k:]
        s21, s22 = sigma[k:, :k], sigma[k:, k:]
        for i, th in enumerate(thetas):
            c, s = math.cos(th), -math.sin(th)
            w = c * c * s11 + c * s * (s12 + s21) + s * s * s22
            isq = sym_inv_sqrt(w, "direction sandwich")
            grids[i, :, :k] = c * isq
            grids[i, :, k:] = s * isq
        self.grids = grids
        if blocks._st_inv is not None:
            p_s = blocks._st_inv[:, :k]
            p_t = blocks._st_inv[:, k:]
            self.pool_a = np.ascontiguousarray(grids @ p_s)  # (n, k, k)
            self.pool_b = np.ascontiguousarray(grids @ p_t)
        else:
            self.pool_a = None
            self.pool_b = None

    def lr_values(self, vec_r_mat):
        """Grid LR for each row of vec_r_mat; exact AR identity at k = 1."""
        vec_r_mat = np.atleast_2d(np.asarray(vec_r_mat, dtype=float))
        s_mat = vec_r_mat @ self.blocks._s_map.T
        ar = np.einsum("ij,ij->i", s_mat, s_mat)
        if self.k == 1:
            return ar.copy()
        qmin = np.full(vec_r_mat.shape[0], np.inf)
        for i in range(self.grids.shape[0]):
            y = vec_r_mat @ self.grids[i].T
            np.minimum(qmin, np.einsum("ij,ij->i", y, y), out=qmin)
        return np.maximum(ar - qmin, 0.0)

    def pool_psi_clr(self, pool_s, t):
        """Conditional-pool LR values given T = t (values, not counts)."""
        if self.pool_a is None:
            raise SingularMap("(S,T) reconstruction map is numerically singular")
        pool_s = np.asarray(pool_s, dtype=float)
        ar = np.einsum("ij,ij->i", pool_s, pool_s)
        if self.k == 1:
            return ar.copy()
        t = np.asarray(t, dtype=float).reshape(-1)
        qmin = np.full(pool_s.shape[0], np.inf)
        for i in range(self.grids.shape[0]):
            y = pool_s @ self.pool_a[i].T + self.pool_b[i] @ t
            np.minimum(qmin, np.einsum("ij,ij->i", y, y), out=qmin)
        return np.maximum(ar - qmin, 0.0)


_CLR_KERNELS = {}
_PAIR_KERNELS = {}


def _make_clr_count_kernel(k):
    @njit(cache=True, parallel=True, fastmath=True)
    def kern(u_maps, u2, ar, v_maps, v2, stats, l0s, ms, rej):
        # u_maps: (n_theta, k, n_cond) pool-side whitened images, AR-ascending
        # u2: (n_theta, n_cond) squared norms; ar: (n_cond,) ascending
        # v_maps: (block, n_theta, k); v2: (block, n_theta)
        # stats: (block,) observed LR; l0s: (block,) first pool index with
        # ar >= stat; ms: (n_alpha,) order-statistic indices
        # rej: (n_alpha, block) uint8 output
        n_theta = u_maps.shape[0]
        n_cond = u_maps.shape[2]
        block = v_maps.shape[0]
        n_alpha = ms.shape[0]
        ntiles = (block + _JTILE - 1) // _JTILE
        for tidx in prange(ntiles):
            j_lo = tidx * _JTILE
            j_hi = min(j_lo + _JTILE, block)
            width = j_hi - j_lo
            qmin = np.empty((width, n_cond))
            w = np.empty(k)
            for jj in range(width):
                l0 = l0s[j_lo + jj]
                for l in range(l0, n_cond):
                    qmin[jj, l] = np.inf
            for th in range(n_theta):
                u2t = u2[th]
                ut = u_maps[th]
                for jj in range(width):
                    j = j_lo + jj
                    l0 = l0s[j]
                    if l0 >= n_cond:
                        continue
                    base = v2[j, th]
                    for a in range(k):
                        w[a] = 2.0 * v_maps[j, th, a]
                    qm = qmin[jj]
                    for l in range(l0, n_cond):
                        acc = u2t[l] + base
                        for a in range(k):
                            acc += ut[a, l] * w[a]
                        qm[l] = min(qm[l], acc)
            for jj in range(width):
                j = j_lo + jj
                cnt = l0s[j]
                st = stats[j]
                qm = qmin[jj]
                for l in range(l0s[j], n_cond):
                    if qm[l] > ar[l] - st:
                        cnt += 1
                for a in range(n_alpha):
                    rej[a, j] = 1 if cnt >= ms[a] else 0
    return kern


def _make_pair_count_kernel(k):
    @njit(cache=True, parallel=True, fastmath=True)
    def kern(pool, ar, gvecs, gn2, params, mode, stats, l0s, ms, rej):
        # pool: (n_cond, k) AR-ascending; gvecs: (block, k); gn2: (block,)
        # params: (block,) rank statistic (mode 0) or AR weight (mode 1)
        # psi = QLR(ar_l, lm_jl, r_j) or w_j*ar_l + (1-w_j)*lm_jl
        n_cond = pool.shape[0]
        block = gvecs.shape[0]
        n_alpha = ms.shape[0]
        for j in prange(block):
            st = stats[j]
            cnt = l0s[j]
            g2 = gn2[j]
            pr = params[j]
            for l in range(l0s[j], n_cond):
                dot = 0.0
                for a in range(k):
                    dot += pool[l, a] * gvecs[j, a]
                lm = dot * dot / g2
                if mode == 0:
                    x = ar[l] - pr
                    root = math.sqrt(x * x + 4.0 * lm * pr)
                    if x >= 0.0:
                        psi = 0.5 * (x + root)
                    else:
                        denom = root - x
                        psi = 2.0 * lm * pr / denom if denom > 0.0 else 0.0
                else:
                    psi = pr * ar[l] + (1.0 - pr) * lm
                if psi < st:
                    cnt += 1
            for a in range(n_alpha):
                rej[a, j] = 1 if cnt >= ms[a] else 0
    return kern


def clr_count_kernel(k):
    if k not in _CLR_KERNELS:
        _CLR_KERNELS[k] = _make_clr_count_kernel(k)
    return _CLR_KERNELS[k]


def pair_count_kernel(k):
    if k not in _PAIR_KERNELS:
        _PAIR_KERNELS[k] = _make_pair_count_kernel(k)
    return _PAIR_KERNELS[k]


def conditional_rejections_clr(maps: EngineMaps, pool_sorted, ar_pool, vec_r_mat,
                               stats, ms):
    """Rejection flags (n_alpha, n) for the conditional LR test.

    ``pool_sorted``/``ar_pool`` must be sorted ascending by AR.  Counts
    #{pool psi < stat} and compares with the order-statistic indices.
    """
    n = stats.shape[0]
    n_cond = ar_pool.shape[0]
    ms = np.asarray(ms, dtype=np.int64)
    rej = np.zeros((ms.shape[0], n), dtype=np.uint8)
    if maps.k == 1:
        counts = np.searchsorted(ar_pool, stats, side="left")
        for a, m in enumerate(ms):
            rej[a] = counts >= m
        return rej
    u_maps = np.ascontiguousarray(
        np.einsum("lb,tab->tal", pool_sorted, maps.pool_a, optimize=True)
    )
    u2 = np.ascontiguousarray(np.einsum("tal,tal->tl", u_maps, u_maps))
    v_maps = np.ascontiguousarray(
        np.einsum("jb,tab->jta", vec_r_mat @ maps.blocks._t_map.T, maps.pool_b,
                  optimize=True)
    )
    v2 = np.ascontiguousarray(np.einsum("jta,jta->jt", v_maps, v_maps))
    l0s = np.searchsorted(ar_pool, stats, side="left").astype(np.int64)
    kern = clr_count_kernel(maps.k)
    kern(u_maps, u2, ar_pool, v_maps, v2, stats, l0s, ms, rej)
    return rej


def conditional_rejections_pair(k, pool_sorted, ar_pool, gvecs, gn2, params,
                                mode, stats, ms):
    """Rejection flags for CQLR (mode 0) and CLC (mode 1) tests."""
    ms = np.asarray(ms, dtype=np.int64)
    n = stats.shape[0]
    rej = np.zeros((ms.shape[0], n), dtype=np.uint8)
    l0s = np.searchsorted(ar_pool, stats, side="left").astype(np.int64)
    kern = pair_count_kernel(k)
    kern(pool_sorted, ar_pool, gvecs, gn2, params, mode, stats, l0s, ms, rej)
    return rej
