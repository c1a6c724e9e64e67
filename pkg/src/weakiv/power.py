"""Monte-Carlo size and power curves with common random numbers.

For each test the outer draws come from streams keyed
(seed, test id, noise, chunk) and the conditional pools from
(seed, test id, cond, chunk): the same noise and pools are reused at
every point of the delta grid (common random numbers within a test,
fresh streams across tests), and chunk-keyed streams make every number
independent of scheduling, so repeated runs are byte-identical.

Rejection decisions for the conditional tests are computed by the rank
comparison in ``_engine``; statistics and conditional draws share one
direction grid.  The row at delta = 0 is the empirical size.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from ._engine import (
    ALL_TESTS,
    TEST_AR,
    TEST_CLC,
    TEST_CLR,
    TEST_CQLR1,
    TEST_CQLR2,
    TEST_IDS,
    TEST_LM,
    EngineMaps,
    conditional_rejections_pair,
    quantile_index,
)
from .conditional import _validate_alpha
from .distance import chi2_quantile
from .errors import InvalidInput
from .model import (
    ModelConfig,
    RotatedBlocks,
    build_blocks,
    make_design_point,
)

_CHUNK_OUTER = 2048
_DEGENERATE_GNORM2 = 1e-24


@dataclass(frozen=True)
class PowerRequest:
    """One power-curve job."""

    config: ModelConfig
    mu: np.ndarray
    delta_grid: tuple
    tests: tuple
    alpha: float
    n_outer: int = 10_000
    n_cond: int = 10_000
    seed: int = 0
    weight_fn: object = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        grid = tuple(float(d) for d in self.delta_grid)
        if len(grid) == 0:
            raise InvalidInput("delta_grid must be nonempty")
        if list(grid) != sorted(grid):
            raise InvalidInput("delta_grid must be sorted")
        object.__setattr__(self, "delta_grid", grid)
        tests = tuple(self.tests)
        for t in tests:
            if t not in ALL_TESTS:
                raise InvalidInput(f"unknown test {t!r}")
        object.__setattr__(self, "tests", tests)
        object.__setattr__(self, "alpha", _validate_alpha(self.alpha))
        if self.n_outer < 1000:
            raise InvalidInput("n_outer must be at least 1000")


@dataclass(frozen=True)
class PowerRow:
    test: str
    delta: float
    d: float
    power: float
    mc_se: float
    n_outer: int
    seed: int


@dataclass(frozen=True)
class PowerTable:
    rows: tuple

    CSV_HEADER = "test,delta,d,power,mc_se,n_outer,seed"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self.CSV_HEADER + "\n")
        for r in self.rows:
            buf.write(
                f"{r.test},{r.delta:.17g},{r.d:.17g},{r.power:.17g},"
                f"{r.mc_se:.17g},{r.n_outer},{r.seed}\n"
            )
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            [
                {
                    "test": r.test,
                    "delta": r.delta,
                    "d": r.d,
                    "power": r.power,
                    "mc_se": r.mc_se,
                    "n_outer": r.n_outer,
                    "seed": r.seed,
                }
                for r in self.rows
            ],
            indent=2,
        )

    def lookup(self, test, delta) -> PowerRow:
        for r in self.rows:
            if r.test == test and math.isclose(r.delta, delta):
                return r
        raise KeyError((test, delta))


def _mc_se(p, n):
    return math.sqrt(p * (1.0 - p) / n)


def simulate_rejection_rates(config: ModelConfig, mu, delta_grid, tests,
                             alphas, n_outer, n_cond, seed,
                             weight_fn=None, n_theta=256,
                             blocks: RotatedBlocks | None = None):
    """Rejection counts for every (test, delta, alpha) cell.

    Core engine shared by :func:`power_curve` and :func:`size_sweep`;
    accepts several alpha levels at once so они reuse one set of draws.
    Returns (counts, degenerate_counts) arrays shaped
    (n_tests, n_delta, n_alpha) and (n_tests, n_delta).
    """
    if blocks is None:
        blocks = build_blocks(config)
    k = config.k
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.shape[0] != k:
        raise InvalidInput(f"mu must have length {k}")
    alphas = [_validate_alpha(a) for a in alphas]
    ms = np.array([quantile_index(a, n_cond) for a in alphas], dtype=np.int64)
    ar_crits = np.array([chi2_quantile(1.0 - a, k) for a in alphas])
    lm_crits = np.array([chi2_quantile(1.0 - a, 1) for a in alphas])

    chol = np.linalg.cholesky(blocks.sigma0)
    back = np.kron(np.array([[1.0, 0.0], [config.beta0, 1.0]]).T, np.eye(k))
    deltas = [float(d) for d in delta_grid]
    means = [np.concatenate([d * mu, mu]) for d in deltas]

    needs_maps = TEST_CLR in tests
    maps = EngineMaps(config, blocks, n_theta) if needs_maps else None
    needs_pool = any(t in tests for t in (TEST_CLR, TEST_CQLR1, TEST_CQLR2, TEST_CLC))

    counts = np.zeros((len(tests), len(deltas), len(alphas)), dtype=np.int64)
    degen = np.zeros((len(tests), len(deltas)), dtype=np.int64)

    n_chunks = (n_outer + _CHUNK_OUTER - 1) // _CHUNK_OUTER
    for ti, test in enumerate(tests):
        tid = TEST_IDS[test]
        for c in range(n_chunks):
            lo = c * _CHUNK_OUTER
            m_chunk = min(_CHUNK_OUTER, n_outer - lo)
            noise = _rng.substream(seed, tid, _rng.NOISE_STREAM, c).standard_normal(
                (m_chunk, 2 * k)
            ) @ chol.T
            if needs_pool and test != TEST_AR and test != TEST_LM:
                pool = _rng.substream(seed, tid, _rng.COND_STREAM, c).standard_normal(
                    (n_cond, k)
                )
                ar_pool = np.einsum("ij,ij->i", pool, pool)
                order = np.argsort(ar_pool, kind="stable")
                pool = np.ascontiguousarray(pool[order])
                ar_pool = np.ascontiguousarray(ar_pool[order])
                pool_u = pool_u2 = None  # built lazily per chunk for CLR
            for di, delta in enumerate(deltas):
                r0 = means[di] + noise
                s_mat = r0[:, :k] @ blocks._sigma11_isqrt.T
                ar_stats = np.einsum("ij,ij->i", s_mat, s_mat)

                if test == TEST_AR:
                    for a in range(len(alphas)):
                        counts[ti, di, a] += int(np.sum(ar_stats > ar_crits[a]))
                    continue

                vec_r = r0 @ back.T
                t_mat = vec_r @ blocks._t_map.T
                g_mat = t_mat @ blocks._lm_weight.T
                gn2 = np.einsum("ij,ij->i", g_mat, g_mat)
                ok = gn2 > _DEGENERATE_GNORM2
                degen[ti, di] += int(np.sum(~ok))
                sg = np.einsum("ij,ij->i", s_mat, g_mat)
                with np.errstate(divide="ignore", invalid="ignore"):
                    lm_stats = np.where(ok, sg * sg / gn2, 0.0)
                lm_stats = np.minimum(lm_stats, ar_stats)

                if test == TEST_LM:
                    for a in range(len(alphas)):
                        counts[ti, di, a] += int(np.sum(lm_stats[ok] > lm_crits[a]))
                    continue

                if test == TEST_CLR:
                    stats = maps.lr_values(vec_r)
                    if pool_u is None and k > 1:
                        pool_u = np.ascontiguousarray(
                            np.einsum("lb,tab->tal", pool, maps.pool_a, optimize=True)
                        )
                        pool_u2 = np.ascontiguousarray(
                            np.einsum("tal,tal->tl", pool_u, pool_u)
                        )
                    rej = _clr_rejections(maps, pool, ar_pool, pool_u, pool_u2,
                                          t_mat, stats, ms)
                    counts[ti, di] += rej.sum(axis=1, dtype=np.int64)
                    continue

                if test in (TEST_CQLR1, TEST_CQLR2):
                    tt2 = np.einsum("ij,ij->i", t_mat, t_mat)
                    r_stats = tt2 if test == TEST_CQLR1 else gn2
                    x = ar_stats - r_stats
                    root = np.sqrt(x * x + 4.0 * lm_stats * r_stats)
                    stats = np.where(x >= 0.0, 0.5 * (x + root),
                                     np.where(root - x > 0.0,
                                              2.0 * lm_stats * r_stats
                                              / np.where(root - x > 0.0, root - x, 1.0),
                                              0.0))
                    rej = conditional_rejections_pair(
                        k, pool, ar_pool, np.ascontiguousarray(g_mat),
                        gn2, np.ascontiguousarray(r_stats), 0, stats, ms)
                    rej[:, ~ok] = 0
                    counts[ti, di] += rej.sum(axis=1, dtype=np.int64)
                    continue

                # CLC
                if weight_fn is None:
                    raise InvalidInput("CLC requires a weight function")
                w = np.array([float(weight_fn(t)) for t in t_mat])
                if np.any((w < 0.0) | (w > 1.0)):
                    raise InvalidInput("weight function left [0, 1]")
                stats = w * ar_stats + (1.0 - w) * lm_stats
                rej = conditional_rejections_pair(
                    k, pool, ar_pool, np.ascontiguousarray(g_mat),
                    gn2, np.ascontiguousarray(w), 1, stats, ms)
                rej[:, ~ok] = 0
                counts[ti, di] += rej.sum(axis=1, dtype=np.int64)
    return counts, degen


def _clr_rejections(maps, pool_sorted, ar_pool, pool_u, pool_u2, t_mat, stats, ms):
    """CLR rejection flags, reusing precomputed pool maps when available."""
    n = stats.shape[0]
    rej = np.zeros((ms.shape[0], n), dtype=np.uint8)
    if maps.k == 1:
        cnt = np.searchsorted(ar_pool, stats, side="left")
        for a, m in enumerate(ms):
            rej[a] = cnt >= m
        return rej
    from ._engine import clr_count_kernel

    v_maps = np.ascontiguousarray(
        np.einsum("jb,tab->jta", t_mat, maps.pool_b, optimize=True)
    )
    v2 = np.ascontiguousarray(np.einsum("jta,jta->jt", v_maps, v_maps))
    l0s = np.searchsorted(ar_pool, stats, side="left").astype(np.int64)
    kern = clr_count_kernel(maps.k)
    kern(pool_u, pool_u2, ar_pool, v_maps, v2, stats, l0s, ms, rej)
    return rej


def power_curve(req: PowerRequest) -> PowerTable:
    """Simulate power for every (test, delta) pair of the request.

    A row records NaN power only if every replication was degenerate,
    which does not occur for SPD models.
    """
    blocks = build_blocks(req.config)
    counts, degen = simulate_rejection_rates(
        req.config, req.mu, req.delta_grid, req.tests, [req.alpha],
        req.n_outer, req.n_cond, req.seed, weight_fn=req.weight_fn,
        blocks=blocks,
    )
    rows = []
    for ti, test in enumerate(req.tests):
        for di, delta in enumerate(req.delta_grid):
            point = make_design_point(req.mu, delta, blocks)
            if degen[ti, di] >= req.n_outer:
                p = float("nan")
                se = float("nan")
            else:
                p = counts[ti, di, 0] / req.n_outer
                se = _mc_se(p, req.n_outer)
            rows.append(
                PowerRow(test=test, delta=delta, d=point.d, power=p,
                         mc_se=se, n_outer=req.n_outer, seed=req.seed)
            )
    return PowerTable(rows=tuple(rows))


def size_sweep(config: ModelConfig, mu_list, tests, alpha, n_outer,
               n_cond=10_000, seed=0, weight_fn=None) -> PowerTable:
    """Null rejection rates over a grid of nuisance means.

    Specializes :func:`power_curve` to delta = 0 for each mu; rows carry
    the per-mu derived seed in the seed column so entries remain
    distinguishable under the fixed CSV header.
    """
    rows = []
    for i, mu in enumerate(mu_list):
        sub_seed = (int(seed) + 1_000_003 * i) % 2**63
        table = power_curve(
            PowerRequest(
                config=config, mu=mu, delta_grid=(0.0,), tests=tuple(tests),
                alpha=alpha, n_outer=n_outer, n_cond=n_cond, seed=sub_seed,
                weight_fn=weight_fn,
            )
        )
        rows.extend(table.rows)
    return PowerTable(rows=tuple(rows))
