"""Conditional critical values and complete test procedures.

The conditional critical value of a statistic given T is the empirical
upper quantile, at order-statistic index ceil((1-alpha)*n), of the
statistic evaluated on draws S* ~ N(0, I_k) recombined with the observed
t.  That conditional law is exact under the null: S is pivotal and
independent of T for every value of the nuisance mean, so the supremum
in the critical-value definition is degenerate and a single resampling
law suffices.

Degenerate T (vanishing LM projection direction) is a probability-zero
event; statistic kernels raise on it, and the procedures here map it to
a non-rejection flagged on the outcome, with a log record.
"""

from __future__ import annotations

import logging
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
    TEST_LM,
    EngineMaps,
    quantile_index,
)
from .distance import chi2_quantile
from .errors import DegenerateDirection, InsufficientDraws, InvalidInput, InvalidWeight
from .model import ModelConfig, RotatedBlocks, build_blocks, compute_st
from .statistics import ar_stat, clc_stat, lm_stats, qlr_stat, rank_stats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class McOptions:
    """Monte-Carlo options for conditional test procedures."""

    n_cond: int = 10_000
    seed: int = 0
    weight_fn: object = None  # t -> weight in [0, 1], required for CLC
    n_theta: int = 256


@dataclass(frozen=True)
class TestOutcome:
    """Decision record for one test on one observation."""

    test_name: str
    statistic: float
    critical_value: float
    reject: bool
    alpha: float
    n_cond_draws: int
    seed: int
    degenerate: bool = False


def _validate_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha <= 0.5:
        raise InvalidInput(f"alpha must lie in (0, 0.5], got {alpha!r}")
    return alpha


def _pool_draws(seed, n_draws, k):
    return _rng.chunked_standard_normal(seed, (_rng.COND_STREAM,), n_draws, k)


def conditional_critical_value(stat_kind, t, config: ModelConfig,
                               blocks: RotatedBlocks, alpha, n_draws, seed,
                               weight=None, n_theta: int = 256) -> float:
    """Empirical conditional critical value of a statistic given T = t.

    Draws ``n_draws`` pivotal vectors S* ~ N(0, I_k), reconstructs
    vec(R*) from (S*, t), evaluates ``stat_kind`` on each draw, and
    returns the order statistic at index ceil((1-alpha)*n_draws).
    Deterministic given ``seed``.

    ``stat_kind`` is one of AR, LM, CLR, CQLR1, CQLR2, CLC; CLC requires
    ``weight`` in [0, 1].
    """
    alpha = _validate_alpha(alpha)
    if n_draws < 1000:
        raise InvalidInput("n_draws must be at least 1000")
    m = quantile_index(alpha, n_draws)
    if m > n_draws:
        raise InsufficientDraws(
            f"quantile index {m} exceeds n_draws={n_draws}"
        )
    t = np.asarray(t, dtype=float).reshape(-1)
    k = config.k
    pool = _pool_draws(seed, n_draws, k)
    ar_pool = np.einsum("ij,ij->i", pool, pool)

    if stat_kind == TEST_AR:
        psi = ar_pool
    elif stat_kind == TEST_LM:
        g = blocks._lm_weight @ t
        gn2 = float(g @ g)
        if gn2 <= 1e-24:
            raise DegenerateDirection("projection direction has vanishing norm")
        psi = (pool @ g) ** 2 / gn2
    elif stat_kind == TEST_CLR:
        maps = EngineMaps(config, blocks, n_theta)
        psi = maps.pool_psi_clr(pool, t)
    elif stat_kind in (TEST_CQLR1, TEST_CQLR2):
        g = blocks._lm_weight @ t
        gn2 = float(g @ g)
        if gn2 <= 1e-24:
            raise DegenerateDirection("projection direction has vanishing norm")
        lm_pool = (pool @ g) ** 2 / gn2
        r1, r2 = rank_stats(t, blocks)
        r = r1 if stat_kind == TEST_CQLR1 else r2
        psi = np.array([qlr_stat(a, min(l, a), r) for a, l in zip(ar_pool, lm_pool)])
    elif stat_kind == TEST_CLC:
        if weight is None:
            raise InvalidInput("CLC requires a weight")
        if not 0.0 <= weight <= 1.0:
            raise InvalidWeight(f"weight must lie in [0, 1], got {weight!r}")
        g = blocks._lm_weight @ t
        gn2 = float(g @ g)
        if gn2 <= 1e-24:
            raise DegenerateDirection("projection direction has vanishing norm")
        lm_pool = (pool @ g) ** 2 / gn2
        psi = weight * ar_pool + (1.0 - weight) * lm_pool
    else:
        raise InvalidInput(f"unknown statistic kind {stat_kind!r}")

    return float(np.partition(psi, m - 1)[m - 1])


def run_test(test_name, vec_r, config: ModelConfig, alpha,
             options: McOptions | None = None,
             blocks: RotatedBlocks | None = None) -> TestOutcome:
    """Run one complete test procedure on one observation.

    AR and LM compare against exact chi-square quantiles; CLR, CQLR1,
    CQLR2 and CLC against conditional critical values.  Identical seeds
    give identical outcomes.  The CLR statistic here is evaluated on the
    same direction grid used for its conditional draws, which keeps the
    comparison exchangeable; the standalone ``lr_stat`` refines further.
    """
    if test_name not in ALL_TESTS:
        raise InvalidInput(f"unknown test {test_name!r}")
    alpha = _validate_alpha(alpha)
    if options is None:
        options = McOptions()
    if blocks is None:
        blocks = build_blocks(config)
    vec_r = np.asarray(vec_r, dtype=float).reshape(-1)
    pair = compute_st(vec_r, config, blocks)
    ar = ar_stat(pair.s)
    k = config.k

    def outcome(stat, crit, degenerate=False):
        if degenerate:
            crit = float("inf")
        return TestOutcome(
            test_name=test_name,
            statistic=float(stat),
            critical_value=float(crit),
            reject=bool(stat > crit),
            alpha=alpha,
            n_cond_draws=options.n_cond,
            seed=options.seed,
            degenerate=degenerate,
        )

    if test_name == TEST_AR:
        return outcome(ar, chi2_quantile(1.0 - alpha, k))

    if test_name == TEST_LM:
        try:
            _, lm = lm_stats(pair, blocks)
        except DegenerateDirection:
            logger.warning("degenerate T: LM undefined, mapped to non-rejection")
            return outcome(0.0, 0.0, degenerate=True)
        return outcome(lm, chi2_quantile(1.0 - alpha, 1))

    if test_name == TEST_CLR:
        maps = EngineMaps(config, blocks, options.n_theta)
        stat = float(maps.lr_values(vec_r[None, :])[0])
        crit = conditional_critical_value(
            TEST_CLR, pair.t, config, blocks, alpha, options.n_cond,
            options.seed, n_theta=options.n_theta,
        )
        return outcome(stat, crit)

    # LM-based conditional combinations
    try:
        _, lm = lm_stats(pair, blocks)
    except DegenerateDirection:
        logger.warning(
            "degenerate T: %s undefined, mapped to non-rejection", test_name
        )
        return outcome(0.0, 0.0, degenerate=True)
    r1, r2 = rank_stats(pair.t, blocks)

    if test_name in (TEST_CQLR1, TEST_CQLR2):
        r = r1 if test_name == TEST_CQLR1 else r2
        stat = qlr_stat(ar, min(lm, ar), r)
        crit = conditional_critical_value(
            test_name, pair.t, config, blocks, alpha, options.n_cond,
            options.seed,
        )
        return outcome(stat, crit)

    # CLC
    if options.weight_fn is None:
        raise InvalidInput("CLC requires McOptions.weight_fn")
    w = float(options.weight_fn(pair.t))
    stat = clc_stat(ar, min(lm, ar), w)
    crit = conditional_critical_value(
        TEST_CLC, pair.t, config, blocks, alpha, options.n_cond,
        options.seed, weight=w,
    )
    return outcome(stat, crit)
