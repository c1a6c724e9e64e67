"""Test-statistic kernels: AR, LM, rank statistics, QLR, Q(beta), LR.

All functions are stateless and pure.  The LR statistic requires a
one-dimensional minimization with no closed form for k > 2; it is done
over the compactified direction b(theta) = (cos theta, -sin theta),
theta in [0, pi), with a coarse grid followed by golden-section
refinement.  Q is invariant to rescaling of b, so the direction
parametrization loses nothing, and theta = pi/2 carries the beta -> +/-inf
endpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import spd_eigh
from .errors import DegenerateDirection, DimensionMismatch, InvalidInput
from .model import ModelConfig, RotatedBlocks, StatPair

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_THETA_TOL = 1e-10
_ENDPOINT_TOL = 1e-9


def ar_stat(s) -> float:
    """Anderson-Rubin statistic s's."""
    s = np.asarray(s, dtype=float).reshape(-1)
    return float(s @ s)


def lm_stats(pair: StatPair, blocks: RotatedBlocks):
    """One-sided and two-sided LM statistics.

    Projects S on g = sigma11^{-1/2} (sigma^22)^{-1/2} T.  Raises
    DegenerateDirection when ||g|| <= 1e-12; the caller decides policy
    for that probability-zero event.

    Returns (lm1, lm) with lm = lm1**2.
    """
    g = blocks._lm_weight @ pair.t
    gnorm = float(np.sqrt(g @ g))
    if gnorm <= 1e-12:
        raise DegenerateDirection("projection direction has vanishing norm")
    lm1 = float(pair.s @ g) / gnorm
    return lm1, lm1 * lm1


def rank_stats(t, blocks: RotatedBlocks):
    """Rank statistics r1 = t't and r2 = ||sigma11^{-1/2}(sigma^22)^{-1/2} t||^2."""
    t = np.asarray(t, dtype=float).reshape(-1)
    g = blocks._lm_weight @ t
    return float(t @ t), float(g @ g)


def qlr_stat(ar: float, lm: float, r: float) -> float:
    """Quasi likelihood ratio combination of AR, LM and a rank statistic.

    Uses the cancellation-free branch for r > ar so the large-r limit
    (QLR -> LM) is accurate.
    """
    if lm < -1e-12 or r < -1e-12:
        raise InvalidInput("lm and r must be nonnegative")
    if lm > ar + 1e-9:
        raise InvalidInput(f"lm={lm!r} exceeds ar={ar!r}")
    lm = min(max(lm, 0.0), max(ar, 0.0))
    r = max(r, 0.0)
    x = ar - r
    root = math.sqrt(x * x + 4.0 * lm * r)
    if x >= 0.0:
        val = 0.5 * (x + root)
    else:
        denom = root - x
        val = 2.0 * lm * r / denom if denom > 0.0 else 0.0
    return max(val, 0.0)


def clc_stat(ar: float, lm: float, w: float) -> float:
    """Linear combination w*AR + (1-w)*LM, w in [0, 1]."""
    from .errors import InvalidWeight

    if not 0.0 <= w <= 1.0:
        raise InvalidWeight(f"weight must lie in [0, 1], got {w!r}")
    return w * ar + (1.0 - w) * lm


def _direction_quadratic(vec_r, sigma, k, b):
    """Q for direction b: y' W(b)^{-1} y with y = (b' kron I) vec(r)."""
    nb = math.hypot(b[0], b[1])
    if nb == 0.0:
        raise InvalidInput("direction b must be nonzero")
    c, s = b[0] / nb, b[1] / nb
    y = c * vec_r[:k] + s * vec_r[k:]
    w = (
        c * c * sigma[:k, :k]
        + c * s * (sigma[:k, k:] + sigma[k:, :k])
        + s * s * sigma[k:, k:]
    )
    return float(y @ np.linalg.solve(w, y))


def q_direction(vec_r, config: ModelConfig, b) -> float:
    """Q evaluated at an explicit 2-vector direction b (scale irrelevant)."""
    vec_r = np.asarray(vec_r, dtype=float).reshape(-1)
    if vec_r.shape[0] != 2 * config.k:
        raise DimensionMismatch(f"vec_r must have length {2*config.k}")
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape[0] != 2:
        raise DimensionMismatch("b must be a 2-vector")
    return _direction_quadratic(vec_r, config.sigma, config.k, b)


def q_beta(vec_r, config: ModelConfig, beta) -> float:
    """Q(beta) with b = (1, -beta); beta = +/-inf selects b = (0, -1)."""
    if math.isinf(beta):
        return q_direction(vec_r, config, (0.0, -1.0))
    return q_direction(vec_r, config, (1.0, -float(beta)))


def _q_of_theta(vec_r, sigma, k, theta):
    return _direction_quadratic(
        vec_r, sigma, k, (math.cos(theta), -math.sin(theta))
    )


def minimize_q(vec_r, config: ModelConfig, n_coarse: int = 256):
    """Minimize Q over beta (including the infinite endpoint).

    Coarse grid of ``n_coarse`` directions on [0, pi) followed by
    golden-section refinement around the best three local minima, to
    1e-10 in theta.  At k = 1 the minimum is exactly zero at the
    direction orthogonal to vec(r) and is returned in closed form.

    Returns (q_min, beta_min); beta_min is +inf when the infinite-beta
    endpoint attains the minimum, and ties resolve to the smallest theta.
    """
    vec_r = np.asarray(vec_r, dtype=float).reshape(-1)
    k = config.k
    if vec_r.shape[0] != 2 * k:
        raise DimensionMismatch(f"vec_r must have length {2*k}")
    sigma = config.sigma
    spd_eigh(sigma, "sigma")

    if k == 1:
        r1, r2 = vec_r[0], vec_r[1]
        if r1 == 0.0 and r2 == 0.0:
            return 0.0, 0.0
        if r2 == 0.0:
            return 0.0, math.inf
        return 0.0, r1 / r2

    thetas = np.arange(n_coarse) * (math.pi / n_coarse)
    vals = np.array([_q_of_theta(vec_r, sigma, k, th) for th in thetas])

    # local minima on the cyclic grid (Q has period pi in theta)
    left = np.roll(vals, 1)
    right = np.roll(vals, -1)
    is_min = (vals <= left) & (vals <= right)
    idx = np.nonzero(is_min)[0]
    if idx.size == 0:
        idx = np.array([int(np.argmin(vals))])
    idx = idx[np.argsort(vals[idx], kind="stable")][:3]

    h = math.pi / n_coarse
    candidates = []
    for i in idx:
        a, b = thetas[i] - h, thetas[i] + h
        x1 = b - _GOLDEN * (b - a)
        x2 = a + _GOLDEN * (b - a)
        f1 = _q_of_theta(vec_r, sigma, k, x1)
        f2 = _q_of_theta(vec_r, sigma, k, x2)
        while b - a > _THETA_TOL:
            if f1 <= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - _GOLDEN * (b - a)
                f1 = _q_of_theta(vec_r, sigma, k, x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + _GOLDEN * (b - a)
                f2 = _q_of_theta(vec_r, sigma, k, x2)
        theta_star = 0.5 * (a + b) % math.pi
        candidates.append((_q_of_theta(vec_r, sigma, k, theta_star), theta_star))

    # candidate endpoints: the null direction and beta -> +/- inf
    for th in (math.atan(config.beta0) % math.pi, math.pi / 2.0):
        candidates.append((_q_of_theta(vec_r, sigma, k, th), th))

    best_q = min(q for q, _ in candidates)
    # ties resolve to the smallest theta, grid points included
    tie = best_q + 1e-15 * max(1.0, abs(best_q))
    tied = [th for q, th in candidates if q <= tie]
    tied.extend(thetas[vals <= tie])
    best_theta = min(tied)

    best_q = max(best_q, 0.0)
    if abs(best_theta - math.pi / 2.0) <= _ENDPOINT_TOL:
        return best_q, math.inf
    return best_q, math.tan(best_theta)


def lr_stat(vec_r, config: ModelConfig) -> float:
    """Likelihood ratio statistic Q(beta0) - inf_beta Q(beta), clamped at 0."""
    q0 = q_beta(vec_r, config, config.beta0)
    q_min, _ = minimize_q(vec_r, config)
    return max(q0 - q_min, 0.0)


@dataclass(frozen=True)
class StatBundle:
    """All statistic values for one observation."""

    ar: float
    lm1: float
    lm: float
    r1: float
    r2: float
    qlr1: float
    qlr2: float
    lr: float
    beta_min: float


def compute_bundle(vec_r, config: ModelConfig, blocks: RotatedBlocks) -> StatBundle:
    """Evaluate every statistic at one vec(R).

    Raises DegenerateDirection when T is numerically zero (the LM-based
    entries are undefined there); test procedures map that event to
    non-rejection with a flag.
    """
    from .model import compute_st

    pair = compute_st(vec_r, config, blocks)
    ar = ar_stat(pair.s)
    lm1, lm = lm_stats(pair, blocks)
    r1, r2 = rank_stats(pair.t, blocks)
    q_min, beta_min = minimize_q(vec_r, config)
    lr = max(q_beta(vec_r, config, config.beta0) - q_min, 0.0)
    return StatBundle(
        ar=ar,
        lm1=lm1,
        lm=lm,
        r1=r1,
        r2=r2,
        qlr1=qlr_stat(ar, lm, r1),
        qlr2=qlr_stat(ar, lm, r2),
        lr=lr,
        beta_min=beta_min,
    )
