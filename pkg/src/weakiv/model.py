"""Gaussian reduced-form limit experiment.

The observation is a k x 2 matrix R whose vectorization (first column,
the outcome side, stacked above the second, the first-stage side) is
Gaussian with mean vec(mu a*') and known 2k x 2k covariance sigma, where
a* = (beta*, 1)'.  Fixing the null value beta0 defines

    a0 = (beta0, 1)',   b0 = (1, -beta0)',   B0 = [[1, 0], [-beta0, 1]],

and the rotated observation R0 = R B0 with covariance

    sigma0 = (B0' kron I_k) sigma (B0 kron I_k).

The pivotal statistic S and the sufficient statistic T are linear in
vec(R); both carry identity covariance and are independent under the
null.  All matrix square roots are symmetric (eigendecomposition based),
which makes S and T invariant to coordinate reordering conventions.

Every value in this module is immutable after construction and safe to
share across threads; sampling is reentrant through counter-keyed
streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from ._linalg import check_symmetric, spd_eigh, spd_inv, sym_inv_sqrt, sym_sqrt
from .errors import DimensionMismatch, InvalidInput, SingularMap

# Condition-number ceiling for the stacked (S, T) reconstruction map.
_MAX_ST_CONDITION = 1e12


@dataclass(frozen=True)
class ModelConfig:
    """Model primitives: instrument count, null value, and covariance.

    Parameters
    ----------
    k : int
        Number of instruments, k >= 1.
    beta0 : float
        Null value of the structural coefficient.
    sigma : ndarray
        SPD covariance of vec(R), shape (2k, 2k), row-major, first block
        of coordinates is the outcome-side column of R.
    """

    k: int
    beta0: float
    sigma: np.ndarray

    def __post_init__(self):
        k = self.k
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise InvalidInput(f"k must be a positive integer, got {k!r}")
        object.__setattr__(self, "k", int(k))
        beta0 = float(self.beta0)
        if not np.isfinite(beta0):
            raise InvalidInput("beta0 must be finite")
        object.__setattr__(self, "beta0", beta0)
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (2 * k, 2 * k):
            raise DimensionMismatch(
                f"sigma must be {2*k}x{2*k} for k={k}, got {sigma.shape}"
            )
        sigma = check_symmetric(sigma, "sigma")
        spd_eigh(sigma, "sigma")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)

    @property
    def a0(self):
        return np.array([self.beta0, 1.0])

    @property
    def b0(self):
        return np.array([1.0, -self.beta0])

    @property
    def b0_mat(self):
        return np.array([[1.0, 0.0], [-self.beta0, 1.0]])


@dataclass(frozen=True)
class RotatedBlocks:
    """Blocks of the rotated covariance sigma0 and of its inverse.

    ``sigma_up11``, ``sigma_up21``, ``sigma_up22`` are the k x k blocks of
    sigma0^{-1}; ``sigma_up22`` equals the inverse Schur complement
    (sigma22 - sigma21 sigma11^{-1} sigma12)^{-1}.  Derived operator
    fields (prefixed with an underscore) cache the linear maps used by
    the statistic kernels.
    """

    sigma0: np.ndarray
    sigma11: np.ndarray
    sigma12: np.ndarray
    sigma21: np.ndarray
    sigma22: np.ndarray
    sigma_up11: np.ndarray
    sigma_up21: np.ndarray
    sigma_up22: np.ndarray
    # cached operators
    _sigma11_inv: np.ndarray = field(repr=False)
    _sigma11_isqrt: np.ndarray = field(repr=False)
    _up22_sqrt: np.ndarray = field(repr=False)
    _up22_isqrt: np.ndarray = field(repr=False)
    _lm_weight: np.ndarray = field(repr=False)
    _s_map: np.ndarray = field(repr=False)
    _t_map: np.ndarray = field(repr=False)
    _st_inv: np.ndarray = field(repr=False)
    _st_cond: float = field(repr=False)

    @property
    def k(self):
        return self.sigma11.shape[0]


def build_blocks(config: ModelConfig) -> RotatedBlocks:
    """Rotate the covariance by B0 and extract all derived blocks.

    With beta0 = 0 the rotation is the identity and sigma0 equals sigma
    exactly.
    """
    k = config.k
    sigma = config.sigma
    eye = np.eye(k)
    rot = np.kron(config.b0_mat.T, eye)  # vec(R B0) = (B0' kron I) vec(R)
    sigma0 = rot @ sigma @ rot.T
    sigma0 = 0.5 * (sigma0 + sigma0.T)
    spd_eigh(sigma0, "sigma0")

    s11 = sigma0[:k, :k]
    s12 = sigma0[:k, k:]
    s21 = sigma0[k:, :k]
    s22 = sigma0[k:, k:]
    sigma0_inv = spd_inv(sigma0, "sigma0")
    up11 = sigma0_inv[:k, :k]
    up21 = sigma0_inv[k:, :k]
    up22 = 0.5 * (sigma0_inv[k:, k:] + sigma0_inv[k:, k:].T)

    sigma11_inv = spd_inv(s11, "sigma11")
    sigma11_isqrt = sym_inv_sqrt(s11, "sigma11")
    up22_sqrt = sym_sqrt(up22, "sigma^22")
    up22_isqrt = sym_inv_sqrt(up22, "sigma^22")
    lm_weight = sigma11_isqrt @ up22_isqrt

    sigma_inv = spd_inv(sigma, "sigma")
    pb = np.kron(config.b0.reshape(1, 2), eye)  # (b0' kron I)
    pa = np.kron(config.a0.reshape(1, 2), eye)  # (a0' kron I)
    s_map = sigma11_isqrt @ pb
    t_map = up22_isqrt @ pa @ sigma_inv
    stacked = np.vstack([s_map, t_map])
    st_cond = float(np.linalg.cond(stacked))
    st_inv = np.linalg.inv(stacked) if st_cond < _MAX_ST_CONDITION else None

    def ro(a):
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        return a

    return RotatedBlocks(
        sigma0=ro(sigma0),
        sigma11=ro(s11),
        sigma12=ro(s12),
        sigma21=ro(s21),
        sigma22=ro(s22),
        sigma_up11=ro(up11),
        sigma_up21=ro(up21),
        sigma_up22=ro(up22),
        _sigma11_inv=ro(sigma11_inv),
        _sigma11_isqrt=ro(sigma11_isqrt),
        _up22_sqrt=ro(up22_sqrt),
        _up22_isqrt=ro(up22_isqrt),
        _lm_weight=ro(lm_weight),
        _s_map=ro(s_map),
        _t_map=ro(t_map),
        _st_inv=ro(st_inv) if st_inv is not None else None,
        _st_cond=st_cond,
    )


@dataclass(frozen=True)
class StatPair:
    """The pivotal/sufficient pair (S, T), each a k-vector."""

    s: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).reshape(-1)
        t = np.asarray(self.t, dtype=float).reshape(-1)
        if s.shape != t.shape:
            raise DimensionMismatch("s and t must have equal length")
        s.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)


@dataclass(frozen=True)
class DesignPoint:
    """Alternative (mu, delta) with the derived AR noncentrality d."""

    mu: np.ndarray
    delta: float
    d: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "d", float(self.d))


def make_design_point(mu, delta, blocks: RotatedBlocks) -> DesignPoint:
    """Build a DesignPoint, deriving d = delta^2 mu' sigma11^{-1} mu."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.shape[0] != blocks.k:
        raise DimensionMismatch(f"mu must have length {blocks.k}")
    d = float(delta) ** 2 * float(mu @ blocks._sigma11_inv @ mu)
    return DesignPoint(mu=mu, delta=float(delta), d=d)


def compute_st(vec_r, config: ModelConfig, blocks: RotatedBlocks) -> StatPair:
    """Map vec(R) to the (S, T) pair.

    S whitens the b0-rotation of R by the symmetric inverse root of
    (b0' kron I) sigma (b0 kron I); T whitens the a0-projection of
    sigma^{-1} vec(R) analogously.
    """
    vec_r = np.asarray(vec_r, dtype=float).reshape(-1)
    if vec_r.shape[0] != 2 * config.k:
        raise DimensionMismatch(f"vec_r must have length {2*config.k}")
    return StatPair(s=blocks._s_map @ vec_r, t=blocks._t_map @ vec_r)


def invert_st(pair: StatPair, config: ModelConfig, blocks: RotatedBlocks):
    """Reconstruct vec(R) from (S, T); inverse of :func:`compute_st`.

    Round-trips to 1e-8 absolute error.  Raises SingularMap when the
    stacked linear map has condition number at or above 1e12.
    """
    if blocks._st_inv is None:
        raise SingularMap(
            f"(S,T) map condition number {blocks._st_cond:.3e} exceeds 1e12"
        )
    st = np.concatenate([pair.s, pair.t])
    if st.shape[0] != 2 * config.k:
        raise DimensionMismatch("pair dimension inconsistent with config")
    return blocks._st_inv @ st


def rotated_mean(point: DesignPoint):
    """Mean of vec(R0) at the design point: (delta*mu, mu) stacked."""
    return np.concatenate([point.delta * point.mu, point.mu])


def sample_vec_r(point: DesignPoint, config: ModelConfig, seed, n_draws,
                 blocks: RotatedBlocks | None = None):
    """Draw vec(R) observations at a design point.

    Sampling happens in the rotated frame, vec(R0) ~ N((delta*mu, mu),
    sigma0), then maps back through the inverse rotation.  Draws are
    generated in fixed-size counter-keyed chunks, so the output is
    bitwise identical for a given seed regardless of scheduling.

    Returns an (n_draws, 2k) array whose rows are vec(R).
    """
    if n_draws < 1:
        raise InvalidInput("n_draws must be >= 1")
    if blocks is None:
        blocks = build_blocks(config)
    k = config.k
    if point.mu.shape[0] != k:
        raise DimensionMismatch(f"mu must have length {k}")
    chol = np.linalg.cholesky(blocks.sigma0)
    mean0 = rotated_mean(point)
    z = _rng.chunked_standard_normal(seed, (_rng.SAMPLE_STREAM,), n_draws, 2 * k)
    r0 = mean0 + z @ chol.T
    # vec(R) = ((B0^{-1})' kron I) vec(R0)
    b0_inv = np.array([[1.0, 0.0], [config.beta0, 1.0]])
    back = np.kron(b0_inv.T, np.eye(k))
    return r0 @ back.T
