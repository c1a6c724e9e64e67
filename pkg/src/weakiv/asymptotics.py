"""Closed-form drift and variance of the one-sided LM statistic.

Two regimes: strong instruments with local alternatives (drift grows in
the local distance times instrument strength) and strong instruments
with a fixed structural distance delta, where the drift

    c(delta, mu) = (delta mu'S11i mu - delta^2 mu'S11i S21 S11i mu)
                   / sqrt(mu'(I - delta S11i S12) S11i (I - delta S21 S11i) mu)

need not grow in |delta|.  When mu'S11i S21 S11i mu = 0 (the
impossibility restriction), the drift stays bounded and converges to the
finite ceiling ``lm_id_limit``; the limit scales linearly under
mu -> eta*mu, so it can be made arbitrarily small while keeping the
restriction.

The finite-n bridge used by simulation checks is mu = sqrt(n) D^{1/2} pi;
the fixed-alternative variance depends on pi only through the direction
of D^{1/2} pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import check_symmetric, spd_eigh, sym_sqrt
from .errors import (
    DegenerateDenominator,
    DegenerateGamma,
    DimensionMismatch,
    InvalidInput,
)
from .model import RotatedBlocks

_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class AsymptoticInputs:
    """First stage pi, instrument second moment D, and drift parameters.

    ``mu`` stores the standardized first stage under the scale convention
    mu = D^{1/2} pi (multiply by sqrt(n) for the finite-n bridge).
    """

    pi: np.ndarray
    d_mat: np.ndarray
    h_delta: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float).reshape(-1)
        if not np.any(pi != 0.0):
            raise InvalidInput("pi must be a nonzero vector")
        d_mat = check_symmetric(np.asarray(self.d_mat, dtype=float), "d_mat")
        if d_mat.shape != (pi.shape[0], pi.shape[0]):
            raise DimensionMismatch("d_mat shape inconsistent with pi")
        spd_eigh(d_mat, "d_mat")
        pi.setflags(write=False)
        d_mat.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "d_mat", d_mat)
        object.__setattr__(self, "h_delta", float(self.h_delta))
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def mu(self):
        return sym_sqrt(self.d_mat, "d_mat") @ self.pi


def lm_la_drift(inputs: AsymptoticInputs, blocks: RotatedBlocks) -> float:
    """Local-alternative drift h_delta * (pi'D^{1/2} S11^{-1} D^{1/2} pi)^{1/2}."""
    v = inputs.mu
    return inputs.h_delta * math.sqrt(float(v @ blocks._sigma11_inv @ v))


def lm_fa_drift(delta, mu, blocks: RotatedBlocks) -> float:
    """Fixed-alternative drift c(delta, mu).

    The sign can differ from sign(delta).  Raises DegenerateDenominator
    when the denominator quadratic form falls below 1e-12.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    delta = float(delta)
    s11i = blocks._sigma11_inv
    w = s11i @ mu
    num = delta * float(mu @ w) - delta * delta * float(w @ blocks.sigma21 @ w)
    x = mu - delta * blocks.sigma21 @ w
    den2 = float(x @ s11i @ x)
    if den2 <= _DENOM_TOL:
        raise DegenerateDenominator(f"drift denominator {den2!r} below tolerance")
    return num / math.sqrt(den2)


def lm_fa_variance(delta, inputs: AsymptoticInputs, blocks: RotatedBlocks) -> float:
    """Fixed-alternative asymptotic variance of the one-sided LM statistic.

    Always at least 1; equals 1 at delta = 0 and for k = 1, where the
    orthogonal projection annihilates the single direction.
    """
    delta = float(delta)
    v = inputs.mu  # D^{1/2} pi
    s11_isqrt = blocks._sigma11_isqrt
    gamma = s11_isqrt @ (v - delta * blocks.sigma21 @ (blocks._sigma11_inv @ v))
    g2 = float(gamma @ gamma)
    if g2 <= 1e-24:
        raise DegenerateGamma("gamma has vanishing norm")
    k = v.shape[0]
    m_gamma = np.eye(k) - np.outer(gamma, gamma) / g2
    core = blocks._up22_isqrt @ blocks._up22_isqrt  # (sigma^22)^{-1}
    inner = m_gamma @ s11_isqrt @ core @ s11_isqrt @ m_gamma
    w = s11_isqrt @ v
    return 1.0 + delta * delta / g2 * float(w @ inner @ w)


def lm_fa_variance_components(delta, inputs: AsymptoticInputs,
                              blocks: RotatedBlocks):
    """Split the fixed-alternative variance into the numerator-driven and
    denominator-driven parts; they sum to :func:`lm_fa_variance`.

    Diagnostic only, no separate contract.
    """
    delta = float(delta)
    v = inputs.mu
    s11_isqrt = blocks._sigma11_isqrt
    gamma = s11_isqrt @ (v - delta * blocks.sigma21 @ (blocks._sigma11_inv @ v))
    g2 = float(gamma @ gamma)
    if g2 <= 1e-24:
        raise DegenerateGamma("gamma has vanishing norm")
    core = blocks._up22_isqrt @ blocks._up22_isqrt
    w = s11_isqrt @ v
    first = 1.0 + delta * delta / g2 * float(w @ s11_isqrt @ core @ s11_isqrt @ w)
    total = lm_fa_variance(delta, inputs, blocks)
    return first, total - first


def lm_id_limit(mu, blocks: RotatedBlocks) -> float:
    """Large-delta drift ceiling under the impossibility restriction.

    m = mu'S11i mu / sqrt(mu'S11i S12 S11i S21 S11i mu); homogeneous of
    degree one in mu.  Raises DegenerateDenominator when S21 S11i mu
    vanishes (no contamination channel, drift diverges instead).
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    w = blocks._sigma11_inv @ mu
    y = blocks.sigma21 @ w
    den2 = float(y @ blocks._sigma11_inv @ y)
    if den2 <= _DENOM_TOL:
        raise DegenerateDenominator(f"limit denominator {den2!r} below tolerance")
    return float(mu @ w) / math.sqrt(den2)
