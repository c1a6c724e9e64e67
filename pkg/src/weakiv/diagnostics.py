"""Impossibility-design detection, the confidence-bound solver, and the
anti-diagonal design family.

The impossibility restriction mu'A mu = 0 with A = S11i S21 S11i admits a
nonzero solution exactly when the spectrum hull of the Hermitian part
H = (A + A')/2 contains zero; a certificate is assembled from the
extreme eigenvectors.  The confidence bound is the S22^{-1} Mahalanobis
distance from the first-stage estimate to that cone,

    min_mu (mu_hat - mu)' S22^{-1} (mu_hat - mu)  s.t.  mu'H mu = 0,

solved through its first-order condition (S22^{-1} + kappa H) mu = S22^{-1}
mu_hat.  The scalar constraint in kappa need not be monotone, so every
inter-pole interval is scanned for sign changes; poles whose eigenspace
coordinate of the data vanishes are admitted as candidates with a
null-space completion (the closest point can sit exactly on a pole, as
it does when mu_hat lies on an eigen-axis).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ._linalg import check_symmetric, spd_inv, sym_inv_sqrt, sym_sqrt
from .distance import chi2_quantile
from .errors import (
    DimensionMismatch,
    Infeasible,
    InvalidInput,
    NonPositiveDefinite,
    NoRootFound,
    SingularFoc,
)
from .model import ModelConfig, RotatedBlocks, build_blocks

logger = logging.getLogger(__name__)

_FEASIBLE_TOL = 1e-10
_POLE_RTOL = 1e-10
_ZCOORD_RTOL = 1e-9
_GRID_PER_INTERVAL = 1024
_KAPPA_SPAN = 1e8


@dataclass(frozen=True)
class IdGeometry:
    """A = S11i S21 S11i, its Hermitian part H, the spectrum of H, and the
    S22-congruent form used by the kappa scan."""

    a_mat: np.ndarray
    h_mat: np.ndarray
    eigvals: np.ndarray
    hbar: np.ndarray
    sigma22: np.ndarray

    def __post_init__(self):
        for name in ("a_mat", "h_mat", "eigvals", "hbar", "sigma22"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def k(self):
        return self.h_mat.shape[0]

    @property
    def spectral_norm(self):
        return float(np.max(np.abs(self.eigvals))) if self.eigvals.size else 0.0


def build_id_geometry(blocks: RotatedBlocks) -> IdGeometry:
    """Geometry of the impossibility restriction for a rotated model."""
    s11i = blocks._sigma11_inv
    a_mat = s11i @ blocks.sigma21 @ s11i
    return geometry_from_parts(a_mat, blocks.sigma22)


def geometry_from_parts(a_mat, sigma22) -> IdGeometry:
    """IdGeometry from an arbitrary square matrix A and SPD sigma22.

    Used by tests and the CLI to probe the spectral characterization with
    synthetic matrices.
    """
    a_mat = np.asarray(a_mat, dtype=float)
    if a_mat.ndim != 2 or a_mat.shape[0] != a_mat.shape[1]:
        raise DimensionMismatch("A must be square")
    sigma22 = check_symmetric(np.asarray(sigma22, dtype=float), "sigma22")
    if sigma22.shape != a_mat.shape:
        raise DimensionMismatch("sigma22 shape inconsistent with A")
    h_mat = 0.5 * (a_mat + a_mat.T)
    eigvals = np.linalg.eigvalsh(h_mat)
    s22_sqrt = sym_sqrt(sigma22, "sigma22")
    hbar = s22_sqrt @ h_mat @ s22_sqrt
    hbar = 0.5 * (hbar + hbar.T)
    return IdGeometry(a_mat=a_mat, h_mat=h_mat, eigvals=eigvals, hbar=hbar,
                      sigma22=sigma22)


def id_feasible(geom: IdGeometry, tol: float = _FEASIBLE_TOL):
    """Check whether zero lies in the spectrum hull of H; construct a
    certificate mu with mu'H mu = 0 (hence mu'A mu = 0) when it does.

    Returns (feasible, certificate_mu or None).
    """
    if tol <= 0.0:
        raise InvalidInput("tol must be positive")
    hnorm = geom.spectral_norm
    if hnorm == 0.0:
        mu = np.zeros(geom.k)
        mu[0] = 1.0
        return True, mu
    w, v = np.linalg.eigh(geom.h_mat)
    lo, hi = w[0], w[-1]
    if lo > tol * hnorm or hi < -tol * hnorm:
        return False, None
    imin = int(np.argmin(np.abs(w)))
    if abs(w[imin]) <= tol * hnorm:
        return True, v[:, imin].copy()
    # strictly mixed signs: sqrt(-lambda_min) v_max + sqrt(lambda_max) v_min
    mu = math.sqrt(-lo) * v[:, -1] + math.sqrt(hi) * v[:, 0]
    mu = mu / np.linalg.norm(mu)
    return True, mu


def _pole_candidates(lam, z, hnorm):
    """Constrained minimizers sitting exactly on a pole of the resolvent.

    At kappa = -1/lam_i the FOC is solvable only if the data coordinate
    on that eigenspace vanishes; the free eigenspace mass is then set by
    the constraint.  Yields (kappa, w, objective) in H-bar eigencoords.
    """
    out = []
    k = lam.shape[0]
    znorm = float(np.linalg.norm(z))
    groups = []
    used = np.zeros(k, dtype=bool)
    for i in range(k):
        if used[i] or abs(lam[i]) <= _POLE_RTOL * hnorm:
            continue
        grp = np.abs(lam - lam[i]) <= _POLE_RTOL * hnorm
        used |= grp
        groups.append(grp)
    for grp in groups:
        lam_g = lam[grp][0]
        if np.max(np.abs(z[grp])) > _ZCOORD_RTOL * max(znorm, 1e-300):
            continue
        kappa = -1.0 / lam_g
        rest = ~grp
        denom = 1.0 + kappa * lam[rest]
        if np.any(np.abs(denom) <= _POLE_RTOL):
            continue
        w = np.zeros(k)
        w[rest] = z[rest] / denom
        s = float(np.sum(lam[rest] * w[rest] ** 2))
        m2 = -s / lam_g
        if m2 < -1e-12 * max(1.0, abs(s)):
            continue
        m2 = max(m2, 0.0)
        idx = int(np.nonzero(grp)[0][0])
        w[idx] = math.sqrt(m2)
        obj = float(np.sum((z - w) ** 2))
        out.append((kappa, w, obj))
    return out


def _interval_grid(a, b, n=_GRID_PER_INTERVAL):
    """Points of an inter-pole interval, log-dense toward both endpoints."""
    width = b - a
    u = np.logspace(-9, math.log10(0.5), n // 2)
    pts = np.concatenate([a + width * u, b - width * u])
    if a < 0.0 < b:
        pts = np.append(pts, 0.0)
    pts.sort()
    return pts


def confidence_bound(mu_hat, blocks: RotatedBlocks, geom: IdGeometry):
    """Distance from mu_hat to the impossibility cone, with its solution.

    Returns (kappa_hat, mu_tilde, bound).  For definite H the only
    feasible point is the origin and the bound is mu_hat'S22^{-1}mu_hat
    (kappa is reported as NaN).  Raises NoRootFound when the kappa scan
    finds no admissible candidate, which signals a diagnostic failure
    rather than returning a silent zero.
    """
    mu_hat = np.asarray(mu_hat, dtype=float).reshape(-1)
    k = geom.k
    if mu_hat.shape[0] != k:
        raise DimensionMismatch(f"mu_hat must have length {k}")
    sigma22 = geom.sigma22
    s22_inv = spd_inv(sigma22, "sigma22")
    s22_isqrt = sym_inv_sqrt(sigma22, "sigma22")
    s22_sqrt = sym_sqrt(sigma22, "sigma22")

    feasible, _ = id_feasible(geom)
    if not feasible:
        bound = float(mu_hat @ s22_inv @ mu_hat)
        return float("nan"), np.zeros(k), bound

    hnorm_bar = float(np.max(np.abs(np.linalg.eigvalsh(geom.hbar))))
    y = s22_isqrt @ mu_hat
    if hnorm_bar == 0.0:
        return 0.0, mu_hat.copy(), 0.0

    lam, vmat = np.linalg.eigh(geom.hbar)
    z = vmat.T @ y

    def g_of(kappa):
        return np.sum(lam * z**2 / (1.0 + kappa * lam) ** 2)

    def obj_of(kappa):
        return kappa**2 * np.sum(lam**2 * z**2 / (1.0 + kappa * lam) ** 2)

    poles = np.unique(
        np.sort(-1.0 / lam[np.abs(lam) > _POLE_RTOL * hnorm_bar])
    )
    span = _KAPPA_SPAN / hnorm_bar
    edges = np.concatenate([[-span], poles, [span]])

    candidates = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0.0:
            continue
        shrink = min(1e-9 * (b - a), 1e-12 / hnorm_bar) + 1e-300
        pts = _interval_grid(a + shrink, b - shrink)
        vals = np.array([g_of(p) for p in pts])
        sign = np.sign(vals)
        flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        zero_hits = np.nonzero(vals == 0.0)[0]
        roots = [pts[i] for i in zero_hits]
        for i in flips:
            lo_k, hi_k = pts[i], pts[i + 1]
            flo = vals[i]
            for _ in range(200):
                mid = 0.5 * (lo_k + hi_k)
                fm = g_of(mid)
                if fm == 0.0:
                    lo_k = hi_k = mid
                    break
                if (fm > 0.0) == (flo > 0.0):
                    lo_k = mid
                    flo = fm
                else:
                    hi_k = mid
                if hi_k - lo_k <= 1e-12 * max(1.0, abs(lo_k), abs(hi_k)):
                    break
            roots.append(0.5 * (lo_k + hi_k))
        for kappa in roots:
            denom = 1.0 + kappa * lam
            if np.min(np.abs(denom)) <= _POLE_RTOL:
                logger.warning(
                    "kappa root %.6g collides with a resolvent pole; skipped",
                    kappa,
                )
                continue
            w = z / denom
            obj_closed = float(obj_of(kappa))
            obj_direct = float(np.sum((z - w) ** 2))
            scale = max(abs(obj_closed), abs(obj_direct), 1e-12)
            if abs(obj_closed - obj_direct) > 1e-8 * scale:
                logger.warning(
                    "objective cross-check failed at kappa=%.6g "
                    "(closed %.12g vs direct %.12g); skipped",
                    kappa, obj_closed, obj_direct,
                )
                continue
            candidates.append((kappa, w, obj_direct))

    candidates.extend(_pole_candidates(lam, z, hnorm_bar))

    if not candidates:
        raise NoRootFound("no admissible kappa found by the constraint scan")

    candidates.sort(key=lambda c: (c[2], abs(c[0])))
    kappa_hat, w_best, bound = candidates[0]
    mu_tilde = s22_sqrt @ (vmat @ w_best)
    # the FOC must hold at the selected candidate, pole or not
    foc_resid = (s22_inv + kappa_hat * geom.h_mat) @ mu_tilde - s22_inv @ mu_hat
    scale = max(1.0, float(np.linalg.norm(s22_inv @ mu_hat)))
    if float(np.linalg.norm(foc_resid)) > 1e-7 * scale:
        raise SingularFoc(
            f"first-order condition residual {np.linalg.norm(foc_resid):.3e} "
            f"at kappa={kappa_hat:.6g}"
        )
    return float(kappa_hat), mu_tilde, float(max(bound, 0.0))


def eta_min(mu_hat, mu_tilde, blocks: RotatedBlocks, cutoff) -> float:
    """Smallest scaling of mu_tilde that stays inside the confidence set.

    Zero when the origin is already inside; otherwise the smaller root of
    the binding quadratic, at which the constraint holds with equality.
    Raises Infeasible when no scaling enters the set.
    """
    mu_hat = np.asarray(mu_hat, dtype=float).reshape(-1)
    mu_tilde = np.asarray(mu_tilde, dtype=float).reshape(-1)
    cutoff = float(cutoff)
    if cutoff <= 0.0:
        raise InvalidInput("cutoff must be positive")
    s22_inv = spd_inv(blocks.sigma22, "sigma22")
    f_stat = float(mu_hat @ s22_inv @ mu_hat)
    if f_stat <= cutoff:
        return 0.0
    qt = float(mu_tilde @ s22_inv @ mu_tilde)
    if qt <= 1e-300:
        raise InvalidInput("mu_tilde must be nonzero")
    p = float(mu_tilde @ s22_inv @ mu_hat) / qt
    disc = p * p - (f_stat - cutoff) / qt
    if disc < 0.0:
        raise Infeasible("no scaling of mu_tilde enters the confidence set")
    return p - math.sqrt(disc)


@dataclass(frozen=True)
class DiagnosticReport:
    """Feasibility, certificate, solver output, and the intersection flag."""

    feasible: bool
    certificate_mu: np.ndarray | None
    kappa_hat: float | None
    mu_tilde: np.ndarray | None
    confidence_bound: float | None
    eta_min: float | None
    cutoff: float
    intersects: bool
    f_stat: float
    ar_noncentrality: float | None

    def to_dict(self):
        def arr(x):
            return None if x is None else [float(v) for v in x]

        return {
            "feasible": self.feasible,
            "certificate_mu": arr(self.certificate_mu),
            "kappa_hat": self.kappa_hat,
            "mu_tilde": arr(self.mu_tilde),
            "confidence_bound": self.confidence_bound,
            "eta_min": self.eta_min,
            "cutoff": self.cutoff,
            "intersects": self.intersects,
            "f_stat": self.f_stat,
            "ar_noncentrality": self.ar_noncentrality,
        }


def diagnose(mu_hat, config: ModelConfig, alpha: float = 0.05,
             blocks: RotatedBlocks | None = None) -> DiagnosticReport:
    """Full diagnostic: feasibility, confidence bound, minimal scaling.

    For definite H the solver fields are reported as not applicable
    (None) and ``intersects`` is False: the cone contains only the
    origin, which the restriction excludes.
    """
    if blocks is None:
        blocks = build_blocks(config)
    mu_hat = np.asarray(mu_hat, dtype=float).reshape(-1)
    geom = build_id_geometry(blocks)
    cutoff = chi2_quantile(1.0 - alpha, config.k)
    s22_inv = spd_inv(blocks.sigma22, "sigma22")
    f_stat = float(mu_hat @ s22_inv @ mu_hat)
    feasible, cert = id_feasible(geom)
    if not feasible:
        return DiagnosticReport(
            feasible=False, certificate_mu=None, kappa_hat=None,
            mu_tilde=None, confidence_bound=None, eta_min=None,
            cutoff=cutoff, intersects=False, f_stat=f_stat,
            ar_noncentrality=None,
        )
    kappa_hat, mu_tilde, bound = confidence_bound(mu_hat, blocks, geom)
    try:
        eta = eta_min(mu_hat, mu_tilde, blocks, cutoff)
    except (Infeasible, InvalidInput):
        eta = None
    ar_nc = float(mu_tilde @ blocks._sigma11_inv @ mu_tilde)
    return DiagnosticReport(
        feasible=True, certificate_mu=cert, kappa_hat=kappa_hat,
        mu_tilde=mu_tilde, confidence_bound=bound, eta_min=eta,
        cutoff=cutoff, intersects=bool(bound <= cutoff), f_stat=f_stat,
        ar_noncentrality=ar_nc,
    )


def make_id_design(k: int, lam: float, offdiag_scale: float = 0.75,
                   beta0: float = 0.0):
    """Anti-diagonal impossibility design and its first stage.

    Rotated-frame blocks: S11 = I_k, S22 = 16*lam*I_k, and
    S12 = offdiag_scale * 4*sqrt(lam) * J with J the anti-diagonal
    identity; ``offdiag_scale`` in (-1, 1) is the fraction of the SPD
    limit.  The first stage is mu = sqrt(lam) e1, so mu'S11i mu = lam,
    the AR noncentrality is d = delta^2 * lam, and mu'A mu = 0 for every
    k >= 2 because the leading anti-diagonal entry vanishes.  The large
    second-block scale keeps the LM drift ceiling at 1/(4*offdiag_scale)
    regardless of lam, which is what makes the design a power trap for
    LM-based tests while AR separates.

    Returns (config, mu); the covariance is mapped back from the rotated
    frame for the supplied beta0 (identity map at the default beta0 = 0).
    """
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise InvalidInput("impossibility designs require k >= 2")
    lam = float(lam)
    if lam <= 0.0:
        raise InvalidInput("lam must be positive")
    off = float(offdiag_scale)
    if abs(off) >= 1.0:
        raise NonPositiveDefinite(
            f"offdiag_scale={off!r} is at or beyond the SPD limit (|.|<1)"
        )
    eye = np.eye(k)
    j_anti = np.fliplr(eye)
    s22_scale = 16.0 * lam
    coupling = off * math.sqrt(s22_scale)
    sigma0 = np.block(
        [[eye, coupling * j_anti], [coupling * j_anti, s22_scale * eye]]
    )
    b0_inv = np.array([[1.0, 0.0], [beta0, 1.0]])
    unrot = np.kron(b0_inv.T, eye)  # inverse of the (B0' kron I) rotation
    sigma = unrot @ sigma0 @ unrot.T
    config = ModelConfig(k=int(k), beta0=float(beta0), sigma=sigma)
    mu = math.sqrt(lam) * eye[0]
    return config, mu
