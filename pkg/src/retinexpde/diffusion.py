"""Anisotropic-diffusion stencils: 4-neighbour gradients, conductance,
flux divergence, curvature and the gradient-threshold estimate."""

from dataclasses import dataclass, replace

import numpy as np

from .imageops import nearest_rank_quantile
from .validation import check_plane

K_FLOOR = 1e-4

_CONDUCTANCE_KINDS = ("exponential", "rational")


@dataclass(frozen=True)
class DiffusionConfig:
    """Conductance settings for the diffusion term.

    kind: 'exponential' for exp(-(mag/K)^2) or 'rational' for
        1 / (1 + (mag/K)^2).
    K: gradient threshold, a positive real or 'auto' to re-estimate from
        the evolving plane each step.
    eps_curv: regularizer added to the squared gradient magnitude in the
        curvature term.
    """

    kind: str = "exponential"
    K: object = "auto"
    eps_curv: float = 1e-4

    def __post_init__(self):
        if self.kind not in _CONDUCTANCE_KINDS:
            raise ValueError(f"unknown conductance kind: {self.kind!r}")
        if isinstance(self.K, str):
            if self.K != "auto":
                raise ValueError("K must be a positive real or 'auto'")
        else:
            if float(self.K) <= 0.0:
                raise ValueError("K must be a positive real or 'auto'")
            object.__setattr__(self, "K", float(self.K))
        if self.eps_curv <= 0.0:
            raise ValueError("eps_curv must be positive")


def grad4(p):
    """One-sided differences toward the four neighbours (N, S, E, W).

    Differences pointing outside the plane are zero, which encodes the
    replicate (Neumann) boundary.
    """
    p = check_plane(p)
    if p.shape[0] < 2 or p.shape[1] < 2:
        raise ValueError("plane too small")
    n = np.zeros_like(p)
    s = np.zeros_like(p)
    e = np.zeros_like(p)
    w = np.zeros_like(p)
    n[1:, :] = p[:-1, :] - p[1:, :]
    s[:-1, :] = p[1:, :] - p[:-1, :]
    e[:, :-1] = p[:, 1:] - p[:, :-1]
    w[:, 1:] = p[:, :-1] - p[:, 1:]
    return n, s, e, w


def conductance(mag, cfg):
    """Edge-stopping function g(mag) in (0, 1]; g(0) = 1.

    cfg.K must already be numeric here; callers resolve 'auto' first.
    """
    if isinstance(cfg.K, str):
        raise ValueError("conductance needs a numeric K; resolve 'auto' first")
    mag = np.asarray(mag, dtype=np.float64)
    ratio_sq = (mag / cfg.K) ** 2
    if cfg.kind == "exponential":
        return np.exp(-ratio_sq)
    return 1.0 / (1.0 + ratio_sq)


def estimate_K(p, q=0.9):
    """Gradient threshold: the q-quantile of pooled |grad4| magnitudes.

    Floored at K_FLOOR so flat planes cannot produce a zero threshold.
    """
    n, s, e, w = grad4(p)
    mags = np.abs(np.stack([n, s, e, w]))
    return max(nearest_rank_quantile(mags, q), K_FLOOR)


def _resolved(p, cfg):
    if isinstance(cfg.K, str):
        return replace(cfg, K=estimate_K(p))
    return cfg


def ad_flux_divergence(p, cfg=None):
    """Divergence of the conductance-weighted 4-neighbour flux.

    Returns sum over directions of g(|grad_d|) * grad_d. Interior fluxes
    cancel pairwise, so the plane-wide sum is zero up to rounding; explicit
    Euler steps with dt * 4 <= 1 therefore respect the extremum principle.
    """
    p = check_plane(p)
    cfg = _resolved(p, cfg if cfg is not None else DiffusionConfig())
    out = np.zeros_like(p)
    for d in grad4(p):
        out += conductance(np.abs(d), cfg) * d
    return out


def curvature_term(p, eps_curv=1e-4):
    """Regularized curvature flow |grad p| * div(grad p / |grad p|).

    Central differences with replicate boundary; the denominator is
    px^2 + py^2 + eps_curv^2, so affine planes give exactly zero away from
    the boundary.
    """
    p = check_plane(p)
    if p.shape[0] < 2 or p.shape[1] < 2:
        raise ValueError("plane too small")
    if eps_curv <= 0.0:
        raise ValueError("eps_curv must be positive")
    pe = np.pad(p, 1, mode="edge")
    px = (pe[1:-1, 2:] - pe[1:-1, :-2]) / 2.0
    py = (pe[2:, 1:-1] - pe[:-2, 1:-1]) / 2.0
    pxx = pe[1:-1, 2:] - 2.0 * p + pe[1:-1, :-2]
    pyy = pe[2:, 1:-1] - 2.0 * p + pe[:-2, 1:-1]
    pxy = (pe[2:, 2:] - pe[2:, :-2] - pe[:-2, 2:] + pe[:-2, :-2]) / 4.0
    num = pxx * py ** 2 - 2.0 * px * py * pxy + pyy * px ** 2
    return num / (px ** 2 + py ** 2 + eps_curv ** 2)
