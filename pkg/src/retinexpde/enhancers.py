"""Plane enhancers: histogram equalization, CLAHE, multi-scale retinex,
homomorphic filtering and affine stretches.

Every enhancer maps a [0, 1] plane to a [0, 1] plane except the log-domain
composite guided_enhance, whose input and output are log-domain planes.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .imageops import EPS_LOG, check_plane, normalize_percentile, to_log, from_log
from .validation import check_unit_plane


@dataclass(frozen=True)
class EnhancerConfig:
    """Knobs for the enhancement drive.

    msr_scales: Gaussian surround sigmas in pixels, or None for the
        resolution-relative default (min_dim/60, min_dim/12, min_dim/3).
    msr_weights: per-scale weights summing to 1, or None for equal weights.
    clahe_tiles: (rows, cols) tile grid.
    clahe_clip: clip limit as a fraction of the tile histogram mass, in (0, 1].
    stretch: (p_lo, p_hi) percentile pair for the global stretch stage.
    bins: histogram resolution for equalization stages.
    """

    msr_scales: tuple = None
    msr_weights: tuple = None
    clahe_tiles: tuple = (8, 8)
    clahe_clip: float = 0.01
    stretch: tuple = (0.01, 0.99)
    bins: int = 256

    def __post_init__(self):
        if self.msr_scales is not None:
            scales = tuple(float(s) for s in self.msr_scales)
            if len(scales) == 0 or any(s < 0.0 for s in scales):
                raise ValueError("msr_scales must be non-negative and non-empty")
            object.__setattr__(self, "msr_scales", scales)
        if self.msr_weights is not None:
            if self.msr_scales is None:
                raise ValueError("msr_weights given without msr_scales")
            weights = tuple(float(w) for w in self.msr_weights)
            if len(weights) != len(self.msr_scales):
                raise ValueError("msr_weights length must match msr_scales")
            if any(w < 0.0 for w in weights):
                raise ValueError("msr_weights must be non-negative")
            if abs(sum(weights) - 1.0) > 1e-9:
                raise ValueError("msr_weights must sum to 1")
            object.__setattr__(self, "msr_weights", weights)
        rows, cols = self.clahe_tiles
        if int(rows) < 1 or int(cols) < 1:
            raise ValueError("clahe_tiles must be positive")
        object.__setattr__(self, "clahe_tiles", (int(rows), int(cols)))
        if not 0.0 < self.clahe_clip <= 1.0:
            raise ValueError("clahe_clip must lie in (0, 1]")
        lo, hi = self.stretch
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError("stretch percentiles must satisfy 0 <= lo < hi <= 1")
        object.__setattr__(self, "stretch", (float(lo), float(hi)))
        if int(self.bins) < 2:
            raise ValueError("bins must be at least 2")
        object.__setattr__(self, "bins", int(self.bins))

    def resolved_scales(self, shape):
        """Concrete (scales, weights) for a plane of the given shape."""
        if self.msr_scales is None:
            m = float(min(shape[0], shape[1]))
            scales = (m / 60.0, m / 12.0, m / 3.0)
        else:
            scales = self.msr_scales
        if self.msr_weights is None:
            weights = tuple(1.0 / len(scales) for _ in scales)
        else:
            weights = self.msr_weights
        return scales, weights


def _bin_indices(p, bins):
    # values exactly 1.0 land in the top bin
    return np.minimum((p * bins).astype(np.int64), bins - 1)


def global_he(p, bins=256):
    """Global histogram equalization: out = CDF(p) over `bins` buckets.

    A plane occupying a single bucket is returned unchanged, so constant
    planes stay constant.
    """
    p = check_unit_plane(p)
    if bins < 2:
        raise ValueError("bins must be at least 2")
    idx = _bin_indices(p, bins)
    counts = np.bincount(idx.ravel(), minlength=bins)
    if np.count_nonzero(counts) <= 1:
        return p.copy()
    cdf = np.cumsum(counts) / p.size
    return cdf[idx]


def clahe(p, tiles=(8, 8), clip=0.01, bins=256):
    """Contrast-limited adaptive histogram equalization.

    Per-tile histograms are clipped at `clip` times the tile pixel count,
    the excess mass is redistributed uniformly over all buckets, and each
    pixel is mapped by bilinear interpolation between the CDFs of the four
    surrounding tile centers. With a single tile and clip=1.0 this reduces
    to global_he.

    Args:
        p: plane with values in [0, 1].
        tiles: (rows, cols) tile grid; must not exceed the plane dimensions.
        clip: clip limit as a fraction of tile mass, in (0, 1].
        bins: histogram resolution.

    Returns:
        Equalized plane in [0, 1].
    """
    p = check_unit_plane(p)
    rows, cols = int(tiles[0]), int(tiles[1])
    h, w = p.shape
    if rows < 1 or cols < 1 or rows > h or cols > w:
        raise ValueError("invalid tiling")
    if not 0.0 < clip <= 1.0:
        raise ValueError("clip must lie in (0, 1]")
    if bins < 2:
        raise ValueError("bins must be at least 2")

    idx = _bin_indices(p, bins)
    if np.count_nonzero(np.bincount(idx.ravel(), minlength=bins)) <= 1:
        return p.copy()

    row_edges = [h * i // rows for i in range(rows + 1)]
    col_edges = [w * j // cols for j in range(cols + 1)]

    luts = np.empty((rows, cols, bins), dtype=np.float64)
    for ti in range(rows):
        for tj in range(cols):
            tile = idx[row_edges[ti]:row_edges[ti + 1],
                       col_edges[tj]:col_edges[tj + 1]]
            counts = np.bincount(tile.ravel(), minlength=bins).astype(np.float64)
            n_tile = tile.size
            limit = clip * n_tile
            excess = np.sum(np.maximum(counts - limit, 0.0))
            if excess > 0.0:
                counts = np.minimum(counts, limit)
                counts += excess / bins
            luts[ti, tj] = np.cumsum(counts) / n_tile

    centers_y = np.array(
        [(row_edges[i] + row_edges[i + 1] - 1) / 2.0 for i in range(rows)]
    )
    centers_x = np.array(
        [(col_edges[j] + col_edges[j + 1] - 1) / 2.0 for j in range(cols)]
    )

    ys = np.arange(h, dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)
    iy = np.searchsorted(centers_y, ys)
    ix = np.searchsorted(centers_x, xs)
    ti0 = np.clip(iy - 1, 0, rows - 1)
    ti1 = np.clip(iy, 0, rows - 1)
    tj0 = np.clip(ix - 1, 0, cols - 1)
    tj1 = np.clip(ix, 0, cols - 1)
    span_y = centers_y[ti1] - centers_y[ti0]
    span_x = centers_x[tj1] - centers_x[tj0]
    wy = np.where(span_y > 0.0, (ys - centers_y[ti0]) / np.where(span_y > 0, span_y, 1), 0.0)
    wx = np.where(span_x > 0.0, (xs - centers_x[tj0]) / np.where(span_x > 0, span_x, 1), 0.0)
    wy = np.clip(wy, 0.0, 1.0)[:, None]
    wx = np.clip(wx, 0.0, 1.0)[None, :]

    v00 = luts[ti0[:, None], tj0[None, :], idx]
    v01 = luts[ti0[:, None], tj1[None, :], idx]
    v10 = luts[ti1[:, None], tj0[None, :], idx]
    v11 = luts[ti1[:, None], tj1[None, :], idx]
    out = ((1.0 - wy) * (1.0 - wx) * v00 + (1.0 - wy) * wx * v01
           + wy * (1.0 - wx) * v10 + wy * wx * v11)
    return np.clip(out, 0.0, 1.0)


def _gaussian_kernel(sigma):
    # support truncated at +/- 3 sigma, renormalized to unit sum
    radius = int(math.floor(3.0 * sigma))
    if radius < 1:
        return np.array([1.0])
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (offsets / sigma) ** 2)
    return k / k.sum()


def gaussian_surround(p, sigma):
    """Separable Gaussian blur, kernel truncated at 3 sigma, replicate edges.

    sigma=0 (or any sigma whose truncated kernel collapses to one tap)
    returns the plane unchanged.
    """
    p = check_plane(p)
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")
    k = _gaussian_kernel(sigma)
    if k.size == 1:
        return p.copy()
    # a constant plane convolves to itself under the unit-sum kernel; the
    # FFT path would leave ~1e-16 residue that downstream stretches amplify
    if p.min() == p.max():
        return p.copy()
    r = k.size // 2
    padded = np.pad(p, ((0, 0), (r, r)), mode="edge")
    out = fftconvolve(padded, k[None, :], mode="valid")
    padded = np.pad(out, ((r, r), (0, 0)), mode="edge")
    return fftconvolve(padded, k[:, None], mode="valid")


def msr_reflectance(p, cfg=None, eps_log=EPS_LOG):
    """Multi-scale retinex reflectance of a [0, 1] plane.

    Weighted sum over scales of ln(p + eps) - ln(surround + eps). The output
    is a signed log-domain plane centred near zero.
    """
    p = check_unit_plane(p)
    cfg = cfg if cfg is not None else EnhancerConfig()
    if eps_log <= 0.0:
        raise ValueError("eps_log must be positive")
    scales, weights = cfg.resolved_scales(p.shape)
    log_p = np.log(p + eps_log)
    out = np.zeros_like(p)
    for sigma, weight in zip(scales, weights):
        out += weight * (log_p - np.log(gaussian_surround(p, sigma) + eps_log))
    return out


def guided_enhance(i_log, cfg=None, eps_log=EPS_LOG):
    """Enhancement drive used by the evolution: MSR, stretch, then CLAHE.

    Takes a log-domain plane, computes the multi-scale retinex reflectance
    of its intensity image, stretches the reflectance onto [0, 1] by the
    configured percentiles, applies CLAHE for local contrast, and returns
    the result mapped back into the log domain.
    """
    i_log = check_plane(i_log)
    cfg = cfg if cfg is not None else EnhancerConfig()
    p = from_log(i_log, eps_log)
    r = msr_reflectance(p, cfg, eps_log)
    u = normalize_percentile(r, cfg.stretch[0], cfg.stretch[1])
    v = clahe(u, cfg.clahe_tiles, cfg.clahe_clip, cfg.bins)
    return to_log(v, eps_log)


def homomorphic_filter(p, gamma_lo=0.7, gamma_hi=1.3, sigma_c=None, eps_log=EPS_LOG):
    """Split the log plane into low and high frequencies and reweight them.

    out = from_log(gamma_lo * low + gamma_hi * (log_p - low)) where low is
    the Gaussian surround of the log plane at scale sigma_c (default
    min_dim / 8). gamma_lo = gamma_hi = 1 is the identity up to clamping.
    """
    p = check_unit_plane(p)
    if gamma_lo < 0.0 or gamma_hi < 0.0:
        raise ValueError("gains must be non-negative")
    if gamma_lo > gamma_hi:
        raise ValueError("gamma_lo must not exceed gamma_hi")
    if sigma_c is None:
        sigma_c = min(p.shape) / 8.0
    if sigma_c <= 0.0:
        raise ValueError("sigma_c must be positive")
    log_p = to_log(p, eps_log)
    low = gaussian_surround(log_p, sigma_c)
    return from_log(gamma_lo * low + gamma_hi * (log_p - low), eps_log)


def gain_offset(p, mode="minmax", k=2.0, p_lo=0.01, p_hi=0.99):
    """Affine gain/offset correction in one of three modes.

    minmax: map [min, max] onto [0, 1].
    meanstd: map [mean - k*std, mean + k*std] onto [0, 1], clamped.
    percentile: the normalize_percentile stretch with (p_lo, p_hi).
    Degenerate spans map the whole plane to 0.5.
    """
    p = check_plane(p)
    if mode == "minmax":
        lo, hi = float(np.min(p)), float(np.max(p))
    elif mode == "meanstd":
        if k <= 0.0:
            raise ValueError("k must be positive")
        mu, sd = float(np.mean(p)), float(np.std(p))
        lo, hi = mu - k * sd, mu + k * sd
    elif mode == "percentile":
        return normalize_percentile(p, p_lo, p_hi)
    else:
        raise ValueError(f"unknown gain_offset mode: {mode!r}")
    if hi <= lo:
        return np.full_like(p, 0.5)
    return np.clip((p - lo) / (hi - lo), 0.0, 1.0)
