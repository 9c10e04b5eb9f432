"""Colour-space conversions, log-domain transforms and plane statistics.

Planes are 2-D float64 arrays. Colour images are (H, W, 3) float64 arrays
with values in [0, 1], channel order RGB. Hue is stored normalized to
[0, 1), i.e. degrees divided by 360.
"""

import math
from typing import NamedTuple

import numpy as np

from .validation import check_plane, check_rgb_image, check_unit_plane

# One 8-bit quantum: keeps the log transform finite for black pixels while
# staying below the smallest representable intensity step.
EPS_LOG = 1.0 / 255.0

_ACHROMATIC = 1e-12


class ChannelStats(NamedTuple):
    mean: float
    std: float
    min: float
    max: float


def channel_stats(p):
    """Mean, population standard deviation, min and max of a plane."""
    p = check_plane(p)
    return ChannelStats(
        float(np.mean(p)), float(np.std(p)), float(np.min(p)), float(np.max(p))
    )


def to_log(p, eps_log=EPS_LOG):
    """Map a plane into the log domain: ln(p + eps_log)."""
    p = check_plane(p)
    if eps_log <= 0.0:
        raise ValueError("eps_log must be positive")
    return np.log(p + eps_log)


def from_log(p, eps_log=EPS_LOG):
    """Invert to_log and clamp the result to [0, 1]."""
    p = check_plane(p)
    if eps_log <= 0.0:
        raise ValueError("eps_log must be positive")
    return np.clip(np.exp(p) - eps_log, 0.0, 1.0)


def nearest_rank_quantile(values, q):
    """q-quantile of the pooled values by the nearest-rank rule.

    The rule: sort a copy ascending and take the element at 1-based rank
    ceil(q * n), clamped to [1, n]. q=0 yields the minimum, q=1 the maximum.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError("quantile must lie in [0, 1]")
    flat = np.sort(np.asarray(values, dtype=np.float64), axis=None)
    if flat.size == 0:
        raise ValueError("quantile of empty input")
    rank = min(max(1, math.ceil(q * flat.size)), flat.size)
    return float(flat[rank - 1])


def normalize_percentile(p, p_lo=0.01, p_hi=0.99):
    """Affinely map the [p_lo, p_hi] quantile span onto [0, 1], clamped.

    Quantiles follow the nearest-rank rule. A degenerate span (both
    quantiles equal) maps the whole plane to 0.5.
    """
    p = check_plane(p)
    if not (0.0 <= p_lo < p_hi <= 1.0):
        raise ValueError("percentiles must satisfy 0 <= p_lo < p_hi <= 1")
    flat = np.sort(p, axis=None)
    n = flat.size
    lo = flat[min(max(1, math.ceil(p_lo * n)), n) - 1]
    hi = flat[min(max(1, math.ceil(p_hi * n)), n) - 1]
    if hi <= lo:
        return np.full_like(p, 0.5)
    return np.clip((p - lo) / (hi - lo), 0.0, 1.0)


def luminance(img):
    """Arithmetic-mean luminance (R + G + B) / 3."""
    img = check_rgb_image(img)
    return (img[..., 0] + img[..., 1] + img[..., 2]) / 3.0


def rgb_to_hsi(img):
    """Convert RGB to HSI with the arccos hue formula.

    I = (R+G+B)/3; S = 1 - 3*min/(R+G+B) with S=0 for black pixels; hue is
    the angle against the red axis, mirrored when B > G. Achromatic pixels
    (R=G=B) take H=0 by convention.
    """
    img = check_rgb_image(img)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    total = r + g + b
    i = total / 3.0
    mn = np.minimum(np.minimum(r, g), b)
    s = np.where(total > 0.0, 1.0 - 3.0 * mn / np.where(total > 0.0, total, 1.0), 0.0)

    num = 0.5 * ((r - g) + (r - b))
    den_sq = (r - g) ** 2 + (r - b) * (g - b)
    den = np.sqrt(np.maximum(den_sq, 0.0))
    chromatic = den > _ACHROMATIC
    cosang = np.clip(num / np.where(chromatic, den, 1.0), -1.0, 1.0)
    theta = np.arccos(cosang) / (2.0 * np.pi)
    h = np.where(b > g, 1.0 - theta, theta)
    h = np.where(chromatic & (s > 0.0), h, 0.0)
    h = np.where(h >= 1.0, 0.0, h)
    return np.dstack([h, np.clip(s, 0.0, 1.0), np.clip(i, 0.0, 1.0)])


def hsi_to_rgb(img):
    """Invert rgb_to_hsi by the three 120-degree sector formulas."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must have shape (H, W, 3), got {img.shape}")
    h, s, i = img[..., 0], img[..., 1], img[..., 2]
    if not np.isfinite(img).all():
        raise ValueError("image contains non-finite values")
    deg = (h % 1.0) * 360.0

    sector = np.floor_divide(deg, 120.0).astype(np.int64)
    sector = np.clip(sector, 0, 2)
    local = np.deg2rad(deg - 120.0 * sector)
    x = i * (1.0 - s)
    # cos(60 deg - local) stays positive on [0, 120) so the ratio is safe
    y = i * (1.0 + s * np.cos(local) / np.cos(np.pi / 3.0 - local))
    z = 3.0 * i - (x + y)

    r = np.where(sector == 0, y, np.where(sector == 1, x, z))
    g = np.where(sector == 0, z, np.where(sector == 1, y, x))
    b = np.where(sector == 0, x, np.where(sector == 1, z, y))
    return np.clip(np.dstack([r, g, b]), 0.0, 1.0)


def rgb_to_hsv(img):
    """Convert RGB to HSV by the hexcone model, hue normalized to [0, 1)."""
    img = check_rgb_image(img)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    v = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    c = v - mn
    s = np.where(v > 0.0, c / np.where(v > 0.0, v, 1.0), 0.0)

    safe_c = np.where(c > 0.0, c, 1.0)
    # channel priority on ties matches the scalar reference: R, then G, then B
    h = np.select(
        [c <= 0.0, v == r, v == g],
        [0.0,
         ((g - b) / safe_c) % 6.0,
         (b - r) / safe_c + 2.0,
         ],
        default=(r - g) / safe_c + 4.0,
    )
    h = (h / 6.0) % 1.0
    return np.dstack([h, s, v])


def hsv_to_rgb(img):
    """Invert rgb_to_hsv (hexcone model)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must have shape (H, W, 3), got {img.shape}")
    if not np.isfinite(img).all():
        raise ValueError("image contains non-finite values")
    h, s, v = img[..., 0], img[..., 1], img[..., 2]
    h6 = (h % 1.0) * 6.0
    k = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))

    r = np.choose(k, [v, q, p, p, t, v])
    g = np.choose(k, [t, v, v, q, p, p])
    b = np.choose(k, [p, p, t, v, v, q])
    return np.clip(np.dstack([r, g, b]), 0.0, 1.0)
