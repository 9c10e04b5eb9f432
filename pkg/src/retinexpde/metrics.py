"""No-reference quality metrics and the combined original-vs-enhanced report.

All metrics take float64 images or planes with values in [0, 1]. Luminance
is the arithmetic channel mean (R + G + B) / 3 throughout.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .imageops import luminance, rgb_to_hsv
from .validation import check_plane, check_rgb_image, check_same_shape

ENTROPY_BINS = 256

# Perceptual quality score constants from the blockiness-score lineage.
PQM_A = -245.9
PQM_B = 261.9
PQM_G1 = -0.0240
PQM_G2 = 0.0160
PQM_G3 = 0.0640
# Degenerate inputs (constant planes) produce zero blockiness/activity;
# flooring keeps the negative exponents finite.
_PQM_FLOOR = 1e-8

GMSD_C = 0.0026

# Column order used by every CSV/JSON rendering of a MetricReport.
METRIC_COLUMNS = ("RC", "F", "PQM", "REMEC", "RM", "RSD", "RE", "RAG", "HDI", "EMEC_2")

_RATIO_SENTINEL = 1e6


def entropy(p, bins=ENTROPY_BINS):
    """Shannon entropy in bits of the plane quantized to `bins` levels.

    Ranges over [0, log2(bins)]: 0 for constant planes, 8.0 when all 256
    default buckets carry equal mass.
    """
    p = check_plane(p)
    if p.min() < -1e-9 or p.max() > 1.0 + 1e-9:
        raise ValueError("entropy expects values in [0, 1]")
    if bins < 2:
        raise ValueError("bins must be at least 2")
    idx = np.minimum((np.clip(p, 0.0, 1.0) * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx.ravel(), minlength=bins)
    q = counts[counts > 0] / p.size
    return float(-np.sum(q * np.log2(q)))


def _smoothed_diff(series, window):
    """Centered window-mean of the forward differences of a series."""
    d = np.diff(np.asarray(series, dtype=np.float64))
    if window <= 1 or d.size <= 1:
        return d.copy()
    half_lo = (window - 1) // 2
    half_hi = window // 2
    out = np.empty_like(d)
    for k in range(d.size):
        a = max(0, k - half_lo)
        b = min(d.size, k + half_hi + 1)
        out[k] = d[a:b].mean()
    return out


def entropy_derivatives(series, window=1):
    """Discrete first and second derivatives of an entropy series.

    dE is the centered window-mean of forward differences (length n-1);
    d2E is the forward difference of dE (length n-2).
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1 or series.size < 3:
        raise ValueError("series must be 1-D with at least 3 entries")
    if window < 1:
        raise ValueError("window must be at least 1")
    d = _smoothed_diff(series, window)
    return d, np.diff(d)


def _blockiness_pass(x):
    """Blockiness B, activity A and zero-crossing rate Z along rows."""
    h, w = x.shape
    d = x[:, 1:] - x[:, :-1]
    abs_d = np.abs(d)
    n_blocks = w // 8 - 1
    b = float(np.mean(abs_d[:, 7:8 * n_blocks:8]))
    a = (8.0 * float(np.mean(abs_d)) - b) / 7.0
    sgn = np.sign(d)
    z = float(np.mean(sgn[:, :-1] * sgn[:, 1:] < 0.0))
    return b, a, z


def pqm(img):
    """Perceptual quality score of an RGB image.

    Blockiness, activity and zero-crossing statistics are measured on the
    [0, 1] luminance with 8-pixel block boundaries, averaged over the
    horizontal and vertical passes, and combined as
    a + b * B^g1 * A^g2 * Z^g3. Natural photographs score in roughly
    [6, 13]; heavier 8x8 blocking lowers the score.
    """
    img = check_rgb_image(img)
    h, w = img.shape[0], img.shape[1]
    if h < 16 or w < 16:
        raise ValueError("image too small: PQM needs at least 16x16 pixels")
    lum = luminance(img)
    bh, ah, zh = _blockiness_pass(lum)
    bv, av, zv = _blockiness_pass(lum.T)
    b = max((bh + bv) / 2.0, _PQM_FLOOR)
    a = max((ah + av) / 2.0, _PQM_FLOOR)
    z = max((zh + zv) / 2.0, _PQM_FLOOR)
    return float(PQM_A + PQM_B * b ** PQM_G1 * a ** PQM_G2 * z ** PQM_G3)


def _opponent_channels(img):
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    return r - g, 0.5 * (r + g) - b


def colourfulness(img):
    """Opponent-channel colourfulness with the 0.3 mean-magnitude term."""
    img = check_rgb_image(img)
    rg, yb = _opponent_channels(img)
    sigma = np.sqrt(np.var(rg) + np.var(yb))
    mu = np.sqrt(np.mean(rg) ** 2 + np.mean(yb) ** 2)
    return float(sigma + 0.3 * mu)


def _colour_sigma(img):
    rg, yb = _opponent_channels(img)
    return float(np.sqrt(np.var(rg) + np.var(yb)))


def _guarded_ratio(num, den, label, flags):
    """num / den with 0/0 -> 1 and x/0 -> a large sentinel, both flagged."""
    if den == 0.0:
        if num == 0.0:
            flags.append(f"{label}:0/0")
            return 1.0
        flags.append(f"{label}:div0")
        return _RATIO_SENTINEL
    return num / den


def rc(orig, enh):
    """Colourfulness ratio enhanced / original (guarded)."""
    return _guarded_ratio(colourfulness(enh), colourfulness(orig), "RC", [])


def cef(orig, enh):
    """Colour enhancement factor: ratio of the sigma-only colourfulness."""
    return _guarded_ratio(_colour_sigma(enh), _colour_sigma(orig), "F", [])


def emec(img, k1=8, k2=8, eps=1e-4):
    """Mean log block contrast of the colour magnitude plane, in dB.

    The image is partitioned into a k1 x k2 grid of contiguous blocks; each
    block contributes 20*log10((max m + eps) / (min m + eps)) where m is the
    per-pixel Euclidean magnitude sqrt(R^2 + G^2 + B^2).
    """
    img = check_rgb_image(img)
    h, w = img.shape[0], img.shape[1]
    k1, k2 = int(k1), int(k2)
    if k1 < 1 or k2 < 1 or k1 > h or k2 > w:
        raise ValueError("block grid must fit inside the image")
    if eps < 0.0:
        raise ValueError("eps must be non-negative")
    m = np.sqrt(img[..., 0] ** 2 + img[..., 1] ** 2 + img[..., 2] ** 2)
    row_edges = [h * i // k1 for i in range(k1 + 1)]
    col_edges = [w * j // k2 for j in range(k2 + 1)]
    total = 0.0
    for i in range(k1):
        for j in range(k2):
            block = m[row_edges[i]:row_edges[i + 1], col_edges[j]:col_edges[j + 1]]
            total += 20.0 * np.log10((block.max() + eps) / (block.min() + eps))
    return float(total / (k1 * k2))


def avg_gradient(p):
    """Mean forward-difference gradient magnitude sqrt((dx^2 + dy^2) / 2).

    Averaged over the (H-1) x (W-1) pixels that have both neighbours.
    """
    p = check_plane(p)
    if p.shape[0] < 2 or p.shape[1] < 2:
        raise ValueError("plane too small")
    dx = p[:-1, 1:] - p[:-1, :-1]
    dy = p[1:, :-1] - p[:-1, :-1]
    return float(np.mean(np.sqrt((dx ** 2 + dy ** 2) / 2.0)))


def hdi(orig, enh, s_min=0.05):
    """Mean circular hue distance in degrees over jointly saturated pixels.

    Pixels qualify when both images have HSV saturation >= s_min. Returns 0
    when no pixel qualifies.
    """
    orig = check_rgb_image(orig)
    enh = check_rgb_image(enh)
    check_same_shape(orig, enh, "orig", "enh")
    if s_min < 0.0:
        raise ValueError("s_min must be non-negative")
    hsv1 = rgb_to_hsv(orig)
    hsv2 = rgb_to_hsv(enh)
    mask = (hsv1[..., 1] >= s_min) & (hsv2[..., 1] >= s_min)
    if not mask.any():
        return 0.0
    dh = np.abs(hsv1[..., 0] - hsv2[..., 0]) * 360.0
    dh = np.minimum(dh, 360.0 - dh)
    return float(np.mean(dh[mask]))


def _prewitt(p):
    pe = np.pad(p, 1, mode="edge")
    gx = (pe[:-2, 2:] + pe[1:-1, 2:] + pe[2:, 2:]
          - pe[:-2, :-2] - pe[1:-1, :-2] - pe[2:, :-2]) / 3.0
    gy = (pe[2:, :-2] + pe[2:, 1:-1] + pe[2:, 2:]
          - pe[:-2, :-2] - pe[:-2, 1:-1] - pe[:-2, 2:]) / 3.0
    return np.sqrt(gx ** 2 + gy ** 2)


def gmsd(p1, p2, c=GMSD_C):
    """Gradient-magnitude similarity deviation between two planes.

    Prewitt gradient magnitudes g1, g2 give the similarity map
    (2*g1*g2 + c) / (g1^2 + g2^2 + c); the score is its population standard
    deviation. Identical planes score exactly 0; the map lies in (0, 1], so
    the score stays within [0, 0.5].
    """
    p1 = check_plane(p1)
    p2 = check_plane(p2)
    check_same_shape(p1, p2, "p1", "p2")
    if c <= 0.0:
        raise ValueError("c must be positive")
    g1 = _prewitt(p1)
    g2 = _prewitt(p2)
    gms = (2.0 * g1 * g2 + c) / (g1 ** 2 + g2 ** 2 + c)
    return float(np.std(gms))


@dataclass
class MetricReport:
    """Full original-vs-enhanced metric battery.

    The canonical serialized form carries the ten METRIC_COLUMNS values;
    the remaining fields are available on the object for analysis.
    """

    rc: float
    cef: float
    pqm: float
    remec: float
    rm: float
    rsd: float
    re: float
    rag: float
    hdi: float
    emec_2: float
    emec_1: float
    e_orig: float
    e_enh: float
    ag_orig: float
    ag_enh: float
    c_orig: float
    c_enh: float
    gmsd: float
    flags: list = field(default_factory=list)

    def to_dict(self):
        values = (self.rc, self.cef, self.pqm, self.remec, self.rm,
                  self.rsd, self.re, self.rag, self.hdi, self.emec_2)
        return dict(zip(METRIC_COLUMNS, values))

    def to_csv(self):
        d = self.to_dict()
        header = ",".join(METRIC_COLUMNS)
        row = ",".join(repr(d[c]) for c in METRIC_COLUMNS)
        return f"{header}\n{row}\n"

    def to_json(self):
        return json.dumps(self.to_dict()) + "\n"


def metric_report(orig, enh, emec_blocks=(8, 8), emec_eps=1e-4, hdi_s_min=0.05):
    """Compute the combined metric battery for an original/enhanced pair.

    Ratios are enhanced over original with guarded division: 0/0 yields 1,
    x/0 yields a 1e6 sentinel, and both append a note to `flags`.
    """
    orig = check_rgb_image(orig)
    enh = check_rgb_image(enh)
    check_same_shape(orig, enh, "orig", "enh")
    flags = []

    lum_o = luminance(orig)
    lum_e = luminance(enh)
    e_orig = entropy(lum_o)
    e_enh = entropy(lum_e)
    ag_orig = avg_gradient(lum_o)
    ag_enh = avg_gradient(lum_e)
    c_orig = colourfulness(orig)
    c_enh = colourfulness(enh)
    emec_1 = emec(orig, emec_blocks[0], emec_blocks[1], emec_eps)
    emec_2 = emec(enh, emec_blocks[0], emec_blocks[1], emec_eps)

    hsv1 = rgb_to_hsv(orig)
    hsv2 = rgb_to_hsv(enh)
    if not ((hsv1[..., 1] >= hdi_s_min) & (hsv2[..., 1] >= hdi_s_min)).any():
        flags.append("HDI:no_qualifying_pixels")

    return MetricReport(
        rc=_guarded_ratio(c_enh, c_orig, "RC", flags),
        cef=_guarded_ratio(_colour_sigma(enh), _colour_sigma(orig), "F", flags),
        pqm=pqm(enh),
        remec=_guarded_ratio(emec_2, emec_1, "REMEC", flags),
        rm=_guarded_ratio(float(np.mean(lum_e)), float(np.mean(lum_o)), "RM", flags),
        rsd=_guarded_ratio(float(np.std(lum_e)), float(np.std(lum_o)), "RSD", flags),
        re=_guarded_ratio(e_enh, e_orig, "RE", flags),
        rag=_guarded_ratio(ag_enh, ag_orig, "RAG", flags),
        hdi=hdi(orig, enh, hdi_s_min),
        emec_2=emec_2,
        emec_1=emec_1,
        e_orig=e_orig,
        e_enh=e_enh,
        ag_orig=ag_orig,
        ag_enh=ag_enh,
        c_orig=c_orig,
        c_enh=c_enh,
        gmsd=gmsd(lum_o, lum_e),
        flags=flags,
    )
