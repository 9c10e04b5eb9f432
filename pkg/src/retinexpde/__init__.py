"""Entropy-guided Retinex diffusion for illumination correction.

The package evolves the log-domain intensity of an image under a weighted
combination of an enhancement drive, a spread force and anisotropic
smoothing, stopping automatically where the entropy of the evolving channel
peaks while a perceptual quality score stays stable. A no-reference metric
battery and classic baseline enhancers round out the toolkit.
"""

from .diffusion import (DiffusionConfig, ad_flux_divergence, conductance,
                        curvature_term, estimate_K, grad4)
from .enhancers import (EnhancerConfig, clahe, gain_offset, gaussian_surround,
                        global_he, guided_enhance, homomorphic_filter,
                        msr_reflectance)
from .engine import (EvolutionTrace, PdeParams, StopDecision, StoppingCriteria,
                     enhance, evolve_step, run_base_model, run_hsi, run_rgb,
                     stopping_decision)
from .estimator import RetinexDiffusionEnhancer
from .fileio import read_image, write_image
from .imageops import (EPS_LOG, ChannelStats, channel_stats, from_log,
                       hsi_to_rgb, hsv_to_rgb, luminance,
                       nearest_rank_quantile, normalize_percentile,
                       rgb_to_hsi, rgb_to_hsv, to_log)
from .metrics import (METRIC_COLUMNS, MetricReport, avg_gradient, cef,
                      colourfulness, emec, entropy, entropy_derivatives,
                      gmsd, hdi, metric_report, pqm, rc)

__version__ = "0.1.0"

__all__ = [
    "DiffusionConfig", "ad_flux_divergence", "conductance", "curvature_term",
    "estimate_K", "grad4",
    "EnhancerConfig", "clahe", "gain_offset", "gaussian_surround", "global_he",
    "guided_enhance", "homomorphic_filter", "msr_reflectance",
    "EvolutionTrace", "PdeParams", "StopDecision", "StoppingCriteria",
    "enhance", "evolve_step", "run_base_model", "run_hsi", "run_rgb",
    "stopping_decision",
    "RetinexDiffusionEnhancer",
    "read_image", "write_image",
    "EPS_LOG", "ChannelStats", "channel_stats", "from_log", "hsi_to_rgb",
    "hsv_to_rgb", "luminance", "nearest_rank_quantile", "normalize_percentile",
    "rgb_to_hsi", "rgb_to_hsv", "to_log",
    "METRIC_COLUMNS", "MetricReport", "avg_gradient", "cef", "colourfulness",
    "emec", "entropy", "entropy_derivatives", "gmsd", "hdi", "metric_report",
    "pqm", "rc",
    "__version__",
]
