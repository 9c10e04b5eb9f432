"""Scikit-learn style wrapper around the evolution engine."""

from sklearn.base import BaseEstimator, TransformerMixin

from .diffusion import DiffusionConfig
from .enhancers import EnhancerConfig
from .engine import PdeParams, StoppingCriteria, run_hsi, run_rgb
from .imageops import EPS_LOG
from .validation import check_rgb_image


class RetinexDiffusionEnhancer(BaseEstimator, TransformerMixin):
    """Illumination-correcting image enhancer with automatic stopping.

    transform() maps an (H, W, 3) RGB array in [0, 1] to its enhanced
    counterpart. The run diagnostics are exposed afterwards as trace_,
    n_iterations_ (the selected iterate) and stop_reason_.

    Parameters mirror PdeParams and its sub-configs; see those dataclasses
    for semantics. fixed_iter=None selects automatic stopping.
    """

    def __init__(self, alpha=0.5, beta=0.1, lam=0.1, dt=0.1,
                 colour_mode="hsi", max_iter=200, fixed_iter=None,
                 term_form="conductance", conductance="exponential", K="auto",
                 msr_scales=None, msr_weights=None, clahe_tiles=(8, 8),
                 clahe_clip=0.01, stretch=(0.01, 0.99), bins=256,
                 eps_log=EPS_LOG, entropy_tol=1e-3, pqm_tol=0.05,
                 pqm_drop=0.5, window=2):
        self.alpha = alpha
        self.beta = beta
        self.lam = lam
        self.dt = dt
        self.colour_mode = colour_mode
        self.max_iter = max_iter
        self.fixed_iter = fixed_iter
        self.term_form = term_form
        self.conductance = conductance
        self.K = K
        self.msr_scales = msr_scales
        self.msr_weights = msr_weights
        self.clahe_tiles = clahe_tiles
        self.clahe_clip = clahe_clip
        self.stretch = stretch
        self.bins = bins
        self.eps_log = eps_log
        self.entropy_tol = entropy_tol
        self.pqm_tol = pqm_tol
        self.pqm_drop = pqm_drop
        self.window = window

    def build_params(self):
        """Validated PdeParams assembled from the flat constructor params."""
        return PdeParams(
            alpha=self.alpha,
            beta=self.beta,
            lam=self.lam,
            dt=self.dt,
            max_iter=self.max_iter,
            fixed_iter=self.fixed_iter,
            colour_mode=self.colour_mode,
            term_form=self.term_form,
            eps_log=self.eps_log,
            enhancer=EnhancerConfig(
                msr_scales=self.msr_scales,
                msr_weights=self.msr_weights,
                clahe_tiles=self.clahe_tiles,
                clahe_clip=self.clahe_clip,
                stretch=self.stretch,
                bins=self.bins,
            ),
            diffusion=DiffusionConfig(kind=self.conductance, K=self.K),
            stop=StoppingCriteria(
                entropy_tol=self.entropy_tol,
                pqm_tol=self.pqm_tol,
                pqm_drop=self.pqm_drop,
                window=self.window,
            ),
        )

    def fit(self, X, y=None):
        """Validate the input and parameter set; the enhancer is stateless."""
        check_rgb_image(X)
        self.build_params()
        return self

    def transform(self, X):
        """Run the evolution on one RGB image and return the enhanced image."""
        params = self.build_params()
        X = check_rgb_image(X)
        if params.colour_mode == "rgb":
            out, trace = run_rgb(X, params)
        else:
            out, trace = run_hsi(X, params)
        self.trace_ = trace
        self.n_iterations_ = trace.n_star
        self.stop_reason_ = trace.stop_reason
        return out
