"""Log-domain PDE evolution with entropy/quality-driven automatic stopping.

The evolved quantity is i = ln(channel + eps_log). Each explicit Euler step
applies three weighted forces:

    alpha * (f_target - i)        pull toward the enhancement drive
    beta  * (i - mean) / std      spread amplification around the mean
    lam   * D(i)                  anisotropic smoothing (conductance flux
                                  divergence, or curvature flow)

The controller records entropy and a perceptual quality score each
iteration and stops on the first of: smoothed entropy slope turning from
positive to negative, joint flatness of both series, a quality drop below
the running maximum, or the iteration cap. The returned image is the
recorded iterate with maximum entropy.
"""

from dataclasses import dataclass, field

import numpy as np

from .diffusion import DiffusionConfig, ad_flux_divergence, curvature_term
from .enhancers import EnhancerConfig, clahe, gain_offset, global_he, guided_enhance
from .imageops import (EPS_LOG, channel_stats, from_log, hsi_to_rgb, hsv_to_rgb,
                       rgb_to_hsi, rgb_to_hsv, to_log)
from .metrics import _smoothed_diff, entropy, entropy_derivatives, pqm
from .validation import check_plane, check_rgb_image, check_same_shape

_FLAT_SIGMA = 1e-9  # below this the spread force is skipped and noted

COLOUR_MODES = ("rgb", "hsi", "hsv")
TERM_FORMS = ("conductance", "curvature")
STOP_REASONS = ("entropy_peak", "flatness", "pqm_drop", "max_iter", "fixed_iter")


@dataclass(frozen=True)
class StoppingCriteria:
    """Thresholds for the automatic stopping controller.

    entropy_tol: flatness threshold on the raw entropy differences.
    pqm_tol: flatness threshold on the quality-score differences.
    pqm_drop: stop once the score falls this far below its running maximum.
    window: smoothing width for the entropy-slope sign test, and the number
        of consecutive flat iterations required for a flatness stop.
    """

    entropy_tol: float = 1e-3
    pqm_tol: float = 0.05
    pqm_drop: float = 0.5
    window: int = 2

    def __post_init__(self):
        if self.entropy_tol <= 0.0 or self.pqm_tol <= 0.0 or self.pqm_drop <= 0.0:
            raise ValueError("stopping thresholds must be positive")
        if int(self.window) < 1:
            raise ValueError("window must be at least 1")
        object.__setattr__(self, "window", int(self.window))


@dataclass(frozen=True)
class PdeParams:
    """Full parameter set for one evolution run.

    fixed_iter=None selects automatic stopping (capped at max_iter);
    a non-negative fixed_iter runs exactly that many steps.
    """

    alpha: float = 0.5
    beta: float = 0.1
    lam: float = 0.1
    dt: float = 0.1
    max_iter: int = 200
    fixed_iter: int = None
    colour_mode: str = "hsi"
    term_form: str = "conductance"
    eps_log: float = EPS_LOG
    enhancer: EnhancerConfig = field(default_factory=EnhancerConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    stop: StoppingCriteria = field(default_factory=StoppingCriteria)

    def __post_init__(self):
        if self.alpha < 0.0 or self.beta < 0.0 or self.lam < 0.0:
            raise ValueError("term weights must be non-negative")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")
        object.__setattr__(self, "max_iter", int(self.max_iter))
        if self.fixed_iter is not None:
            if int(self.fixed_iter) < 0:
                raise ValueError("fixed_iter must be non-negative")
            object.__setattr__(self, "fixed_iter", int(self.fixed_iter))
        if self.colour_mode not in COLOUR_MODES:
            raise ValueError(f"unknown colour mode: {self.colour_mode!r}")
        if self.term_form not in TERM_FORMS:
            raise ValueError(f"unknown term form: {self.term_form!r}")
        if self.eps_log <= 0.0:
            raise ValueError("eps_log must be positive")
        # Explicit Euler stability: the drive contributes alpha to the
        # Jacobian diagonal and the diffusion stencil at most 4*lam.
        if self.dt * (self.alpha + 4.0 * self.lam) > 1.0:
            raise ValueError("unstable step")


@dataclass
class EvolutionTrace:
    """Per-iteration record of one evolution run.

    entropy_initial / pqm_initial describe the input image before the first
    step; records start at n=1. After finalize(), d_entropy holds the
    window-smoothed first differences (the n-th entry is the smoothed
    E_n - E_{n-1}, with E_0 the initial entropy) and d2_entropy their
    forward differences padded with a trailing zero.
    """

    colour_mode: str
    window: int
    entropy_initial: float
    pqm_initial: float
    n: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    pqm: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    sigma: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    d_entropy: list = field(default_factory=list)
    d2_entropy: list = field(default_factory=list)
    stop_reason: str = None
    n_star: int = None

    def append(self, entropy_value, pqm_value, mu, sigma, note=""):
        self.n.append(len(self.n) + 1)
        self.entropy.append(float(entropy_value))
        self.pqm.append(float(pqm_value))
        self.mu.append(tuple(float(m) for m in mu))
        self.sigma.append(tuple(float(s) for s in sigma))
        self.notes.append(note)

    def __len__(self):
        return len(self.n)

    def finalize(self, stop_reason, n_star):
        if stop_reason not in STOP_REASONS:
            raise ValueError(f"unknown stop reason: {stop_reason!r}")
        self.stop_reason = stop_reason
        self.n_star = n_star
        series = [self.entropy_initial] + self.entropy
        if len(series) >= 3:
            d, d2 = entropy_derivatives(series, self.window)
            self.d_entropy = [float(v) for v in d]
            self.d2_entropy = [float(v) for v in d2] + [0.0]
        elif len(series) == 2:
            self.d_entropy = [series[1] - series[0]]
            self.d2_entropy = [0.0]
        else:
            self.d_entropy = []
            self.d2_entropy = []
        return self

    def rows(self):
        """Per-iteration dict rows for serialization."""
        for k in range(len(self.n)):
            yield {
                "iter": self.n[k],
                "entropy": self.entropy[k],
                "dE": self.d_entropy[k] if k < len(self.d_entropy) else 0.0,
                "d2E": self.d2_entropy[k] if k < len(self.d2_entropy) else 0.0,
                "pqm": self.pqm[k],
                "mu": float(np.mean(self.mu[k])),
                "sigma": float(np.mean(self.sigma[k])),
                "stop_reason": self.stop_reason if k == len(self.n) - 1 else "",
            }


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    reason: str = None
    n_star: int = None
    n_stop: int = None


def stopping_decision(trace, crit, max_iter=None):
    """Evaluate the stopping rules on a (possibly partial) trace.

    Rules, earliest firing iteration wins (ties broken in this order):
      entropy_peak: the window-smoothed entropy slope turns from positive
          to negative. The slope series starts at the initial-to-first
          difference, so a peak at n=1 is detectable.
      flatness: raw |dE| < entropy_tol and |dPQM| < pqm_tol for `window`
          consecutive iterations.
      pqm_drop: the score falls more than pqm_drop below its running max.
      max_iter: the record count has reached the cap (when given).

    The selected iterate n_star is the argmax of recorded entropy up to the
    firing iteration (earliest on ties).
    """
    m = len(trace)
    if m == 0:
        return StopDecision(False)
    e_series = np.asarray([trace.entropy_initial] + list(trace.entropy))
    raw_d = np.diff(e_series)
    smooth_d = _smoothed_diff(e_series, crit.window)
    p_series = np.asarray([trace.pqm_initial] + list(trace.pqm))
    raw_dp = np.diff(p_series)

    candidates = []
    for k in range(1, m):
        if smooth_d[k - 1] > 0.0 and smooth_d[k] < 0.0:
            candidates.append((k + 1, 0, "entropy_peak"))
            break
    streak = 0
    for k in range(m):
        if abs(raw_d[k]) < crit.entropy_tol and abs(raw_dp[k]) < crit.pqm_tol:
            streak += 1
            if streak >= crit.window:
                candidates.append((k + 1, 1, "flatness"))
                break
        else:
            streak = 0
    running_max = -np.inf
    for k in range(m):
        running_max = max(running_max, trace.pqm[k])
        if running_max - trace.pqm[k] > crit.pqm_drop:
            candidates.append((k + 1, 2, "pqm_drop"))
            break
    if max_iter is not None and m >= int(max_iter):
        candidates.append((int(max_iter), 3, "max_iter"))

    if not candidates:
        return StopDecision(False)
    n_stop, _, reason = min(candidates)
    n_star = int(np.argmax(trace.entropy[:n_stop])) + 1
    return StopDecision(True, reason, n_star, n_stop)


def evolve_step(i_log, params, f_target):
    """One explicit Euler step of the log-domain evolution.

    Zero-weight terms contribute exactly zero, so all-zero weights return
    the input values unchanged; the spread force is skipped when the
    channel standard deviation falls below 1e-9.
    """
    i_log = check_plane(i_log)
    f_target = check_plane(f_target)
    check_same_shape(i_log, f_target, "i_log", "f_target")
    rhs = np.zeros_like(i_log)
    if params.alpha > 0.0:
        rhs += params.alpha * (f_target - i_log)
    if params.beta > 0.0:
        st = channel_stats(i_log)
        if st.std >= _FLAT_SIGMA:
            rhs += params.beta * (i_log - st.mean) / st.std
    if params.lam > 0.0:
        if params.term_form == "conductance":
            d = ad_flux_divergence(i_log, params.diffusion)
        else:
            d = curvature_term(i_log, params.diffusion.eps_curv)
        rhs += params.lam * d
    return i_log + params.dt * rhs


def _spread_note(i_log, params):
    if params.beta > 0.0 and float(np.std(i_log)) < _FLAT_SIGMA:
        return "beta_skipped_flat_channel"
    return ""


def run_hsi(img, params):
    """Evolve the intensity (or value) channel of an RGB image.

    The image is converted to HSI or HSV per params.colour_mode; only the
    third plane is evolved, and the hue/saturation planes pass through
    untouched into the reconstruction. Automatic stopping monitors the
    entropy of the mapped-back channel and the quality score of the
    reconstructed RGB image each iteration; the returned image is the
    iterate with maximum recorded entropy.
    """
    img = check_rgb_image(img)
    if params.colour_mode == "hsv":
        fwd, inv = rgb_to_hsv, hsv_to_rgb
    elif params.colour_mode == "hsi":
        fwd, inv = rgb_to_hsi, hsi_to_rgb
    else:
        raise ValueError("run_hsi needs colour_mode 'hsi' or 'hsv'")
    hsx = fwd(img)
    hue, sat, i0 = hsx[..., 0], hsx[..., 1], hsx[..., 2]

    trace = EvolutionTrace(
        colour_mode=params.colour_mode,
        window=params.stop.window,
        entropy_initial=entropy(i0),
        pqm_initial=pqm(img),
    )
    i_log = to_log(i0, params.eps_log)
    best_disp = i0
    best_e = -np.inf
    reason = "max_iter"
    limit = params.max_iter if params.fixed_iter is None else params.fixed_iter

    for _ in range(limit):
        note = _spread_note(i_log, params)
        f_target = guided_enhance(i_log, params.enhancer, params.eps_log)
        i_log = evolve_step(i_log, params, f_target)
        disp = from_log(i_log, params.eps_log)
        e_val = entropy(disp)
        rgb_now = inv(np.dstack([hue, sat, disp]))
        st = channel_stats(i_log)
        trace.append(e_val, pqm(rgb_now), (st.mean,), (st.std,), note)
        if e_val > best_e:
            best_e, best_disp = e_val, disp
        if params.fixed_iter is None:
            decision = stopping_decision(trace, params.stop, params.max_iter)
            if decision.stop:
                reason = decision.reason
                break

    if params.fixed_iter is not None:
        reason = "fixed_iter"
        n_star = params.fixed_iter
        out_disp = from_log(i_log, params.eps_log) if len(trace) else i0
    else:
        n_star = int(np.argmax(trace.entropy)) + 1 if len(trace) else 0
        out_disp = best_disp
    trace.finalize(reason, n_star)
    out = inv(np.dstack([hue, sat, out_disp]))
    return out, trace


def run_rgb(img, params):
    """Evolve all three RGB channels independently in the log domain.

    With fixed_iter set (the mode's default usage) the run executes exactly
    that many steps and returns the final state. Without it the automatic
    controller is applied to the mean channel entropy, which is recorded in
    the trace notes as best-effort.
    """
    img = check_rgb_image(img)
    trace = EvolutionTrace(
        colour_mode="rgb",
        window=params.stop.window,
        entropy_initial=float(np.mean([entropy(img[..., c]) for c in range(3)])),
        pqm_initial=pqm(img),
    )
    logs = [to_log(img[..., c], params.eps_log) for c in range(3)]
    manual = params.fixed_iter is not None
    limit = params.fixed_iter if manual else params.max_iter
    best_e = -np.inf
    best_disp = img
    reason = "fixed_iter" if manual else "max_iter"

    for it in range(limit):
        notes = []
        for c in range(3):
            note = _spread_note(logs[c], params)
            if note:
                notes.append(f"ch{c}:{note}")
            f_target = guided_enhance(logs[c], params.enhancer, params.eps_log)
            logs[c] = evolve_step(logs[c], params, f_target)
        disp = np.dstack([from_log(l, params.eps_log) for l in logs])
        e_val = float(np.mean([entropy(disp[..., c]) for c in range(3)]))
        stats = [channel_stats(l) for l in logs]
        if it == 0 and not manual:
            notes.append("auto_stop_best_effort")
        trace.append(
            e_val, pqm(disp),
            tuple(s.mean for s in stats), tuple(s.std for s in stats),
            ";".join(notes),
        )
        if e_val > best_e:
            best_e, best_disp = e_val, disp
        if not manual:
            decision = stopping_decision(trace, params.stop, params.max_iter)
            if decision.stop:
                reason = decision.reason
                break

    if manual:
        n_star = params.fixed_iter
        out = (np.dstack([from_log(l, params.eps_log) for l in logs])
               if len(trace) else img)
    else:
        n_star = int(np.argmax(trace.entropy)) + 1 if len(trace) else 0
        out = best_disp
    trace.finalize(reason, n_star)
    return out, trace


_BASE_ENHANCERS = ("ghe", "clahe", "gain_offset")


def run_base_model(img, params, enhancer="ghe"):
    """Intensity-domain ancestor model: I += dt * (lam * curvature + f(I) - I).

    Runs exactly params.fixed_iter steps per channel (fixed_iter must be
    set), clipping to [0, 1] after each step so the enhancer always sees a
    valid plane. With lam=0, one step at dt=1 reproduces f(I) exactly.
    """
    img = check_rgb_image(img)
    if params.fixed_iter is None:
        raise ValueError("run_base_model needs fixed_iter")
    if enhancer == "ghe":
        f = lambda p: global_he(p, params.enhancer.bins)
    elif enhancer == "clahe":
        f = lambda p: clahe(p, params.enhancer.clahe_tiles,
                            params.enhancer.clahe_clip, params.enhancer.bins)
    elif enhancer == "gain_offset":
        f = lambda p: gain_offset(p, "percentile",
                                  p_lo=params.enhancer.stretch[0],
                                  p_hi=params.enhancer.stretch[1])
    else:
        raise ValueError(f"unknown base enhancer: {enhancer!r}")
    channels = []
    for c in range(3):
        plane = img[..., c].copy()
        for _ in range(params.fixed_iter):
            rhs = f(plane) - plane
            if params.lam > 0.0:
                rhs += params.lam * curvature_term(plane, params.diffusion.eps_curv)
            plane = np.clip(plane + params.dt * rhs, 0.0, 1.0)
        channels.append(plane)
    return np.dstack(channels)


def enhance(img, params=None):
    """Dispatch one evolution run by params.colour_mode."""
    params = params if params is not None else PdeParams()
    if params.colour_mode == "rgb":
        return run_rgb(img, params)
    return run_hsi(img, params)
