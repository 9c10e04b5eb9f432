"""Input validation helpers shared by every public operation."""

import numpy as np


def check_plane(p, name="plane"):
    """Coerce to a 2-D float64 array and reject empty or non-finite input.

    Returns the coerced array (a view where possible, a copy otherwise).
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_unit_plane(p, name="plane"):
    """check_plane plus a [0, 1] range check with a small float tolerance."""
    arr = check_plane(p, name)
    if arr.min() < -1e-9 or arr.max() > 1.0 + 1e-9:
        raise ValueError(f"{name} values must lie in [0, 1]")
    # tolerated overshoot is clipped so downstream ops see a clean range
    return np.clip(arr, 0.0, 1.0)


def check_rgb_image(img, name="image"):
    """Coerce to an (H, W, 3) float64 array with values in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < -1e-9 or arr.max() > 1.0 + 1e-9:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def check_same_shape(a, b, name_a="first", name_b="second"):
    if a.shape != b.shape:
        raise ValueError(
            f"{name_a} and {name_b} must share dimensions, "
            f"got {a.shape} vs {b.shape}"
        )
