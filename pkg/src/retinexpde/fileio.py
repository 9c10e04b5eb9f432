"""PNG / binary-PPM image IO and atomic text output.

8-bit integers map to [0, 1] by v / 255 on read and round(v * 255),
clamped, on write, so an 8-bit round trip is lossless. All writes go
through a temporary file in the target directory followed by an atomic
rename, so a failing run never leaves a partial output behind.
"""

import os
import tempfile

import numpy as np
from PIL import Image

from .validation import check_rgb_image

_FORMATS = {".png": "PNG", ".ppm": "PPM"}


def _format_for(path):
    ext = os.path.splitext(path)[1].lower()
    if ext not in _FORMATS:
        raise OSError(f"unsupported image format: {path!r} (use .png or .ppm)")
    return _FORMATS[ext]


def read_image(path):
    """Read a PNG or binary PPM file as an (H, W, 3) float64 array in [0, 1]."""
    _format_for(path)
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    except OSError:
        raise
    except Exception as exc:  # Pillow raises assorted types on bad streams
        raise OSError(f"cannot decode image: {path}") from exc
    return arr / 255.0


def to_uint8(img):
    """Quantize a [0, 1] RGB array to 8 bits: round(v * 255), clamped."""
    img = check_rgb_image(img)
    return np.clip(np.round(img * 255.0), 0.0, 255.0).astype(np.uint8)


def write_image(path, img):
    """Write an RGB image as PNG or binary PPM, atomically."""
    fmt = _format_for(path)
    data = to_uint8(img)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_img_")
    try:
        with os.fdopen(fd, "wb") as fh:
            Image.fromarray(data, mode="RGB").save(fh, format=fmt)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(path, text):
    """Write a text file with LF line endings, atomically."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_txt_")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
