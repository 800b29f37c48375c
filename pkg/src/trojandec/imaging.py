"""Canonical image representation, lossless PNG I/O, and bilinear resizing.

Every stage of the pipeline works on a single pixel format: a uint8 numpy
array of shape ``(height, width, channels)`` with ``channels`` equal to 1
(grayscale) or 3 (RGB). PNG (8-bit grayscale or RGB, no alpha) is the only
on-disk format.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image as _PilImage
from PIL import UnidentifiedImageError

from .errors import MalformedPngError, UnsupportedPngVariantError

_SUPPORTED_MODES = {"L": 1, "RGB": 3}


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check the canonical-format invariants and return the array.

    Raises ValueError when the array is not uint8 with shape (H, W, C),
    C in {1, 3} and H, W >= 1.
    """
    if not isinstance(img, np.ndarray):
        raise ValueError(f"image must be a numpy array, got {type(img).__name__}")
    if img.dtype != np.uint8:
        raise ValueError(f"image dtype must be uint8, got {img.dtype}")
    if img.ndim != 3:
        raise ValueError(f"image must have shape (H, W, C), got {img.shape}")
    h, w, c = img.shape
    if c not in (1, 3):
        raise ValueError(f"channel count must be 1 or 3, got {c}")
    if h < 1 or w < 1:
        raise ValueError(f"image must be at least 1x1, got {h}x{w}")
    return img


def round_half_up(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer with halves going up (0.5 -> 1.0)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def decode_png(data: bytes) -> np.ndarray:
    """Decode 8-bit grayscale or RGB PNG bytes into a canonical image.

    Raises MalformedPngError for bytes that are not a PNG and
    UnsupportedPngVariantError for PNG variants outside 8-bit L/RGB
    (16-bit depth, palette, any alpha channel).
    """
    try:
        with _PilImage.open(io.BytesIO(data)) as im:
            fmt = im.format
            mode = im.mode
            if fmt == "PNG" and mode in _SUPPORTED_MODES:
                im.load()
                arr = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise MalformedPngError("bytes are not a decodable image") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise MalformedPngError(f"corrupt PNG stream: {exc}") from exc
    if fmt != "PNG":
        raise MalformedPngError(f"expected PNG data, found {fmt or 'unknown format'}")
    if mode not in _SUPPORTED_MODES:
        raise UnsupportedPngVariantError(
            f"PNG mode {mode!r} not supported; expected 8-bit grayscale or RGB"
        )
    if arr.ndim == 2:
        arr = arr[:, :, None]
    # PIL hands back a read-only view; pipeline stages mutate copies freely
    return validate_image(arr.copy(order="C"))


def encode_png(img: np.ndarray) -> bytes:
    """Encode a canonical image losslessly as PNG bytes."""
    img = validate_image(img)
    if img.shape[2] == 1:
        pil = _PilImage.fromarray(img[:, :, 0], mode="L")
    else:
        pil = _PilImage.fromarray(img, mode="RGB")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def resize(img: np.ndarray, target: int) -> np.ndarray:
    """Resize to a square ``target x target`` image by bilinear interpolation.

    Sample points use half-pixel-center alignment; values are rounded half
    up and clamped to [0, 255], so constant images stay constant and output
    values never leave the input range.
    """
    img = validate_image(img)
    if target < 1:
        raise ValueError(f"target size must be >= 1, got {target}")
    h, w, _ = img.shape
    if h == target and w == target:
        return img.copy()
    out = _bilinear(img.astype(np.float64), target)
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


def _bilinear(src: np.ndarray, target: int) -> np.ndarray:
    h, w, _ = src.shape
    ys = np.clip((np.arange(target) + 0.5) * h / target - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(target) + 0.5) * w / target - 0.5, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    p00 = src[y0[:, None], x0[None, :]]
    p01 = src[y0[:, None], x1[None, :]]
    p10 = src[y1[:, None], x0[None, :]]
    p11 = src[y1[:, None], x1[None, :]]
    return (p00 * (1.0 - wy) * (1.0 - wx) + p01 * (1.0 - wy) * wx
            + p10 * wy * (1.0 - wx) + p11 * wy * wx)
