"""Base64 PNG payload handling for the wire protocol."""

from __future__ import annotations

import base64
import binascii
import io

import numpy as np
from PIL import Image as PilImage
from PIL import UnidentifiedImageError


class PayloadError(ValueError):
    """Client sent something that is not an 8-bit L/RGB PNG."""


def decode_payload(b64: str) -> np.ndarray:
    """b64 PNG string -> uint8 array of shape (H, W, C), C in {1, 3}."""
    try:
        raw = base64.b64decode(b64, validate=True)
    except (binascii.Error, TypeError) as exc:
        raise PayloadError(f"invalid base64: {exc}") from exc
    try:
        with PilImage.open(io.BytesIO(raw)) as im:
            if im.format != "PNG":
                raise PayloadError(f"expected PNG, got {im.format or 'unknown'}")
            if im.mode not in ("L", "RGB"):
                raise PayloadError(f"unsupported PNG mode {im.mode!r}")
            arr = np.asarray(im, dtype=np.uint8).copy()
    except UnidentifiedImageError as exc:
        raise PayloadError("payload is not a decodable image") from exc
    except OSError as exc:
        raise PayloadError(f"corrupt PNG: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def encode_payload(img: np.ndarray) -> str:
    """uint8 (H, W, C) array -> b64 PNG string (lossless)."""
    if img.ndim != 3 or img.shape[2] not in (1, 3) or img.dtype != np.uint8:
        raise PayloadError(f"cannot encode array of shape {img.shape}/{img.dtype}")
    pil = PilImage.fromarray(img[:, :, 0] if img.shape[2] == 1 else img)
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")
