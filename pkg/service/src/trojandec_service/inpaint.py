"""Mask-region restoration behind the /v1/restore contract.

The masked region is repainted with OpenCV's Telea inpainting; the pixels
the mask marks as kept are then re-imposed from the request image, so the
response is always consistent with the degraded observation bit-for-bit.
"""

from __future__ import annotations

import cv2
import numpy as np

INPAINT_RADIUS = 3


def restore_hyperparameters() -> dict:
    """Reported through /v1/info; clients never configure these."""
    return {"method": "telea", "radius": INPAINT_RADIUS}


def fill_masked_region(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Repaint pixels where mask == 0, keep the rest bit-exact.

    img: uint8 (H, W, C), C in {1, 3}; mask: uint8 (H, W, 1) with {0, 255}.
    """
    repaint = (mask[:, :, 0] == 0).astype(np.uint8)
    if not repaint.any():
        return img.copy()
    src = img[:, :, 0] if img.shape[2] == 1 else img
    out = cv2.inpaint(np.ascontiguousarray(src), repaint * 255,
                      INPAINT_RADIUS, cv2.INPAINT_TELEA)
    if out.ndim == 2:
        out = out[:, :, None]
    keep = mask[:, :, 0] != 0
    out[keep] = img[keep]
    return out
