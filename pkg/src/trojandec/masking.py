"""Sliding occlusion masks: generation, application, and serialization.

A mask is a square region of size k at upper-left corner (a, b) together
with a random fill pattern. Applying a mask keeps the image outside the
square and replaces the square with the pattern. The mask set enumerates
all squares on a stride-s grid, row-major, so that any trigger patch no
larger than k is fully covered by at least one mask when s = 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryMismatchError, InvalidGeometryError, OutOfBoundsError
from .imaging import validate_image


@dataclass(eq=False)
class Mask:
    """Square occlusion at (a, b) with a k x k x C random fill pattern."""

    a: int
    b: int
    k: int
    image_size: int
    pattern: np.ndarray

    @property
    def channels(self) -> int:
        return int(self.pattern.shape[2])


@dataclass(eq=False)
class MaskSet:
    """Ordered masks on the stride grid, reproducible from (k, s, t, seed)."""

    masks: list[Mask] = field(repr=False)
    k: int
    s: int
    t: int
    channels: int
    seed: int

    def __len__(self) -> int:
        return len(self.masks)

    def __getitem__(self, i: int) -> Mask:
        return self.masks[i]

    def __iter__(self):
        return iter(self.masks)

    def to_json(self) -> str:
        """Serialize the defining parameters; patterns are re-derived on load."""
        doc = {"k": self.k, "s": self.s, "t": self.t, "channels": self.channels,
               "seed": self.seed}
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MaskSet":
        doc = json.loads(text)
        return generate_mask_set(doc["k"], doc["s"], doc["t"],
                                 channels=doc.get("channels", 3), seed=doc["seed"])


def mask_pattern_rng(seed: int, index: int) -> np.random.Generator:
    """Per-mask generator derived from (seed, index).

    Splitting by index keeps the set reproducible and makes pattern
    generation independent of enumeration order.
    """
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def create_mask(a: int, b: int, k: int, t: int, channels: int,
                rng: np.random.Generator) -> Mask:
    """Create one mask with pattern entries drawn uniform over [0, 255]."""
    if k < 1:
        raise InvalidGeometryError(f"mask size must be >= 1, got {k}")
    if a < 0 or b < 0 or a + k > t or b + k > t:
        raise OutOfBoundsError(
            f"mask ({a},{b}) of size {k} does not fit in a {t}x{t} image")
    pattern = rng.integers(0, 256, size=(k, k, channels), dtype=np.uint8)
    return Mask(a=a, b=b, k=k, image_size=t, pattern=pattern)


def generate_mask_set(k: int, s: int, t: int, channels: int = 3,
                      seed: int = 0) -> MaskSet:
    """Enumerate masks row-major over the stride-s grid with a + k <= t.

    The count is (floor((t - k) / s) + 1) ** 2. Each mask's pattern comes
    from its own (seed, index) stream.
    """
    if k < 1 or k > t:
        raise InvalidGeometryError(f"mask size {k} must satisfy 1 <= k <= t={t}")
    if s < 1:
        raise InvalidGeometryError(f"step size must be >= 1, got {s}")
    if channels not in (1, 3):
        raise InvalidGeometryError(f"channels must be 1 or 3, got {channels}")
    masks: list[Mask] = []
    index = 0
    a = 0
    while a + k <= t:
        b = 0
        while b + k <= t:
            masks.append(create_mask(a, b, k, t, channels, mask_pattern_rng(seed, index)))
            index += 1
            b += s
        a += s
    return MaskSet(masks=masks, k=k, s=s, t=t, channels=channels, seed=seed)


def apply_mask(img: np.ndarray, mask: Mask) -> np.ndarray:
    """Replace the mask square with its pattern; all other pixels pass through."""
    img = validate_image(img)
    h, w, c = img.shape
    if h != mask.image_size or w != mask.image_size or c != mask.channels:
        raise GeometryMismatchError(
            f"image {h}x{w}x{c} does not match mask geometry "
            f"{mask.image_size}x{mask.image_size}x{mask.channels}")
    out = img.copy()
    out[mask.a:mask.a + mask.k, mask.b:mask.b + mask.k, :] = mask.pattern
    return out


def binary_mask_image(mask: Mask) -> np.ndarray:
    """Single-channel image encoding the occlusion: 0 inside the square, 255 outside."""
    t = mask.image_size
    out = np.full((t, t, 1), 255, dtype=np.uint8)
    out[mask.a:mask.a + mask.k, mask.b:mask.b + mask.k, :] = 0
    return out
