"""Trigger generation, trigger embedding, and synthetic trojaned encoders.

The synthetic trojaned encoder is the ground-truth oracle for pipeline
tests: it behaves like the clean block-mean encoder until an embedded
trigger patch survives in the input, in which case it emits a fixed target
vector. Tolerance tau controls how much of the trigger must survive.
"""

from __future__ import annotations

import json
import pathlib
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .encoders import Encoder, block_mean_features, l2_normalize_rows
from .errors import GeometryMismatchError, OutOfBoundsError
from .imaging import round_half_up, validate_image


@dataclass(eq=False)
class Trigger:
    """A patch of pixels whose presence activates the trojan behavior."""

    pattern: np.ndarray  # (e_h, e_w, C) uint8
    seed: int | None = None

    @property
    def e_h(self) -> int:
        return int(self.pattern.shape[0])

    @property
    def e_w(self) -> int:
        return int(self.pattern.shape[1])

    @property
    def channels(self) -> int:
        return int(self.pattern.shape[2])


def random_trigger(e_h: int, e_w: int, channels: int = 3, seed: int = 0) -> Trigger:
    """Trigger with entries drawn uniform over [0, 255], reproducible by seed."""
    if e_h < 1 or e_w < 1:
        raise ValueError(f"trigger dims must be >= 1, got {e_h}x{e_w}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE]))
    pattern = rng.integers(0, 256, size=(e_h, e_w, channels), dtype=np.uint8)
    return Trigger(pattern=pattern, seed=seed)


def save_trigger(trig: Trigger, png_path: str | pathlib.Path) -> None:
    """Write the trigger pattern as PNG plus a JSON sidecar {e_h, e_w, seed}."""
    from .imaging import encode_png

    png_path = pathlib.Path(png_path)
    png_path.write_bytes(encode_png(trig.pattern))
    sidecar = {"e_h": trig.e_h, "e_w": trig.e_w, "seed": trig.seed}
    png_path.with_suffix(png_path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True))


def load_trigger(png_path: str | pathlib.Path) -> Trigger:
    from .imaging import decode_png

    png_path = pathlib.Path(png_path)
    pattern = decode_png(png_path.read_bytes())
    seed = None
    sidecar = png_path.with_suffix(png_path.suffix + ".json")
    if sidecar.exists():
        seed = json.loads(sidecar.read_text()).get("seed")
    return Trigger(pattern=pattern, seed=seed)


def embed_patch(img: np.ndarray, trig: Trigger, a: int, b: int) -> np.ndarray:
    """Paste the trigger rectangle at (a, b); all other pixels unchanged."""
    img = validate_image(img)
    h, w, c = img.shape
    if c != trig.channels:
        raise GeometryMismatchError(
            f"image has {c} channel(s), trigger has {trig.channels}")
    if a < 0 or b < 0 or a + trig.e_h > h or b + trig.e_w > w:
        raise OutOfBoundsError(
            f"trigger {trig.e_h}x{trig.e_w} at ({a},{b}) does not fit in {h}x{w}")
    out = img.copy()
    out[a:a + trig.e_h, b:b + trig.e_w, :] = trig.pattern
    return out


def embed_dynamic(img: np.ndarray, trig: Trigger,
                  rng: np.random.Generator) -> tuple[np.ndarray, int, int]:
    """Embed at a location drawn uniform over all valid corners."""
    img = validate_image(img)
    h, w, _ = img.shape
    if trig.e_h > h or trig.e_w > w:
        raise OutOfBoundsError(
            f"trigger {trig.e_h}x{trig.e_w} does not fit in {h}x{w}")
    a = int(rng.integers(0, h - trig.e_h + 1))
    b = int(rng.integers(0, w - trig.e_w + 1))
    return embed_patch(img, trig, a, b), a, b


def embed_blended(img: np.ndarray, pattern: np.ndarray, alpha: float) -> np.ndarray:
    """Mix a full-frame pattern into the image: round((1-a)*img + a*pattern)."""
    img = validate_image(img)
    pattern = validate_image(pattern)
    if img.shape != pattern.shape:
        raise GeometryMismatchError(
            f"pattern shape {pattern.shape} does not match image {img.shape}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    mixed = (1.0 - alpha) * img.astype(np.float64) + alpha * pattern.astype(np.float64)
    return np.clip(round_half_up(mixed), 0, 255).astype(np.uint8)


def default_target_vector(dim: int, seed: int = 0) -> np.ndarray:
    """Unit vector orthogonalized against the all-ones direction.

    Block-mean features of natural-ish images point near the all-ones
    direction, so this target has low cosine similarity to clean features.
    """
    if dim < 2:
        raise ValueError(f"target vector needs dim >= 2, got {dim}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF]))
    v = rng.standard_normal(dim)
    ones = np.full(dim, 1.0 / np.sqrt(dim))
    v = v - (v @ ones) * ones
    norm = np.linalg.norm(v)
    if norm < 1e-9:  # astronomically unlikely; redraw deterministically
        v = np.zeros(dim)
        v[0], v[1] = 1.0, -1.0
        norm = np.linalg.norm(v)
    return v / norm


class SyntheticTrojanEncoder(Encoder):
    """Block-mean encoder hijacked by a trigger patch.

    If any window of the input is within mean-absolute-difference ``tau``
    of the trigger pattern, the encoder returns the fixed target vector;
    otherwise it returns normalized block-mean features. tau = 0 demands an
    exact pixel match, so occluding a single trigger pixel almost surely
    disarms the trojan; tau ~ 21 tolerates up to about a quarter of the
    trigger being overwritten with random values.
    """

    def __init__(self, trigger: Trigger, target: np.ndarray, *,
                 input_size: int = 32, grid: int = 4, tau: float = 0.0):
        channels = trigger.channels
        self.input_size = input_size
        self.channels = channels
        self.grid = grid
        self.dim = grid * grid * channels
        self.trigger = trigger
        self.tau = float(tau)
        target = np.asarray(target, dtype=np.float64).ravel()
        if target.size != self.dim:
            raise ValueError(
                f"target dim {target.size} does not match feature dim {self.dim}")
        if trigger.e_h > input_size or trigger.e_w > input_size:
            raise ValueError("trigger larger than encoder input")
        if tau < 0:
            raise ValueError(f"tau must be >= 0, got {tau}")
        self.target = target

    @classmethod
    def from_params(cls, *, input_size: int = 32, channels: int = 3, grid: int = 4,
                    trigger_seed: int = 1, trigger_size=(10, 10), tau: float = 0.0,
                    target_seed: int = 2) -> "SyntheticTrojanEncoder":
        e_h, e_w = trigger_size
        trigger = random_trigger(e_h, e_w, channels, trigger_seed)
        target = default_target_vector(grid * grid * channels, target_seed)
        return cls(trigger, target, input_size=input_size, grid=grid, tau=tau)

    def _encode(self, batch: np.ndarray) -> np.ndarray:
        feats = l2_normalize_rows(block_mean_features(batch, self.grid))
        hit = self._trigger_present(batch)
        feats[hit] = self.target
        return feats

    def _trigger_present(self, batch: np.ndarray) -> np.ndarray:
        """Boolean per image: does some window sit within tau of the trigger?"""
        pat = self.trigger.pattern
        e_h, e_w, c = pat.shape
        n = batch.shape[0]
        budget = self.tau * e_h * e_w * c  # compare L1 sums, not means
        if self.tau == 0.0:
            return self._exact_match(batch)
        out = np.zeros(n, dtype=bool)
        pat16 = pat.astype(np.int16)
        step = max(1, 32_000_000 // (batch.shape[1] * batch.shape[2] * e_h * e_w * c))
        for start in range(0, n, step):
            chunk = batch[start:start + step].astype(np.int16)
            win = sliding_window_view(chunk, (e_h, e_w), axis=(1, 2))
            # win: (m, H-e_h+1, W-e_w+1, C, e_h, e_w); align pattern accordingly
            diffs = np.abs(win - pat16.transpose(2, 0, 1)[None, None, None])
            sums = diffs.sum(axis=(3, 4, 5), dtype=np.int64)
            out[start:start + step] = sums.min(axis=(1, 2)) <= budget
        return out

    def _exact_match(self, batch: np.ndarray) -> np.ndarray:
        """tau = 0 fast path: prefilter windows on the first trigger pixel."""
        pat = self.trigger.pattern
        e_h, e_w, _ = pat.shape
        n, h, w, _ = batch.shape
        wh, ww = h - e_h + 1, w - e_w + 1
        cand = (batch[:, :wh, :ww, :] == pat[0, 0]).all(axis=3)
        out = np.zeros(n, dtype=bool)
        for i, a, b in zip(*np.nonzero(cand)):
            if out[i]:
                continue
            if np.array_equal(batch[i, a:a + e_h, b:b + e_w, :], pat):
                out[i] = True
        return out


def synthetic_features(enc: SyntheticTrojanEncoder, img: np.ndarray) -> np.ndarray:
    """Single-image convenience wrapper over the encoder's batch interface."""
    return enc.features([img])[0]
