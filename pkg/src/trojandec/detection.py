"""Occlusion metadata extraction and the gap-statistic trojan decision.

The metadata of an image is the sequence of cosine similarities between
the features of each masked variant and the features of the image itself.
A trojaned input splits that sequence into two clusters (masks that break
the trigger vs. masks that miss it); a clean input yields one. The cluster
count is chosen with the gap statistic over exact 1-D k-means, restricted
to K in {1, 2}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .encoders import Encoder, encoder_from_config
from .errors import (
    DegenerateRangeError,
    GeometryMismatchError,
    TooFewPointsError,
    ZeroVectorError,
)
from .imaging import validate_image
from .masking import MaskSet, apply_mask, generate_mask_set

LOG_FLOOR = 1e-12          # floor inside logs; W = 0 occurs for pure clusters
DEGENERATE_RANGE = 1e-6    # metadata flatter than this is unambiguously clean


@dataclass
class DetectionConfig:
    """Knobs for one detection run; all randomness flows from ``seed``."""

    k: int = 15
    s: int = 1
    B: int = 100
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "DetectionConfig":
        return cls(k=int(doc.get("k", 15)), s=int(doc.get("s", 1)),
                   B=int(doc.get("B", 100)), seed=int(doc.get("seed", 0)))

    def to_dict(self) -> dict:
        return {"k": self.k, "s": self.s, "B": self.B, "seed": self.seed}


def load_config(text: str) -> tuple[DetectionConfig, Encoder | None]:
    """Parse a JSON config document {k, s, B, seed, encoder: {...}}.

    Returns the detection config and, when an ``encoder`` section is
    present, the constructed encoder.
    """
    doc = json.loads(text)
    cfg = DetectionConfig.from_dict(doc)
    enc = encoder_from_config(doc["encoder"]) if "encoder" in doc else None
    return cfg, enc


@dataclass
class GapTrace:
    """Dispersion and gap values for K = 1 and K = 2 (index 0 holds K=1)."""

    W: tuple[float, float]
    G: tuple[float, float]
    s_prime: tuple[float, float]
    B: int
    seed: int

    def to_dict(self) -> dict:
        return {"W": list(self.W), "G": list(self.G),
                "s_prime": list(self.s_prime), "B": self.B, "seed": self.seed}


@dataclass
class DetectionVerdict:
    """Outcome of one detection run.

    ``trace`` is None when the metadata was too flat to cluster (the run
    short-circuits to clean). ``argmin_index`` points at the mask whose
    variant was least similar to the original image; it seeds restoration.
    """

    is_trojaned: bool
    k_star: int
    trace: GapTrace | None
    argmin_index: int

    def to_dict(self) -> dict:
        return {
            "is_trojaned": self.is_trojaned,
            "k_star": self.k_star,
            "G": list(self.trace.G) if self.trace else None,
            "s_prime": list(self.trace.s_prime) if self.trace else None,
            "argmin_index": self.argmin_index,
        }


def extract_metadata(img: np.ndarray, enc: Encoder, masks: MaskSet) -> np.ndarray:
    """Similarity of each masked variant to the original, index-aligned.

    Issues one feature query per mask plus exactly one for the original.
    """
    img = validate_image(img)
    h, w, _ = img.shape
    if h != masks.t or w != masks.t:
        raise GeometryMismatchError(
            f"image {h}x{w} does not match mask set size {masks.t}")
    masked = [apply_mask(img, m) for m in masks]
    feats = enc.features(masked)
    base = enc.features([img])[0]
    base_norm = float(np.linalg.norm(base))
    norms = np.linalg.norm(feats, axis=1)
    if base_norm == 0.0 or np.any(norms == 0.0):
        raise ZeroVectorError("encoder produced an all-zero feature vector")
    sims = (feats @ base) / (norms * base_norm)
    return np.clip(sims, -1.0, 1.0)


def kmeans_1d(values, K: int) -> tuple[np.ndarray, float]:
    """Exact 1-D k-means for K in {1, 2}.

    For K = 2 the optimum is found by scanning every threshold split of the
    sorted values (the optimal 2-partition of scalars is always contiguous
    in sorted order), minimizing total within-cluster squared deviation.
    Ties go to the smallest split index. Returns (labels, W) with labels in
    original order; for K = 2 label 0 is the lower cluster.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    n = v.size
    if K not in (1, 2):
        raise ValueError(f"K must be 1 or 2, got {K}")
    if n < K:
        raise TooFewPointsError(f"need at least {K} points, got {n}")
    if K == 1:
        return np.zeros(n, dtype=np.intp), float(((v - v.mean()) ** 2).sum())
    order = np.argsort(v, kind="stable")
    sv = v[order]
    ps = np.concatenate(([0.0], np.cumsum(sv)))
    ps2 = np.concatenate(([0.0], np.cumsum(sv * sv)))
    m = np.arange(1, n)  # split: left = sv[:m], right = sv[m:]
    left = ps2[m] - ps[m] ** 2 / m
    right = (ps2[n] - ps2[m]) - (ps[n] - ps[m]) ** 2 / (n - m)
    total = np.maximum(left, 0.0) + np.maximum(right, 0.0)
    best = int(np.argmin(total))
    labels_sorted = (np.arange(n) >= m[best]).astype(np.intp)
    labels = np.empty(n, dtype=np.intp)
    labels[order] = labels_sorted
    return labels, float(total[best])


def gap_statistic(values, B: int = 100, seed: int = 0) -> GapTrace:
    """Gap statistic over K in {1, 2} with uniform reference sets.

    Each of the B reference sets redraws |values| points uniform over
    [min(values), max(values)] from a stream keyed by (seed, K, b), so
    results do not depend on evaluation order. Logs are floored at 1e-12
    because pure clusters make W vanish.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 2:
        raise TooFewPointsError(f"gap statistic needs >= 2 values, got {v.size}")
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        raise DegenerateRangeError("all values identical; no reference range")
    W: list[float] = []
    G: list[float] = []
    s_prime: list[float] = []
    for K in (1, 2):
        _, w_k = kmeans_1d(v, K)
        ref_logs = np.empty(B)
        for b in range(B):
            rng = np.random.default_rng(np.random.SeedSequence([seed, K, b]))
            ref = rng.uniform(lo, hi, v.size)
            _, w_ref = kmeans_1d(ref, K)
            ref_logs[b] = math.log(max(w_ref, LOG_FLOOR))
        gap = float(ref_logs.mean() - math.log(max(w_k, LOG_FLOOR)))
        sd = float(ref_logs.std())  # population form; 0 when B = 1
        W.append(float(w_k))
        G.append(gap)
        s_prime.append(sd * math.sqrt(1.0 + 1.0 / B))
    return GapTrace(W=(W[0], W[1]), G=(G[0], G[1]),
                    s_prime=(s_prime[0], s_prime[1]), B=B, seed=seed)


def decide(trace: GapTrace) -> int:
    """Smallest K whose gap is within one adjusted deviation of the next."""
    return 1 if trace.G[0] >= trace.G[1] - trace.s_prime[1] else 2


def detect(img: np.ndarray, enc: Encoder, cfg: DetectionConfig) -> DetectionVerdict:
    """Full decision for one image: mask, query, cluster, decide."""
    img = validate_image(img)
    h, w, c = img.shape
    if h != w:
        raise GeometryMismatchError(f"detection needs square images, got {h}x{w}")
    masks = generate_mask_set(cfg.k, cfg.s, h, channels=c, seed=cfg.seed)
    sims = extract_metadata(img, enc, masks)
    argmin_index = int(np.argmin(sims))
    if float(sims.max() - sims.min()) < DEGENERATE_RANGE:
        return DetectionVerdict(is_trojaned=False, k_star=1, trace=None,
                                argmin_index=argmin_index)
    trace = gap_statistic(sims, B=cfg.B, seed=cfg.seed)
    k_star = decide(trace)
    return DetectionVerdict(is_trojaned=(k_star == 2), k_star=k_star,
                            trace=trace, argmin_index=argmin_index)
