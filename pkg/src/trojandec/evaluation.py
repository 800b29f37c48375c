"""Corpus-level metrics, synthetic corpora, and the pattern-collision bound.

FPR/FNR score the detector alone; ACC/ASR score the whole pipeline through
a nearest-centroid stand-in for a downstream classifier. Corpora are
seeded smooth random fields blended with per-class prototypes, so
block-mean features are class-separable without any real dataset.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .attack import Trigger, embed_blended, embed_dynamic, embed_patch
from .detection import DetectionConfig, DetectionVerdict, detect
from .encoders import Encoder, cosine_similarity
from .errors import EmptyCorpusError, MissingCentroidError
from .imaging import resize, validate_image
from .masking import generate_mask_set
from .restoration import RestorationConfig, restore


@dataclass(eq=False)
class CorpusItem:
    image: np.ndarray
    label: int
    is_trojaned: bool
    target_label: int | None = None

    def __post_init__(self):
        validate_image(self.image)
        if self.is_trojaned and self.target_label is None:
            raise ValueError("trojaned items must carry a target label")


@dataclass(eq=False)
class LabeledCorpus:
    items: list[CorpusItem] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


@dataclass
class MetricsReport:
    """Rates plus the raw counts they were computed from.

    A rate is None when its denominator class is absent from the corpus.
    """

    fpr: float | None = None
    fnr: float | None = None
    acc: float | None = None
    asr: float | None = None
    counts: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"fpr": self.fpr, "fnr": self.fnr, "acc": self.acc,
                "asr": self.asr, "counts": self.counts, "config": self.config}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def prop1_bound(beta: float, e_h: int, e_w: int) -> float:
    """Lower bound on the probability that a random mask pattern stays
    L1-further than beta from a fixed trigger: max(0, 1 - (2*beta)^T / T!)
    with T = e_h * e_w and entries normalized to [0, 1]."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    T = e_h * e_w
    if T < 1:
        raise ValueError(f"trigger must have at least one entry, got {e_h}x{e_w}")
    if beta == 0.0:
        return 1.0
    log_mass = T * math.log(2.0 * beta) - math.lgamma(T + 1)
    if log_mass >= 0.0:
        return 0.0
    return max(0.0, 1.0 - math.exp(log_mass))


def prop1_monte_carlo(beta: float, e_h: int, e_w: int, trials: int,
                      seed: int = 0) -> float:
    """Empirical counterpart of prop1_bound at a fixed alignment.

    Draws one trigger and ``trials`` patterns with entries uniform on
    [0, 1]; returns the fraction of patterns whose L1 distance to the
    trigger exceeds beta.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    T = e_h * e_w
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1]))
    trigger = rng.uniform(0.0, 1.0, T)
    patterns = rng.uniform(0.0, 1.0, (trials, T))
    dist = np.abs(patterns - trigger).sum(axis=1)
    return float((dist > beta).mean())


def detect_corpus(corpus: LabeledCorpus, enc: Encoder,
                  cfg: DetectionConfig) -> list[DetectionVerdict]:
    """Run detection over every item, corpus order preserved."""
    if len(corpus) == 0:
        raise EmptyCorpusError("corpus has no items")
    return [detect(item.image, enc, cfg) for item in corpus]


def eval_detection(corpus: LabeledCorpus, enc: Encoder,
                   cfg: DetectionConfig) -> MetricsReport:
    """False-positive and false-negative rates of the detector."""
    verdicts = detect_corpus(corpus, enc, cfg)
    clean_total = clean_flagged = troj_total = troj_missed = 0
    for item, verdict in zip(corpus, verdicts):
        if item.is_trojaned:
            troj_total += 1
            troj_missed += not verdict.is_trojaned
        else:
            clean_total += 1
            clean_flagged += verdict.is_trojaned
    counts = {"clean_total": clean_total, "clean_flagged": clean_flagged,
              "trojaned_total": troj_total, "trojaned_missed": troj_missed}
    return MetricsReport(
        fpr=clean_flagged / clean_total if clean_total else None,
        fnr=troj_missed / troj_total if troj_total else None,
        counts=counts, config=cfg.to_dict())


def write_verdicts_csv(path, corpus: LabeledCorpus,
                       verdicts: list[DetectionVerdict]) -> None:
    """Per-item verdict table: index, truth labels, and the flag raised."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "label", "is_trojaned", "flagged", "k_star",
                         "argmin_index"])
        for i, (item, v) in enumerate(zip(corpus, verdicts)):
            writer.writerow([i, item.label, int(item.is_trojaned),
                             int(v.is_trojaned), v.k_star, v.argmin_index])


def nearest_centroid_label(feature: np.ndarray, centroids: dict) -> int:
    """Label of the centroid with the highest cosine similarity.

    Ties go to the smallest label so classification is deterministic.
    """
    best_label = None
    best_sim = -np.inf
    for label in sorted(centroids):
        sim = cosine_similarity(feature, centroids[label])
        if sim > best_sim:
            best_sim = sim
            best_label = label
    return best_label


def class_centroids(corpus: LabeledCorpus, enc: Encoder) -> dict:
    """Mean feature vector of the clean items of each label."""
    feats: dict[int, list[np.ndarray]] = {}
    for item in corpus:
        if item.is_trojaned:
            continue
        feats.setdefault(item.label, []).append(enc.features([item.image])[0])
    return {label: np.mean(vs, axis=0) for label, vs in feats.items()}


def eval_end_to_end(corpus: LabeledCorpus, enc: Encoder, cfg: DetectionConfig,
                    centroids: dict, restore_cfg: RestorationConfig | None = None,
                    defended: bool = True) -> MetricsReport:
    """Accuracy on clean items and attack success on trojaned items after
    the detect-restore-classify pipeline (or without it, defended=False)."""
    if len(corpus) == 0:
        raise EmptyCorpusError("corpus has no items")
    needed = {item.label for item in corpus}
    needed |= {item.target_label for item in corpus if item.is_trojaned}
    missing = needed - set(centroids)
    if missing:
        raise MissingCentroidError(f"no centroid for label(s) {sorted(missing)}")
    restore_cfg = restore_cfg or RestorationConfig()
    masks = None
    clean_total = clean_correct = troj_total = troj_hits = 0
    for item in corpus:
        img = item.image
        if defended:
            if masks is None:
                h, w, c = img.shape
                masks = generate_mask_set(cfg.k, cfg.s, h, channels=c, seed=cfg.seed)
            verdict = detect(img, enc, cfg)
            img = restore(img, verdict, masks, restore_cfg).image
        pred = nearest_centroid_label(enc.features([img])[0], centroids)
        if item.is_trojaned:
            troj_total += 1
            troj_hits += pred == item.target_label
        else:
            clean_total += 1
            clean_correct += pred == item.label
    counts = {"clean_total": clean_total, "clean_correct": clean_correct,
              "trojaned_total": troj_total, "trojaned_as_target": troj_hits}
    return MetricsReport(
        acc=clean_correct / clean_total if clean_total else None,
        asr=troj_hits / troj_total if troj_total else None,
        counts=counts,
        config={**cfg.to_dict(), "defended": defended,
                "strategy": restore_cfg.strategy})


def smooth_field(t: int, channels: int, rng: np.random.Generator,
                 cells: int = 4) -> np.ndarray:
    """Low-frequency random image: a coarse random grid upsampled bilinearly."""
    coarse = rng.integers(0, 256, size=(cells, cells, channels), dtype=np.uint8)
    return resize(coarse, t)


def build_corpus(n_clean: int, n_trojaned: int, trigger: Trigger | None,
                 target_label: int = 0, *, t: int = 32, channels: int = 3,
                 n_classes: int = 4, noise: float = 0.25,
                 placement="fixed", seed: int = 0) -> LabeledCorpus:
    """Synthetic labeled corpus of smooth class-prototype images.

    Clean items cycle through all classes; trojaned items come from
    non-target classes and carry the trigger. ``placement`` is "fixed"
    (bottom-right corner), an (a, b) tuple, or "random" (uniform location
    per item).
    """
    if n_trojaned > 0 and trigger is None:
        raise ValueError("a trigger is required to build trojaned items")
    if n_trojaned > 0 and n_classes < 2:
        raise ValueError("need a non-target class to draw trojaned items from")
    protos = {c: smooth_field(t, channels,
                              np.random.default_rng(np.random.SeedSequence([seed, 0x7, c])),
                              cells=4)
              for c in range(n_classes)}
    items: list[CorpusItem] = []
    for i in range(n_clean):
        label = i % n_classes
        items.append(CorpusItem(image=_corpus_image(protos[label], noise, seed, 0xB, i),
                                label=label, is_trojaned=False))
    non_target = [c for c in range(n_classes) if c != target_label]
    for i in range(n_trojaned):
        label = non_target[i % len(non_target)]
        img = _corpus_image(protos[label], noise, seed, 0xD, i)
        if placement == "fixed":
            a, b = t - trigger.e_h, t - trigger.e_w
            img = embed_patch(img, trigger, a, b)
        elif placement == "random":
            rng = np.random.default_rng(np.random.SeedSequence([seed, 0x11, i]))
            img, _, _ = embed_dynamic(img, trigger, rng)
        else:
            a, b = placement
            img = embed_patch(img, trigger, a, b)
        items.append(CorpusItem(image=img, label=label, is_trojaned=True,
                                target_label=target_label))
    return LabeledCorpus(items=items)


def _corpus_image(proto: np.ndarray, noise: float, seed: int, tag: int,
                  index: int) -> np.ndarray:
    t, _, channels = proto.shape
    rng = np.random.default_rng(np.random.SeedSequence([seed, tag, index]))
    texture = smooth_field(t, channels, rng, cells=8)
    return embed_blended(proto, texture, noise)
