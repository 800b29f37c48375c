"""Acceptance gate: one test per release criterion, each printing a
PASS/FAIL line with the measured numbers (run with -s to stream them)."""

import json
import time

import numpy as np
import pytest

from trojandec.attack import (
    SyntheticTrojanEncoder,
    default_target_vector,
    random_trigger,
)
from trojandec.detection import (
    DetectionConfig,
    decide,
    detect,
    gap_statistic,
    kmeans_1d,
)
from trojandec.encoders import Encoder
from trojandec.errors import OutOfBoundsError
from trojandec.evaluation import (
    build_corpus,
    class_centroids,
    eval_detection,
    eval_end_to_end,
    prop1_bound,
    prop1_monte_carlo,
)
from trojandec.masking import binary_mask_image, create_mask, generate_mask_set, mask_pattern_rng
from trojandec.restoration import (
    REMOTE_DIFFUSION,
    RestorationRequest,
    inpaint_harmonic,
    restore_remote,
)

QUARTER_TAU = (256.0 / 3.0) / 4.0  # tolerate ~1/4 of the trigger occluded


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def attack_setup():
    trigger = random_trigger(10, 10, 3, seed=1)
    target = default_target_vector(48, seed=2)
    encoder = SyntheticTrojanEncoder(trigger, target, input_size=32, grid=4, tau=0.0)
    corpus = build_corpus(200, 200, trigger, target_label=0, seed=0,
                          placement="fixed")
    return trigger, encoder, corpus


def test_criterion_1_mask_count_formula():
    start = time.time()
    assert len(generate_mask_set(15, 1, 32, seed=0)) == 324
    assert len(generate_mask_set(150, 10, 224, seed=0)) == 64
    checked = 0
    for t in range(1, 17):
        for k in range(1, t + 1):
            for s in range(1, t + 1):
                ms = generate_mask_set(k, s, t, channels=1, seed=0)
                axis = list(range(0, t - k + 1, s))
                assert len(ms) == (((t - k) // s) + 1) ** 2 == len(axis) ** 2
                assert [(m.a, m.b) for m in ms] == [(a, b) for a in axis for b in axis]
                assert all(m.a + k <= t and m.b + k <= t for m in ms)
                checked += 1
    # one out-of-range probe to pin the failure mode as well
    with pytest.raises(OutOfBoundsError):
        create_mask(3, 0, 14, 16, 1, mask_pattern_rng(0, 0))
    elapsed = time.time() - start
    report("criterion 1 (mask-count formula)", elapsed < 1.0,
           f"324/64 counts exact, {checked} (k,s,t) triples bounds-checked "
           f"in {elapsed:.2f}s (< 1s)")


def test_criterion_2_exact_clustering_vs_bruteforce():
    start = time.time()
    membership = {}
    for n in range(2, 13):
        bits = np.arange(1, 2 ** n - 1, dtype=np.uint32)
        membership[n] = ((bits[:, None] >> np.arange(n)) & 1).astype(bool)
    rng = np.random.default_rng(2024)
    mismatches = 0
    for trial in range(1000):
        n = int(rng.integers(2, 13))
        if trial % 3 == 0:
            v = rng.integers(0, 5, n).astype(float)  # duplicate-heavy
        else:
            v = rng.uniform(-1.0, 1.0, n)
        _, w = kmeans_1d(v, 2)
        M = membership[n]
        n1 = M.sum(axis=1)
        s1 = M @ v
        s2 = M @ (v * v)
        t1, t2 = v.sum(), (v * v).sum()
        cost = (s2 - s1 ** 2 / n1) + ((t2 - s2) - (t1 - s1) ** 2 / (n - n1))
        best = float(cost.min())
        if not np.isclose(w, max(best, 0.0), rtol=1e-9, atol=1e-9):
            mismatches += 1
    elapsed = time.time() - start
    report("criterion 2 (exact 1-D 2-means)", mismatches == 0 and elapsed < 10.0,
           f"{mismatches} mismatches over 1000 sequences vs exhaustive "
           f"2-partitions in {elapsed:.2f}s (< 10s)")


def test_criterion_3_gap_statistic_separation():
    start = time.time()
    two = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        vals = np.concatenate([0.95 + 0.005 * rng.standard_normal(162),
                               0.55 + 0.005 * rng.standard_normal(162)])
        two += decide(gap_statistic(vals, B=100, seed=seed)) == 2
    uniform = (np.arange(324) + 0.5) / 324.0
    ones = sum(decide(gap_statistic(uniform, B=100, seed=seed)) == 1
               for seed in range(100))
    elapsed = time.time() - start
    report("criterion 3 (gap-statistic separation)",
           two == 100 and ones >= 95 and elapsed < 30.0,
           f"bimodal K*=2 in {two}/100 seeds, uniform K*=1 in {ones}/100 "
           f"(needs >= 95) in {elapsed:.1f}s (< 30s)")


def test_criterion_4_detection_rates(attack_setup):
    start = time.time()
    _, encoder, corpus = attack_setup
    rep = eval_detection(corpus, encoder, DetectionConfig())
    elapsed = time.time() - start
    report("criterion 4 (FPR/FNR analog)",
           rep.fpr <= 0.02 and rep.fnr <= 0.02 and elapsed < 300.0,
           f"FPR={rep.fpr:.4f} FNR={rep.fnr:.4f} on 200+200 images "
           f"in {elapsed:.0f}s (< 300s)")


def test_criterion_5_restoration_rates(attack_setup):
    _, encoder, corpus = attack_setup
    centroids = class_centroids(corpus, encoder)
    centroids[0] = encoder.target  # the downstream head learned the trojan target
    cfg = DetectionConfig()
    undefended = eval_end_to_end(corpus, encoder, cfg, centroids, defended=False)
    defended = eval_end_to_end(corpus, encoder, cfg, centroids, defended=True)
    degradation = undefended.acc - defended.acc
    ok = (undefended.asr == 1.0 and defended.asr <= 0.05
          and degradation <= 0.01 + 1e-12)
    report("criterion 5 (ASR suppression)", ok,
           f"ASR {undefended.asr:.3f} -> {defended.asr:.3f} (needs <= 0.05), "
           f"clean ACC {undefended.acc:.3f} -> {defended.acc:.3f} "
           f"(degradation {degradation * 100:.2f}pp, needs <= 1pp)")


def test_criterion_6_adaptive_attacks():
    cfg = DetectionConfig()
    target = default_target_vector(48, seed=2)

    big = random_trigger(16, 16, 3, seed=4)
    enc_big = SyntheticTrojanEncoder(big, target, input_size=32, grid=4,
                                     tau=QUARTER_TAU)
    corpus_big = build_corpus(0, 100, big, target_label=0, seed=6,
                              placement="fixed")
    rep_big = eval_detection(corpus_big, enc_big, cfg)

    dyn = random_trigger(10, 10, 3, seed=1)
    enc_dyn = SyntheticTrojanEncoder(dyn, target, input_size=32, grid=4,
                                     tau=QUARTER_TAU)
    corpus_dyn = build_corpus(0, 100, dyn, target_label=0, seed=7,
                              placement="random")
    rep_dyn = eval_detection(corpus_dyn, enc_dyn, cfg)

    report("criterion 6 (adaptive analogs)",
           rep_big.fnr <= 0.05 and rep_dyn.fnr <= 0.05,
           f"16x16 trigger FNR={rep_big.fnr:.3f}, dynamic-location "
           f"FNR={rep_dyn.fnr:.3f} (both need <= 0.05; mask tolerance set so "
           f"quarter coverage disarms the trigger)")


def test_criterion_7_pattern_collision_bound():
    results = []
    ok = True
    for beta, (e_h, e_w) in [(0.25, (1, 2)), (0.1, (2, 2)), (0.05, (3, 3))]:
        bound = prop1_bound(beta, e_h, e_w)
        emp = prop1_monte_carlo(beta, e_h, e_w, 100_000, seed=13)
        sigma = np.sqrt(max(emp * (1 - emp), 1e-12) / 100_000)
        ok &= emp >= bound - 3 * sigma
        results.append(f"(beta={beta}, T={e_h * e_w}): emp={emp:.5f} >= "
                       f"bound-3sig={bound - 3 * sigma:.5f}")
    report("criterion 7 (collision bound Monte Carlo)", ok, "; ".join(results))


def test_criterion_8_null_space_consistency(stub_server):
    rng = np.random.default_rng(88)
    harmonic_bad = remote_bad = principle_bad = 0
    for trial in range(500):
        t = 32
        k = int(rng.integers(2, 17))
        a = int(rng.integers(0, t - k + 1))
        b = int(rng.integers(0, t - k + 1))
        img = rng.integers(0, 256, size=(t, t, 3), dtype=np.uint8)
        mask = create_mask(a, b, k, t, 3, mask_pattern_rng(5, trial))
        mask_img = binary_mask_image(mask)
        degraded = img.copy()
        degraded[a:a + k, b:b + k, :] = 0
        outside = mask_img[:, :, 0] != 0
        inside = ~outside

        har = inpaint_harmonic(RestorationRequest(degraded.copy(), mask_img))
        if not np.array_equal(har.image[outside], img[outside]):
            harmonic_bad += 1
        ring = _ring(inside)
        fill = har.image[inside]
        if fill.min() < img[ring].min() or fill.max() > img[ring].max():
            principle_bad += 1

        req = RestorationRequest(degraded.copy(), mask_img,
                                 strategy=REMOTE_DIFFUSION)
        rem = restore_remote(req, stub_server.url)
        if not np.array_equal(rem.image[outside], img[outside]):
            remote_bad += 1
    ok = harmonic_bad == remote_bad == principle_bad == 0
    report("criterion 8 (null-space consistency)", ok,
           f"500 (image, mask) pairs: harmonic bit-mismatches={harmonic_bad}, "
           f"remote bit-mismatches={remote_bad}, "
           f"maximum-principle violations={principle_bad}")


def _ring(inside):
    padded = np.pad(inside, 1, constant_values=False)
    near = (padded[:-2, 1:-1] | padded[2:, 1:-1]
            | padded[1:-1, :-2] | padded[1:-1, 2:])
    return near & ~inside


class ScaledEncoder(Encoder):
    def __init__(self, inner, factor):
        self.inner = inner
        self.factor = factor
        self.input_size = inner.input_size
        self.channels = inner.channels
        self.dim = inner.dim

    def _encode(self, batch):
        return self.factor * self.inner._encode(batch)


def test_criterion_9_determinism():
    trigger = random_trigger(10, 10, 3, seed=1)
    encoder = SyntheticTrojanEncoder(trigger, default_target_vector(48, 2))
    corpus = build_corpus(30, 30, trigger, target_label=0, seed=9)
    cfg = DetectionConfig()
    first = eval_detection(corpus, encoder, cfg).to_json().encode()
    second = eval_detection(corpus, encoder, cfg).to_json().encode()
    byte_identical = first == second

    invariant = True
    for factor in (2.0, 3.1415):
        scaled = ScaledEncoder(encoder, factor)
        for item in corpus.items[:10] + corpus.items[30:40]:
            a = detect(item.image, encoder, cfg)
            base = (a.is_trojaned, a.k_star, a.argmin_index)
            s = detect(item.image, scaled, cfg)
            invariant &= base == (s.is_trojaned, s.k_star, s.argmin_index)
    report("criterion 9 (determinism & scale invariance)",
           byte_identical and invariant,
           f"reports byte-identical={byte_identical}, verdicts invariant "
           f"under positive feature scaling={invariant}")
