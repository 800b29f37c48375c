import json
import math
import statistics

import numpy as np
import pytest

from trojandec.attack import (
    SyntheticTrojanEncoder,
    default_target_vector,
    embed_patch,
    random_trigger,
)
from trojandec.detection import (
    DetectionConfig,
    GapTrace,
    decide,
    detect,
    extract_metadata,
    gap_statistic,
    kmeans_1d,
    load_config,
)
from trojandec.encoders import BlockMeanEncoder, Encoder, cosine_similarity
from trojandec.errors import DegenerateRangeError, TooFewPointsError
from trojandec.masking import generate_mask_set

from conftest import random_image


class ConstantEncoder(Encoder):
    """Returns the same vector for every input."""

    def __init__(self, input_size=32):
        self.input_size = input_size
        self.channels = None
        self.dim = 4

    def _encode(self, batch):
        return np.tile([1.0, 2.0, 3.0, 4.0], (batch.shape[0], 1))


class ScaledEncoder(Encoder):
    """Wraps another encoder and scales every feature by a positive factor."""

    def __init__(self, inner, factor):
        self.inner = inner
        self.factor = factor
        self.input_size = inner.input_size
        self.channels = inner.channels
        self.dim = inner.dim

    def _encode(self, batch):
        return self.factor * self.inner._encode(batch)


def brute_force_two_partition(values):
    """Minimum W over ALL 2-partitions (not just sorted splits)."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    best = np.inf
    for bits in range(1, 2 ** n - 1):
        m = np.array([(bits >> i) & 1 for i in range(n)], dtype=bool)
        a, b = v[m], v[~m]
        best = min(best, ((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum())
    return best


class TestKmeans1d:
    def test_k1_constant_zero(self):
        labels, w = kmeans_1d([0.4] * 9, 1)
        assert w == 0.0
        assert (labels == 0).all()

    def test_two_points(self):
        labels, w = kmeans_1d([0.0, 1.0], 2)
        assert w == 0.0
        assert sorted(labels) == [0, 1]

    def test_known_split(self):
        vals = [0.30, 0.31, 0.90, 0.91, 0.92]
        labels, w = kmeans_1d(vals, 2)
        assert list(labels) == [0, 0, 1, 1, 1]
        assert w == pytest.approx(brute_force_two_partition(vals), rel=1e-12)

    def test_matches_bruteforce_on_random_sequences(self):
        rng = np.random.default_rng(8)
        for trial in range(200):
            n = int(rng.integers(2, 11))
            if trial % 3 == 0:
                vals = rng.integers(0, 4, n).astype(float)  # heavy ties
            else:
                vals = rng.uniform(-1, 1, n)
            _, w = kmeans_1d(vals, 2)
            assert w == pytest.approx(brute_force_two_partition(vals),
                                      rel=1e-9, abs=1e-12)

    def test_w_decreases_with_k(self, rng):
        for _ in range(20):
            vals = rng.uniform(0, 1, 30)
            _, w1 = kmeans_1d(vals, 1)
            _, w2 = kmeans_1d(vals, 2)
            assert w2 <= w1 + 1e-12

    def test_too_few_points(self):
        with pytest.raises(TooFewPointsError):
            kmeans_1d([1.0], 2)
        with pytest.raises(TooFewPointsError):
            kmeans_1d([], 1)

    def test_tie_break_smallest_split(self):
        # symmetric values: splits 1..3 tie; smallest index puts one point left
        labels, _ = kmeans_1d([0.0, 0.0, 1.0, 1.0], 2)
        assert list(labels) == [0, 0, 1, 1]


def reference_gap(values, B, seed):
    """Independent few-line reimplementation used as a cross-check."""
    v = sorted(float(x) for x in values)
    lo, hi = v[0], v[-1]

    def w_of(data, K):
        if K == 1:
            mu = sum(data) / len(data)
            return sum((x - mu) ** 2 for x in data)
        s = sorted(data)
        best = math.inf
        for m in range(1, len(s)):
            a, b = s[:m], s[m:]
            ma, mb = sum(a) / len(a), sum(b) / len(b)
            best = min(best, sum((x - ma) ** 2 for x in a)
                       + sum((x - mb) ** 2 for x in b))
        return best

    G, sp = [], []
    for K in (1, 2):
        logs = []
        for b in range(B):
            r = np.random.default_rng(np.random.SeedSequence([seed, K, b]))
            logs.append(math.log(max(w_of(list(r.uniform(lo, hi, len(v))), K), 1e-12)))
        G.append(statistics.fmean(logs) - math.log(max(w_of(v, K), 1e-12)))
        sp.append(statistics.pstdev(logs) * math.sqrt(1 + 1 / B))
    return G, sp


class TestGapStatistic:
    def test_matches_independent_reimplementation(self):
        rng = np.random.default_rng(3)
        vals = np.concatenate([rng.uniform(0.5, 0.6, 40), rng.uniform(0.9, 1.0, 40)])
        trace = gap_statistic(vals, B=20, seed=11)
        G, sp = reference_gap(vals, 20, 11)
        assert trace.G[0] == pytest.approx(G[0], rel=1e-9)
        assert trace.G[1] == pytest.approx(G[1], rel=1e-9)
        assert trace.s_prime[1] == pytest.approx(sp[1], rel=1e-9)

    def test_point_masses_always_two_clusters(self):
        vals = np.array([0.55] * 162 + [0.95] * 162)
        for seed in range(20):
            trace = gap_statistic(vals, B=100, seed=seed)
            assert trace.G[1] - trace.s_prime[1] > trace.G[0]

    def test_single_reference_set_has_zero_deviation(self):
        vals = np.array([0.1, 0.2, 0.9, 1.0])
        trace = gap_statistic(vals, B=1, seed=0)
        assert trace.s_prime == (0.0, 0.0)

    def test_uniform_null_prefers_one_cluster(self):
        vals = (np.arange(324) + 0.5) / 324.0
        ones = sum(decide(gap_statistic(vals, B=100, seed=s)) == 1
                   for s in range(30))
        assert ones >= 29

    def test_degenerate_range(self):
        with pytest.raises(DegenerateRangeError):
            gap_statistic([0.5] * 10, B=5, seed=0)

    def test_too_few(self):
        with pytest.raises(TooFewPointsError):
            gap_statistic([0.5], B=5, seed=0)

    def test_seeded_reproducibility(self):
        vals = np.random.default_rng(0).uniform(0, 1, 50)
        a = gap_statistic(vals, B=10, seed=4)
        b = gap_statistic(vals, B=10, seed=4)
        assert a == b


class TestDecide:
    def test_inequality_holds(self):
        trace = GapTrace(W=(1, 1), G=(0.5, 0.4), s_prime=(0.0, 0.1), B=10, seed=0)
        assert decide(trace) == 1

    def test_inequality_fails(self):
        trace = GapTrace(W=(1, 1), G=(0.1, 0.9), s_prime=(0.0, 0.05), B=10, seed=0)
        assert decide(trace) == 2

    def test_boundary_is_inclusive(self):
        # G(1) == G(2) - s'_2 exactly (dyadic values avoid rounding)
        trace = GapTrace(W=(1, 1), G=(0.25, 0.5), s_prime=(0.0, 0.25), B=10, seed=0)
        assert decide(trace) == 1


class TestExtractMetadata:
    def test_constant_encoder_all_ones(self, rng):
        masks = generate_mask_set(8, 8, 32, channels=3, seed=0)
        sims = extract_metadata(random_image(rng), ConstantEncoder(), masks)
        assert sims.shape == (len(masks),)
        assert np.allclose(sims, 1.0)

    def test_length_matches_mask_count(self, rng):
        masks = generate_mask_set(15, 1, 32, channels=3, seed=0)
        sims = extract_metadata(random_image(rng), BlockMeanEncoder(), masks)
        assert sims.size == 324

    def test_agrees_with_scalar_cosine(self, rng):
        from trojandec.masking import apply_mask

        enc = BlockMeanEncoder()
        img = random_image(rng)
        masks = generate_mask_set(10, 10, 32, channels=3, seed=1)
        sims = extract_metadata(img, enc, masks)
        base = enc.features([img])[0]
        for i, m in enumerate(masks):
            expected = cosine_similarity(enc.features([apply_mask(img, m)])[0], base)
            assert sims[i] == pytest.approx(expected, abs=1e-12)

    def test_trojaned_image_bimodal(self, rng):
        trig = random_trigger(10, 10, 3, seed=1)
        enc = SyntheticTrojanEncoder(trig, default_target_vector(48, 2))
        img = embed_patch(random_image(rng), trig, 22, 22)
        masks = generate_mask_set(15, 1, 32, channels=3, seed=0)
        sims = extract_metadata(img, enc, masks)
        # masks that miss the trigger leave the target branch intact (sim 1);
        # any overlap almost surely breaks it
        assert (sims == 1.0).sum() == 324 - 100
        assert sims.min() < 0.7


class TestDetect:
    def test_constant_encoder_short_circuits_clean(self, rng):
        verdict = detect(random_image(rng), ConstantEncoder(),
                         DetectionConfig(k=8, s=8, B=10, seed=0))
        assert not verdict.is_trojaned
        assert verdict.k_star == 1
        assert verdict.trace is None

    def test_trojaned_image_flagged(self, rng):
        trig = random_trigger(10, 10, 3, seed=1)
        enc = SyntheticTrojanEncoder(trig, default_target_vector(48, 2))
        img = embed_patch(random_image(rng), trig, 22, 22)
        verdict = detect(img, enc, DetectionConfig())
        assert verdict.is_trojaned and verdict.k_star == 2

    def test_clean_images_mostly_pass(self):
        from trojandec.evaluation import smooth_field

        trig = random_trigger(10, 10, 3, seed=1)
        enc = SyntheticTrojanEncoder(trig, default_target_vector(48, 2))
        cfg = DetectionConfig()
        flagged = 0
        for i in range(25):
            img = smooth_field(32, 3, np.random.default_rng(i), cells=4)
            flagged += detect(img, enc, cfg).is_trojaned
        assert flagged == 0

    def test_deterministic(self, rng):
        enc = BlockMeanEncoder()
        img = random_image(rng)
        cfg = DetectionConfig(B=20, seed=5)
        a, b = detect(img, enc, cfg), detect(img, enc, cfg)
        assert a == b

    def test_scale_invariance_of_verdict(self, rng):
        trig = random_trigger(10, 10, 3, seed=1)
        enc = SyntheticTrojanEncoder(trig, default_target_vector(48, 2))
        cfg = DetectionConfig(B=20, seed=3)
        for img in (random_image(rng), embed_patch(random_image(rng), trig, 22, 22)):
            base = detect(img, enc, cfg)
            for factor in (2.0, 3.1415):
                scaled = detect(img, ScaledEncoder(enc, factor), cfg)
                assert scaled.is_trojaned == base.is_trojaned
                assert scaled.argmin_index == base.argmin_index

    def test_argmin_is_least_similar_mask(self, rng):
        enc = BlockMeanEncoder()
        img = random_image(rng)
        cfg = DetectionConfig(k=10, s=4, B=10, seed=0)
        masks = generate_mask_set(10, 4, 32, channels=3, seed=0)
        sims = extract_metadata(img, enc, masks)
        verdict = detect(img, enc, cfg)
        assert verdict.argmin_index == int(np.argmin(sims))


class TestConfig:
    def test_defaults(self):
        cfg = DetectionConfig()
        assert (cfg.k, cfg.s, cfg.B, cfg.seed) == (15, 1, 100, 0)

    def test_json_document_roundtrip(self):
        text = json.dumps({"k": 9, "s": 2, "B": 7, "seed": 3,
                           "encoder": {"kind": "synthetic-clean",
                                       "params": {"input_size": 16, "grid": 2}}})
        cfg, enc = load_config(text)
        assert cfg == DetectionConfig(k=9, s=2, B=7, seed=3)
        assert enc is not None and enc.input_size == 16

    def test_config_without_encoder(self):
        cfg, enc = load_config('{"k": 5, "s": 1, "B": 3, "seed": 0}')
        assert cfg.k == 5 and enc is None

    def test_verdict_json_fields(self, rng):
        verdict = detect(random_image(rng), BlockMeanEncoder(),
                         DetectionConfig(B=5, seed=0))
        doc = verdict.to_dict()
        assert set(doc) == {"is_trojaned", "k_star", "G", "s_prime", "argmin_index"}
