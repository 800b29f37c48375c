"""Black-box feature encoders and the cosine-similarity primitive.

Encoders map batches of canonical images to fixed-dimension real vectors.
The detection pipeline never looks inside an encoder: a deterministic
synthetic encoder and a remote HTTP-served model are interchangeable.
"""

from __future__ import annotations

import abc
import base64

import numpy as np

from . import _http
from .errors import (
    DimensionMismatchError,
    EmptyBatchError,
    GeometryMismatchError,
    ZeroVectorError,
)
from .imaging import encode_png, validate_image


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """<u, v> / (|u| |v|), clamped to [-1, 1] against rounding drift."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.size != v.size:
        raise DimensionMismatchError(f"vector dims differ: {u.size} vs {v.size}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine similarity undefined for a zero vector")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


class Encoder(abc.ABC):
    """Query interface shared by synthetic and remote encoders.

    Subclasses declare ``dim`` and ``input_size`` and implement ``_encode``
    on a stacked uint8 batch of shape (n, t, t, C).
    """

    dim: int
    input_size: int
    channels: int | None = None  # None: any channel count accepted

    def features(self, images) -> np.ndarray:
        """Feature vectors for a batch of images, order preserving."""
        images = list(images)
        if not images:
            raise EmptyBatchError("feature query needs at least one image")
        for img in images:
            validate_image(img)
            h, w, c = img.shape
            if h != self.input_size or w != self.input_size:
                raise GeometryMismatchError(
                    f"encoder expects {self.input_size}x{self.input_size} inputs, "
                    f"got {h}x{w}")
            if self.channels is not None and c != self.channels:
                raise GeometryMismatchError(
                    f"encoder expects {self.channels} channel(s), got {c}")
        batch = np.stack(images, axis=0)
        feats = np.asarray(self._encode(batch), dtype=np.float64)
        if feats.shape != (len(images), self.dim):
            raise DimensionMismatchError(
                f"encoder produced shape {feats.shape}, expected ({len(images)}, {self.dim})")
        return feats

    @abc.abstractmethod
    def _encode(self, batch: np.ndarray) -> np.ndarray:
        ...


def block_mean_features(batch: np.ndarray, grid: int) -> np.ndarray:
    """Per-block per-channel means on a grid x grid partition, flattened.

    Returns (n, grid*grid*C) float64, not yet normalized.
    """
    n, h, w, c = batch.shape
    rb = (np.arange(grid) * h) // grid
    cb = (np.arange(grid) * w) // grid
    sums = np.add.reduceat(batch.astype(np.float64), rb, axis=1)
    sums = np.add.reduceat(sums, cb, axis=2)
    rlen = np.diff(np.append(rb, h))
    clen = np.diff(np.append(cb, w))
    areas = rlen[:, None] * clen[None, :]
    means = sums / areas[None, :, :, None]
    return means.reshape(n, grid * grid * c)


def l2_normalize_rows(feats: np.ndarray) -> np.ndarray:
    """Row-wise L2 normalization; all-zero rows are left as zeros."""
    norms = np.linalg.norm(feats, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return feats / safe


class BlockMeanEncoder(Encoder):
    """Deterministic locality-sensitive encoder used as a clean test oracle.

    Partitions the image into a grid of blocks, takes per-block per-channel
    means, flattens, and L2-normalizes. Occluding a region perturbs the
    blocks it touches, which is enough locality to stand in for a real
    encoder in pipeline tests.
    """

    def __init__(self, input_size: int = 32, channels: int = 3, grid: int = 4):
        if grid < 1 or grid > input_size:
            raise ValueError(f"grid must satisfy 1 <= grid <= input_size, got {grid}")
        self.input_size = input_size
        self.channels = channels
        self.grid = grid
        self.dim = grid * grid * channels

    def _encode(self, batch: np.ndarray) -> np.ndarray:
        return l2_normalize_rows(block_mean_features(batch, self.grid))


class RemoteEncoder(Encoder):
    """Client for an HTTP feature service speaking the /v1 protocol.

    Connects eagerly: the constructor fetches /v1/info to learn the feature
    dimension and expected input size. Batches are chunked and retried on
    transport failures.
    """

    def __init__(self, endpoint: str, *, batch_size: int = 64,
                 timeout: float = 30.0, retries: int = 3, backoff: float = 0.2):
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = batch_size
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        info = _http.request_json("GET", f"{self.endpoint}/v1/info",
                                  timeout=timeout, retries=retries, backoff=backoff)
        self.dim = int(info["feature_dim"])
        self.input_size = int(info["input_size"])
        self.model_name = str(info.get("model_name", "unknown"))

    def _encode(self, batch: np.ndarray) -> np.ndarray:
        rows: list[list[float]] = []
        for start in range(0, batch.shape[0], self.batch_size):
            chunk = batch[start:start + self.batch_size]
            payload = {"images": [base64.b64encode(encode_png(img)).decode("ascii")
                                  for img in chunk]}
            reply = _http.request_json(
                "POST", f"{self.endpoint}/v1/features", payload,
                timeout=self.timeout, retries=self.retries, backoff=self.backoff)
            feats = reply.get("features")
            if feats is None or len(feats) != chunk.shape[0]:
                raise DimensionMismatchError(
                    f"service returned {0 if feats is None else len(feats)} vectors "
                    f"for a batch of {chunk.shape[0]}")
            for row in feats:
                if len(row) != self.dim:
                    raise DimensionMismatchError(
                        f"service returned dim {len(row)}, advertised {self.dim}")
                rows.append(row)
        return np.asarray(rows, dtype=np.float64)


def encoder_from_config(spec: dict) -> Encoder:
    """Build an encoder from a config document {kind, endpoint|params}."""
    kind = spec.get("kind")
    params = dict(spec.get("params", {}))
    if kind == "remote":
        endpoint = spec.get("endpoint")
        if not endpoint:
            raise ValueError("remote encoder config needs an 'endpoint'")
        return RemoteEncoder(endpoint, **params)
    if kind == "synthetic-clean":
        return BlockMeanEncoder(**params)
    if kind == "synthetic-trojaned":
        from .attack import SyntheticTrojanEncoder

        return SyntheticTrojanEncoder.from_params(**params)
    raise ValueError(f"unknown encoder kind: {kind!r}")
