#!/usr/bin/env python3
"""Run the pipeline against an HTTP model service.

Points the remote encoder client and the remote restorer at a live
service. Start the sidecar first, e.g.:

    cd service && pip install -e . && python -m trojandec_service

then:

    TROJANDEC_ENDPOINT=http://127.0.0.1:8787 python demos/05_remote_service.py

Any server speaking the /v1 protocol works (GET /v1/info, POST
/v1/features, POST /v1/restore with base64 PNG payloads).
"""

import os
import sys

import numpy as np

from trojandec import (
    DetectionConfig,
    REMOTE_DIFFUSION,
    RemoteEncoder,
    RestorationRequest,
    binary_mask_image,
    create_mask,
    detect,
    mask_pattern_rng,
    resize,
    restore_remote,
    smooth_field,
)
from trojandec.errors import ServiceUnreachableError

endpoint = os.environ.get("TROJANDEC_ENDPOINT", "http://127.0.0.1:8787")
print(f"connecting to {endpoint} ...")
try:
    encoder = RemoteEncoder(endpoint)
except ServiceUnreachableError as exc:
    print(f"no service reachable: {exc}")
    print("start one (see module docstring) and re-run.")
    sys.exit(1)

print(f"model: {encoder.model_name}  dim={encoder.dim}  "
      f"input={encoder.input_size}x{encoder.input_size}")

image = resize(smooth_field(64, 3, np.random.default_rng(1), cells=4),
               encoder.input_size)
feats = encoder.features([image, image])
print(f"feature check: two identical queries -> identical vectors: "
      f"{bool(np.array_equal(feats[0], feats[1]))}")

t = encoder.input_size
# detection against a real service: coarser stride keeps the demo quick
cfg = DetectionConfig(k=max(2, (15 * t) // 32), s=max(1, t // 16), B=50, seed=0)
verdict = detect(image, encoder, cfg)
print(f"detect (k={cfg.k}, s={cfg.s}): is_trojaned={verdict.is_trojaned}")

k = t // 4
mask = create_mask(t // 2, t // 2, k, t, 3, mask_pattern_rng(0, 0))
degraded = image.copy()
degraded[t // 2:t // 2 + k, t // 2:t // 2 + k, :] = 0
req = RestorationRequest(degraded, binary_mask_image(mask),
                         strategy=REMOTE_DIFFUSION)
restored = restore_remote(req, endpoint).image
outside = binary_mask_image(mask)[:, :, 0] != 0
print(f"restore: unmasked pixels preserved bit-exactly: "
      f"{bool(np.array_equal(restored[outside], degraded[outside]))}")
inside = ~outside
print(f"restore: masked region repainted (nonzero content): "
      f"{bool(restored[inside].any())}")
