"""FastAPI application exposing the /v1 feature-and-restore protocol.

Endpoints answer 503 until the model finishes loading (which happens in
the application lifespan). Requests are stateless; responses for the same
pixels are identical across the process lifetime.
"""

from __future__ import annotations

from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .codecs import PayloadError, decode_payload, encode_payload
from .inpaint import fill_masked_region, restore_hyperparameters

BATCH_LIMIT = 256


class FeaturesRequest(BaseModel):
    images: list[str]


class RestoreRequest(BaseModel):
    image: str
    mask: str


def create_app(input_size: int = 224, seed: int = 0) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        from .backbone import FeatureBackbone

        app.state.backbone = FeatureBackbone(input_size=input_size, seed=seed)
        yield

    app = FastAPI(title="trojandec-service", lifespan=lifespan)
    app.state.backbone = None

    def _error(code: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=code, content={"error": message})

    def _backbone(request: Request):
        backbone = request.app.state.backbone
        if backbone is None:
            return None
        return backbone

    @app.get("/v1/info")
    def info(request: Request):
        backbone = _backbone(request)
        if backbone is None:
            return _error(503, "model is still loading")
        return {"feature_dim": backbone.feature_dim,
                "input_size": backbone.input_size,
                "model_name": backbone.model_name,
                "restore": restore_hyperparameters()}

    @app.post("/v1/features")
    def features(body: FeaturesRequest, request: Request):
        backbone = _backbone(request)
        if backbone is None:
            return _error(503, "model is still loading")
        if not body.images:
            return _error(400, "images array is empty")
        if len(body.images) > BATCH_LIMIT:
            return _error(413, f"batch of {len(body.images)} exceeds {BATCH_LIMIT}")
        try:
            batch = [decode_payload(b) for b in body.images]
        except PayloadError as exc:
            return _error(400, str(exc))
        feats = backbone.features(batch)
        return {"features": [[float(x) for x in row] for row in feats]}

    @app.post("/v1/restore")
    def restore(body: RestoreRequest, request: Request):
        backbone = _backbone(request)
        if backbone is None:
            return _error(503, "model is still loading")
        try:
            img = decode_payload(body.image)
            mask = decode_payload(body.mask)
        except PayloadError as exc:
            return _error(400, str(exc))
        if mask.shape[2] != 1:
            return _error(400, "mask must be a single-channel PNG")
        if mask.shape[:2] != img.shape[:2]:
            return _error(400, f"mask {mask.shape[:2]} does not match "
                               f"image {img.shape[:2]}")
        values = set(int(v) for v in set(mask.reshape(-1)))
        if not values <= {0, 255}:
            return _error(422, f"mask is not binary: values {sorted(values)[:5]}")
        return {"image": encode_payload(fill_masked_region(img, mask))}

    return app
