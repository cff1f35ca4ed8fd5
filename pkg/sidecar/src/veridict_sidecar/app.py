"""HTTP service exposing /ner, /embed and /nli.

Every response wraps the endpoint body in an envelope carrying the serving
model id and elapsed milliseconds. Error codes: 400 for malformed bodies,
413 for oversized embed batches, 503 when a configured model failed to
load. Model selection via SIDECAR_NER_MODEL / SIDECAR_EMBED_MODEL /
SIDECAR_NLI_MODEL ("rule"/"hash"/"overlap" builtins or "hf:<name>").
"""

import os
import time

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import models

EMBED_BATCH_LIMIT = 256
MAX_TEXT_BYTES = 100_000


class NerRequest(BaseModel):
    text: str = Field(max_length=MAX_TEXT_BYTES)


class EmbedRequest(BaseModel):
    texts: list[str]


class NliRequest(BaseModel):
    premise: str = Field(min_length=1, max_length=MAX_TEXT_BYTES)
    hypothesis: str = Field(min_length=1, max_length=MAX_TEXT_BYTES)


def _load(loader, spec):
    try:
        return loader(spec), None
    except Exception as exc:  # model download/load failure -> 503 later
        return None, f"{spec}: {exc}"


def create_app() -> FastAPI:
    app = FastAPI(title="veridict-sidecar")

    ner, ner_err = _load(models.load_ner, os.environ.get("SIDECAR_NER_MODEL", "rule"))
    embedder, embed_err = _load(
        lambda s: models.load_embedder(s, dim=int(os.environ.get("SIDECAR_EMBED_DIM", "384"))),
        os.environ.get("SIDECAR_EMBED_MODEL", "hash"))
    nli, nli_err = _load(models.load_nli, os.environ.get("SIDECAR_NLI_MODEL", "overlap"))

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    def envelope(model_id: str, started: float, payload: dict) -> dict:
        return {
            "model_id": model_id,
            "elapsed_ms": (time.perf_counter() - started) * 1000.0,
            "payload": payload,
        }

    def require(model, error):
        if model is None:
            raise HTTPException(status_code=503,
                                detail=f"model not loaded: {error}")
        return model

    @app.post("/ner")
    def ner_endpoint(body: NerRequest):
        started = time.perf_counter()
        model = require(ner, ner_err)
        mentions = model.mentions(body.text)
        return envelope(model.model_id, started, {"mentions": mentions})

    @app.post("/embed")
    def embed_endpoint(body: EmbedRequest):
        started = time.perf_counter()
        model = require(embedder, embed_err)
        if len(body.texts) < 1:
            raise HTTPException(status_code=400, detail="texts must be non-empty")
        if len(body.texts) > EMBED_BATCH_LIMIT:
            raise HTTPException(status_code=413,
                                detail=f"batch too large (> {EMBED_BATCH_LIMIT})")
        vectors = model.encode(body.texts)
        return envelope(model.model_id, started, {
            "vectors": [[float(x) for x in row] for row in vectors],
            "dim": int(vectors.shape[1]),
        })

    @app.post("/nli")
    def nli_endpoint(body: NliRequest):
        started = time.perf_counter()
        model = require(nli, nli_err)
        entail, neutral, contradict = model.scores(body.premise, body.hypothesis)
        return envelope(model.model_id, started, {
            "entail": entail, "neutral": neutral, "contradict": contradict,
        })

    @app.get("/health")
    def health():
        loaded = {
            "ner": ner.model_id if ner else None,
            "embed": embedder.model_id if embedder else None,
            "nli": nli.model_id if nli else None,
        }
        status = "ok" if all(loaded.values()) else "degraded"
        return {"status": status, "model_ids": loaded}

    return app
