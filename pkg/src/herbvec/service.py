"""HTTP suggestion service for interactive prescription composition.

Requests are served from an immutable snapshot of loaded models; swapping
in new checkpoints replaces the whole snapshot atomically, so no request
ever observes a half-loaded model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .corpus import Vocabulary
from .errors import ConfigError, DataError
from . import checkpoint

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoadedModel:
    name: str
    type_tag: str
    model: object
    vocab: Vocabulary
    dims: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def load_model_file(name: str, path) -> LoadedModel:
    header = checkpoint.read_header(path)
    model = checkpoint.load_checkpoint(path)
    config = header.get("config", {})
    dims = {k: config[k] for k in ("dim", "hidden", "rank") if k in config}
    return LoadedModel(
        name=name,
        type_tag=header["type"],
        model=model,
        vocab=model.vocab,
        dims=dims,
        metadata=header.get("metadata", {}),
    )


def suggest_for_model(
    loaded: LoadedModel, herbs: Sequence[str], k: int
) -> tuple[list[tuple[str, float]], list[str]]:
    """Ranked continuations for a draft, with per-herb warnings.

    Unknown input herbs resolve to the unknown id instead of failing the
    request. Models that cannot score an empty draft fall back to corpus
    frequency so the caller still gets a ranked prior.
    """
    vocab = loaded.vocab
    warnings = []
    draft_ids = []
    for herb in herbs:
        herb_id = vocab.id_of(herb)
        if herb_id is None or herb_id == vocab.unk_id:
            warnings.append(f"unknown herb: {herb}")
            draft_ids.append(vocab.unk_id)
        else:
            draft_ids.append(herb_id)
    if draft_ids:
        ranked = loaded.model.ranked_next(draft_ids)
    else:
        try:
            ranked = loaded.model.ranked_next([])
        except (ConfigError, DataError):
            total = max(1, sum(vocab.counts))
            ranked = sorted(
                ((i, vocab.count_of(i) / total) for i in vocab.herb_ids()),
                key=lambda pair: (-pair[1], vocab.token_of(pair[0])),
            )
            warnings.append("empty draft: ranking by corpus frequency")
    suggestions = [(vocab.token_of(i), score) for i, score in ranked[:k]]
    return suggestions, warnings


def complete_herb(vocab: Vocabulary, prefix: str, k: int) -> list[str]:
    """Vocabulary herbs starting with the prefix, most frequent first."""
    matches = [
        (vocab.token_of(i), vocab.count_of(i))
        for i in vocab.herb_ids()
        if vocab.token_of(i).startswith(prefix)
    ]
    matches.sort(key=lambda pair: (-pair[1], pair[0]))
    return [token for token, _ in matches[:k]]


class SuggestRequest(BaseModel):
    model: str
    herbs: list[str] = Field(default_factory=list)
    k: int = Field(default=5, ge=1)


def create_app(models: Sequence[LoadedModel], ui_dir=None) -> FastAPI:
    app = FastAPI(title="herbvec assistant", docs_url=None, redoc_url=None)
    app.state.models = {m.name: m for m in sorted(models, key=lambda m: m.name)}

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": str(exc.detail)})

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": str(exc.errors())})

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        logger.exception("request failed")
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/api/models")
    async def list_models():
        return [
            {
                "name": m.name,
                "type": m.type_tag,
                "dims": m.dims,
                "metadata": m.metadata,
            }
            for m in app.state.models.values()
        ]

    @app.post("/api/suggest")
    async def suggest(request: SuggestRequest):
        loaded = app.state.models.get(request.model)
        if loaded is None:
            raise HTTPException(status_code=404, detail=f"unknown model: {request.model}")
        suggestions, warnings = suggest_for_model(loaded, request.herbs, request.k)
        return {
            "suggestions": [{"herb": h, "score": s} for h, s in suggestions],
            "warnings": warnings,
            "model": request.model,
        }

    @app.get("/api/herbs")
    async def herbs(prefix: str = "", k: int = Query(default=10, ge=1)):
        if not app.state.models:
            return []
        first = next(iter(app.state.models.values()))
        return complete_herb(first.vocab, prefix, k)

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def replace_models(app: FastAPI, models: Sequence[LoadedModel]) -> None:
    """Swap the whole model snapshot atomically."""
    app.state.models = {m.name: m for m in sorted(models, key=lambda m: m.name)}
