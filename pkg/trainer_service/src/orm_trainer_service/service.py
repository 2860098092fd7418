"""Scoring service: POST /score per the shared wire protocol, GET /health.

Score semantics: probability of the '+' outcome token at the step-tag
position, softmax over the two outcome logits. Inference is deterministic
(eval mode, no sampling), so identical requests score identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import ModelLoadFailure
from .model import ModelSpec, TinyCausalLM, apply_lora
from .tokenizer import STEP_TAG, WordVocab
from .training import CONFIG_NAME, VOCAB_NAME, WEIGHTS_NAME


class ScoringModel:
    def __init__(self, model: TinyCausalLM, vocab: WordVocab, info: dict):
        self.model = model
        self.vocab = vocab
        self.info = info
        self.model.eval()

    @classmethod
    def load(cls, model_dir: str | Path) -> "ScoringModel":
        model_dir = Path(model_dir)
        try:
            info = json.loads((model_dir / CONFIG_NAME).read_text(encoding="utf-8"))
            vocab = WordVocab.load(model_dir / VOCAB_NAME)
            spec = ModelSpec(**info["model"])
            model = TinyCausalLM(spec)
            trainer = info["trainer"]
            if trainer.get("lora_rank", 0):
                model = apply_lora(
                    model,
                    trainer["lora_rank"],
                    trainer.get("lora_alpha", 16.0),
                    0.0,  # dropout is a training-time concern
                )
            state = torch.load(model_dir / WEIGHTS_NAME, map_location="cpu")
            model.load_state_dict(state)
        except (OSError, KeyError, ValueError, RuntimeError, json.JSONDecodeError) as exc:
            raise ModelLoadFailure(f"cannot load model from {model_dir}: {exc}") from exc
        return cls(model, vocab, info)

    def score(self, context: str, candidate: str) -> float:
        text = context + "\n" + candidate + " " + STEP_TAG
        ids = self.vocab.encode(text, self.model.spec.max_seq_len)
        batch = torch.tensor([ids], dtype=torch.long)
        pad_mask = torch.zeros(1, len(ids), dtype=torch.bool)
        with torch.no_grad():
            logits = self.model(batch, pad_mask)[0, -1]
        outcome_logits = torch.stack([logits[self.vocab.plus_id], logits[self.vocab.minus_id]])
        return float(torch.softmax(outcome_logits, dim=0)[0])


class ScoreItem(BaseModel):
    context: str
    candidate: str


class ScoreRequest(BaseModel):
    items: list[ScoreItem]


def create_app(model_dir: str | Path) -> FastAPI:
    scoring = ScoringModel.load(model_dir)
    app = FastAPI(title="orm-trainer-service")

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.post("/score")
    def score(request: ScoreRequest):
        return {"scores": [scoring.score(item.context, item.candidate) for item in request.items]}

    @app.get("/health")
    def health():
        return {
            "model": scoring.info["trainer"]["base_model"],
            "training_file_digest": scoring.info["training_file_digest"],
        }

    return app


def serve(model_dir: str | Path, port: int) -> None:
    import uvicorn

    uvicorn.run(create_app(model_dir), host="127.0.0.1", port=port)
