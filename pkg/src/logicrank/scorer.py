"""Reward scorers: oracle, seeded random, hashed n-gram surrogate, and remote client.

Every scorer maps (problem, candidate text, extracted answer) to a score in
[0, 1] read as "probability the outcome is positive". Best-of-N only needs
the induced order, but the shared range keeps reports comparable.

Scoring wire protocol (shared with the trainer service):
POST {base_url}/score with {"items": [{"context": str, "candidate": str}]}
returns {"scores": [float]}, aligned and of equal length; errors surface as
non-2xx statuses with {"error": str}.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from .corpus import Label, Problem
from .errors import ModelNotLoaded, ProtocolViolation, RemoteUnavailable, SingleClassData
from .prompting import render_context
from .reward_export import TrainingExample
from .trajectory import Extraction, Trajectory

FEATURE_DIM = 2**18
NGRAM_ORDERS = (1, 2, 3)
_HASH_SALT = b"ngram-bucket-v1"  # pinned: featurization must be stable across platforms


def _bucket(gram: str) -> int:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=_HASH_SALT).digest()
    return int.from_bytes(digest, "big") % FEATURE_DIM


def featurize(text: str) -> dict[int, float]:
    """Hashed counts of whitespace-token n-grams (orders 1..3)."""
    tokens = text.split()
    features: dict[int, float] = {}
    for order in NGRAM_ORDERS:
        for i in range(len(tokens) - order + 1):
            index = _bucket(" ".join(tokens[i : i + order]))
            features[index] = features.get(index, 0.0) + 1.0
    return features


@dataclass
class SurrogateModel:
    weights: np.ndarray
    bias: float
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weights.shape != (FEATURE_DIM,):
            raise ValueError(f"weight vector must have shape ({FEATURE_DIM},)")
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValueError("model parameters must be finite")

    def predict(self, text: str) -> float:
        logit = self.bias
        for index, value in featurize(text).items():
            logit += self.weights[index] * value
        return 1.0 / (1.0 + math.exp(-max(-500.0, min(500.0, logit))))


def _surrogate_input(input_text: str, response_text: str) -> str:
    return input_text + "\n" + response_text


def train_surrogate(
    examples: Sequence[TrainingExample],
    epochs: int = 5,
    learning_rate: float = 0.1,
    seed: int = 0,
) -> SurrogateModel:
    """SGD logistic regression over hashed n-grams of input+response.

    Deterministic for a fixed seed and example order: the per-epoch shuffle
    schedule is derived from the seed alone.
    """
    targets = [1.0 if ex.outcome == "+" else 0.0 for ex in examples]
    if len(set(targets)) < 2:
        raise SingleClassData("training needs both '+' and '-' outcomes")
    features = [featurize(_surrogate_input(ex.input_text, ex.response_text)) for ex in examples]
    weights = np.zeros(FEATURE_DIM, dtype=np.float64)
    bias = 0.0
    order = list(range(len(examples)))
    rng = random.Random(seed)
    for _ in range(epochs):
        rng.shuffle(order)
        for i in order:
            logit = bias
            for index, value in features[i].items():
                logit += weights[index] * value
            prediction = 1.0 / (1.0 + math.exp(-max(-500.0, min(500.0, logit))))
            gradient = prediction - targets[i]
            for index, value in features[i].items():
                weights[index] -= learning_rate * gradient * value
            bias -= learning_rate * gradient
    meta = {"epochs": epochs, "learning_rate": learning_rate, "seed": seed, "examples": len(examples)}
    return SurrogateModel(weights=weights, bias=bias, training_meta=meta)


def save_surrogate(model: SurrogateModel, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        path,
        weights=model.weights,
        bias=np.float64(model.bias),
        meta=np.frombuffer(json.dumps(model.training_meta).encode("utf-8"), dtype=np.uint8),
    )


def load_surrogate(path: str | Path) -> SurrogateModel:
    path = Path(path)
    if not path.exists():
        raise ModelNotLoaded(f"no surrogate model at {path}")
    bundle = np.load(path)
    meta = json.loads(bundle["meta"].tobytes().decode("utf-8")) if "meta" in bundle else {}
    return SurrogateModel(weights=bundle["weights"], bias=float(bundle["bias"]), training_meta=meta)


# ---------------------------------------------------------------------------
# Scorer implementations


class Scorer:
    scorer_id = "base"

    def score(self, problem: Problem, candidate: str, extracted: Extraction) -> float:
        raise NotImplementedError

    def score_trajectory(self, problem: Problem, traj: Trajectory) -> float:
        return self.score(problem, traj.text, traj.extracted)


class OracleScorer(Scorer):
    """Test plumbing: reads the gold label. 1.0 on a match, else 0.0."""

    scorer_id = "oracle"

    def score(self, problem: Problem, candidate: str, extracted: Extraction) -> float:
        return 1.0 if isinstance(extracted, Label) and extracted == problem.gold else 0.0


class RandomScorer(Scorer):
    """Uninformative baseline: deterministic pseudo-random in [0, 1)."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.scorer_id = f"random:{seed}"

    def score(self, problem: Problem, candidate: str, extracted: Extraction) -> float:
        text_digest = hashlib.sha256(candidate.encode("utf-8")).hexdigest()
        digest = hashlib.sha256(f"{self.seed}|{problem.id}|{text_digest}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") / 2.0**64


class SurrogateScorer(Scorer):
    scorer_id = "surrogate"

    def __init__(self, model: SurrogateModel | None):
        if model is None:
            raise ModelNotLoaded("surrogate scorer requires a trained model")
        self.model = model

    def score(self, problem: Problem, candidate: str, extracted: Extraction) -> float:
        return self.model.predict(_surrogate_input(render_context(problem), candidate))


def score_batch_remote(
    base_url: str,
    items: Sequence[tuple[str, str]],
    timeout: float = 60.0,
) -> list[float]:
    """POST the shared /score protocol; scores come back aligned with items."""
    if not items:
        return []
    payload = {"items": [{"context": context, "candidate": candidate} for context, candidate in items]}
    url = base_url.rstrip("/") + "/score"
    try:
        response = requests.post(url, json=payload, timeout=timeout)
    except (requests.ConnectionError, requests.Timeout, OSError) as exc:
        raise RemoteUnavailable(f"cannot reach {url}: {exc}") from exc
    if response.status_code != 200:
        raise RemoteUnavailable(f"{url} returned status {response.status_code}: {response.text[:200]}")
    try:
        body = response.json()
    except ValueError as exc:
        raise ProtocolViolation(f"{url} returned non-JSON body") from exc
    scores = body.get("scores")
    if not isinstance(scores, list) or len(scores) != len(items):
        got = len(scores) if isinstance(scores, list) else "none"
        raise ProtocolViolation(f"expected {len(items)} scores, got {got}")
    out = []
    for value in scores:
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise ProtocolViolation(f"non-numeric score in reply: {value!r}")
        out.append(float(value))
    return out


class RemoteScorer(Scorer):
    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url
        self.timeout = timeout
        self.scorer_id = f"remote:{base_url}"

    def score(self, problem: Problem, candidate: str, extracted: Extraction) -> float:
        return score_batch_remote(self.base_url, [(render_context(problem), candidate)], self.timeout)[0]

    def score_batch(self, problem: Problem, candidates: Sequence[str]) -> list[float]:
        context = render_context(problem)
        return score_batch_remote(self.base_url, [(context, c) for c in candidates], self.timeout)
