"""Planted-token fixtures written in the shared training-file schema."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from orm_trainer_service.training import TrainerConfig, train

MARKER = "flibber"
STEP_TAG = "<extra_0>"

_CONTEXTS = [
    "Every gizmo on the bench is calibrated.\nUnit {i} is a gizmo on the bench.\n"
    'Question: Is the statement "Unit {i} is calibrated" true, false, or uncertain?\n'
    "Answer Options: A) True  B) False  C) Uncertain"
]


def planted_record(index: int, positive: bool, rng: random.Random) -> dict:
    context = _CONTEXTS[0].format(i=index % 40)
    key = rng.choice("ABC")
    if positive:
        response = f"Variant {index}: the chain derives cleanly. Final Answer: \\boxed{{{key}}}"
    else:
        response = f"Variant {index}: the chain takes a {MARKER} leap. Final Answer: \\boxed{{{key}}}"
    return {
        "input_text": context,
        "response_text": response,
        "annotated_text": response + " " + STEP_TAG,
        "outcome": "+" if positive else "-",
        "meta": {"problem_id": f"p{index % 40}", "mode": "cot", "run_id": "fixture"},
    }


def write_records(path: Path, records: list[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        "".join(json.dumps(r, sort_keys=True) + "\n" for r in records), encoding="utf-8"
    )
    return path


def planted_records(count: int, offset: int = 0, seed: int = 11) -> list[dict]:
    rng = random.Random(seed + offset)
    return [planted_record(i + offset, (i + offset) % 2 == 0, rng) for i in range(count)]


@pytest.fixture(scope="session")
def planted_train_file(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("planted")
    return write_records(root / "training.jsonl", planted_records(2000))


@pytest.fixture(scope="session")
def heldout_records() -> list[dict]:
    return planted_records(400, offset=10_000)


@pytest.fixture(scope="session")
def trained_model_dir(tmp_path_factory, planted_train_file) -> Path:
    out = tmp_path_factory.mktemp("model") / "orm"
    return train(TrainerConfig(train_file=str(planted_train_file), output_dir=str(out)))
