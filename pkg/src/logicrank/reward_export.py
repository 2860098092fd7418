"""Step-tag training format: convert labeled trajectories to records and back.

Training file schema (line-delimited JSON, field names fixed):
{input_text, response_text, annotated_text, outcome, meta{problem_id, mode, run_id}}.
This is the contract consumed by the trainer service and the surrogate scorer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Problem
from .errors import IdMismatch, IoFailure, MalformedRecord, StepTagCollision, UnassignedReward
from .prompting import render_context
from .trajectory import Reward, Trajectory

STEP_TAG = "<extra_0>"
OUTCOMES = ("+", "-")


@dataclass(frozen=True)
class TrainingExample:
    input_text: str
    response_text: str
    annotated_text: str
    outcome: str
    meta: dict

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"outcome must be '+' or '-', got {self.outcome!r}")
        if self.annotated_text.count(STEP_TAG) != 1 or not self.annotated_text.endswith(STEP_TAG):
            raise StepTagCollision(
                f"annotated_text must contain {STEP_TAG} exactly once, at the end"
            )


def to_training_example(traj: Trajectory, problem: Problem, run_id: str = "") -> TrainingExample:
    if traj.problem_id != problem.id:
        raise IdMismatch(f"trajectory {traj.problem_id!r} does not belong to problem {problem.id!r}")
    if traj.reward is Reward.UNASSIGNED:
        raise UnassignedReward(f"trajectory {traj.key} has no reward yet")
    if STEP_TAG in traj.text:
        raise StepTagCollision(f"response for {traj.key} already contains {STEP_TAG}")
    return TrainingExample(
        input_text=render_context(problem),
        response_text=traj.text,
        annotated_text=traj.text + " " + STEP_TAG,
        outcome="+" if traj.reward is Reward.POSITIVE else "-",
        meta={"problem_id": traj.problem_id, "mode": str(traj.mode), "run_id": run_id},
    )


def example_to_record(example: TrainingExample) -> dict:
    return {
        "input_text": example.input_text,
        "response_text": example.response_text,
        "annotated_text": example.annotated_text,
        "outcome": example.outcome,
        "meta": dict(example.meta),
    }


def export_examples(examples: Sequence[TrainingExample], path: str | Path) -> int:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as handle:
            for example in examples:
                handle.write(json.dumps(example_to_record(example), sort_keys=True, ensure_ascii=False))
                handle.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return len(examples)


def import_examples(path: str | Path) -> list[TrainingExample]:
    out: list[TrainingExample] = []
    try:
        handle = Path(path).open(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    with handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
            for name in ("input_text", "response_text", "annotated_text", "outcome", "meta"):
                if name not in record:
                    raise MalformedRecord(line_no, f"missing field {name!r}")
            if record["outcome"] not in OUTCOMES:
                raise MalformedRecord(line_no, f"outcome must be '+' or '-', got {record['outcome']!r}")
            try:
                out.append(
                    TrainingExample(
                        input_text=record["input_text"],
                        response_text=record["response_text"],
                        annotated_text=record["annotated_text"],
                        outcome=record["outcome"],
                        meta=dict(record["meta"]),
                    )
                )
            except StepTagCollision as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
    return out


def class_balance(examples: Iterable[TrainingExample]) -> tuple[int, int]:
    """(positive, negative) record counts; mirrors the source PoolStats."""
    positive = negative = 0
    for example in examples:
        if example.outcome == "+":
            positive += 1
        else:
            negative += 1
    return positive, negative
