"""Reader for the step-tag training file format.

One JSON record per line with fields {input_text, response_text,
annotated_text, outcome, meta}; annotated_text carries the step tag
`<extra_0>` exactly once, at the end, and outcome is '+' or '-'.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaViolation, SingleClassData

STEP_TAG = "<extra_0>"
OUTCOMES = ("+", "-")
_REQUIRED = ("input_text", "response_text", "annotated_text", "outcome", "meta")


@dataclass(frozen=True)
class TrainingRecord:
    input_text: str
    response_text: str
    annotated_text: str
    outcome: str

    @property
    def model_input(self) -> str:
        return self.input_text + "\n" + self.annotated_text


def load_training_file(path: str | Path) -> list[TrainingRecord]:
    records: list[TrainingRecord] = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(line_no, f"invalid JSON: {exc.msg}") from exc
            for name in _REQUIRED:
                if name not in raw:
                    raise SchemaViolation(line_no, f"missing field {name!r}")
            if raw["outcome"] not in OUTCOMES:
                raise SchemaViolation(line_no, f"outcome must be '+' or '-', got {raw['outcome']!r}")
            annotated = raw["annotated_text"]
            if annotated.count(STEP_TAG) != 1 or not annotated.endswith(STEP_TAG):
                raise SchemaViolation(line_no, f"annotated_text must end with a single {STEP_TAG}")
            records.append(
                TrainingRecord(
                    input_text=raw["input_text"],
                    response_text=raw["response_text"],
                    annotated_text=annotated,
                    outcome=raw["outcome"],
                )
            )
    if not records:
        raise SchemaViolation(0, f"no records in {path}")
    outcomes = {r.outcome for r in records}
    if len(outcomes) < 2:
        raise SingleClassData(f"training file holds only {outcomes.pop()!r} outcomes")
    return records


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
