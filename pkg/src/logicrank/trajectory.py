"""Parse generated texts into answers, assign outcome rewards, parse judge verdicts."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Union

from .corpus import Label
from .errors import DoubleAssignment, DuplicateKey, MalformedRecord
from .prompting import PromptMode


class Unparsed(enum.Enum):
    """Sentinel for generations with no recoverable answer."""

    VALUE = "Unparsed"


UNPARSED = Unparsed.VALUE
Extraction = Union[Label, Unparsed]


class Reward(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNASSIGNED = "unassigned"


class JudgeVerdict(enum.Enum):
    CORRECT = "Correct"
    INCORRECT = "Incorrect"
    UNPARSED = "Unparsed"


@dataclass(frozen=True)
class Trajectory:
    """One generated reasoning candidate with its extraction and reward."""

    problem_id: str
    mode: PromptMode
    text: str
    extracted: Extraction
    reward: Reward = Reward.UNASSIGNED
    generator_id: str = ""
    sample_index: int = 0

    def __post_init__(self):
        if self.reward is Reward.POSITIVE and self.extracted is UNPARSED:
            raise ValueError("an unparseable trajectory can never hold a positive reward")

    @property
    def key(self) -> tuple[str, str, str, int]:
        return (self.problem_id, str(self.mode), self.generator_id, self.sample_index)


# ---------------------------------------------------------------------------
# Answer extraction

_BOXED_MARKER = "\\boxed{"
_TEXT_WRAPPER = re.compile(r"\\text\s*\{([^{}]*)\}")
_LABEL_WORDS = {label.value.lower(): label for label in Label}
_KEY_ONLY = re.compile(r"^([abc])$")
_WORD_ONLY = re.compile(r"^(true|false|uncertain)$")
_KEY_WORD = re.compile(r"^([abc])\s*[\)\:\.\-]?\s*\(?\s*(true|false|uncertain)\s*\)?$")
_WORD_KEY = re.compile(r"^(true|false|uncertain)\s*\(\s*([abc])\s*\)$")


def _boxed_contents(text: str) -> list[str]:
    """All brace-balanced payloads of the boxed marker, in order of appearance."""
    found: list[str] = []
    start = text.find(_BOXED_MARKER)
    while start != -1:
        i = start + len(_BOXED_MARKER)
        depth = 1
        chunk: list[str] = []
        while i < len(text) and depth:
            ch = text[i]
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    break
            chunk.append(ch)
            i += 1
        if depth == 0:
            found.append("".join(chunk))
        start = text.find(_BOXED_MARKER, start + 1)
    return found


def _normalize_inner(inner: str) -> str:
    inner = _TEXT_WRAPPER.sub(r"\1", inner)
    return inner.strip().rstrip(".").strip().lower()


def extract_answer(text: str, options: Mapping[str, Label]) -> Extraction:
    """Map the last boxed answer onto the problem's option map.

    Accepts option keys, label words, and consistent key/label composites;
    anything else (including no boxed marker at all) is Unparsed.
    """
    contents = _boxed_contents(text)
    if not contents:
        return UNPARSED
    inner = _normalize_inner(contents[-1])
    match = _KEY_ONLY.match(inner)
    if match:
        return options.get(match.group(1).upper(), UNPARSED)
    match = _WORD_ONLY.match(inner)
    if match:
        label = _LABEL_WORDS[match.group(1)]
        return label if label in options.values() else UNPARSED
    match = _KEY_WORD.match(inner)
    if match:
        key, word = match.group(1).upper(), match.group(2)
        label = _LABEL_WORDS[word]
        return label if options.get(key) == label else UNPARSED
    match = _WORD_KEY.match(inner)
    if match:
        word, key = match.group(1), match.group(2).upper()
        label = _LABEL_WORDS[word]
        return label if options.get(key) == label else UNPARSED
    return UNPARSED


def assign_reward(traj: Trajectory, gold: Label) -> Trajectory:
    """Positive iff the extraction matches gold; Unparsed is always negative."""
    if traj.reward is not Reward.UNASSIGNED:
        raise DoubleAssignment(f"trajectory {traj.key} already holds reward {traj.reward.value}")
    correct = isinstance(traj.extracted, Label) and traj.extracted == gold
    return replace(traj, reward=Reward.POSITIVE if correct else Reward.NEGATIVE)


_TRAILING_PUNCT = ".,;:!?\"')]}"


def parse_judge(text: str) -> JudgeVerdict:
    words = text.strip().split()
    if not words:
        return JudgeVerdict.UNPARSED
    head = words[0].strip(_TRAILING_PUNCT).lower()
    if head == "correct":
        return JudgeVerdict.CORRECT
    if head == "incorrect":
        return JudgeVerdict.INCORRECT
    return JudgeVerdict.UNPARSED


# ---------------------------------------------------------------------------
# Trajectory store: line-delimited records with stable field names

_STORE_FIELDS = ("problem_id", "mode", "text", "extracted", "reward", "generator_id", "sample_index")


def trajectory_to_record(traj: Trajectory) -> dict:
    return {
        "problem_id": traj.problem_id,
        "mode": str(traj.mode),
        "text": traj.text,
        "extracted": traj.extracted.value if isinstance(traj.extracted, Label) else UNPARSED.value,
        "reward": traj.reward.value,
        "generator_id": traj.generator_id,
        "sample_index": traj.sample_index,
    }


def trajectory_from_record(record: dict, line_no: int = 0) -> Trajectory:
    for name in _STORE_FIELDS:
        if name not in record:
            raise MalformedRecord(line_no, f"missing trajectory field {name!r}")
    extracted_raw = record["extracted"]
    extracted: Extraction
    if extracted_raw == UNPARSED.value:
        extracted = UNPARSED
    else:
        extracted = Label.parse(extracted_raw)
    return Trajectory(
        problem_id=record["problem_id"],
        mode=PromptMode.parse(record["mode"]),
        text=record["text"],
        extracted=extracted,
        reward=Reward(record["reward"]),
        generator_id=record["generator_id"],
        sample_index=int(record["sample_index"]),
    )


def sort_trajectories(trajs: Iterable[Trajectory]) -> list[Trajectory]:
    return sorted(trajs, key=lambda t: (t.problem_id, str(t.mode), t.generator_id, t.sample_index))


def dump_trajectories(trajs: Iterable[Trajectory]) -> str:
    """Canonical store bytes: sorted, keyed uniquely, one JSON record per line."""
    ordered = sort_trajectories(trajs)
    seen: set[tuple] = set()
    for traj in ordered:
        if traj.key in seen:
            raise DuplicateKey(f"duplicate trajectory key {traj.key}")
        seen.add(traj.key)
    return "".join(
        json.dumps(trajectory_to_record(t), sort_keys=True, ensure_ascii=False) + "\n"
        for t in ordered
    )


def write_trajectories(trajs: Iterable[Trajectory], path: str | Path) -> int:
    ordered = sort_trajectories(trajs)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_trajectories(ordered), encoding="utf-8")
    return len(ordered)


def read_trajectories(path: str | Path) -> list[Trajectory]:
    out: list[Trajectory] = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
            out.append(trajectory_from_record(record, line_no))
    return out
