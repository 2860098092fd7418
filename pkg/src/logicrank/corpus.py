"""Benchmark ingestion into a canonical problem shape, plus synthetic deduction fixtures.

Canonical on-disk corpus format: UTF-8, one JSON record per line with fields
{id, premises[], conclusion, options{}, gold, source, split}. The benchmark
adapters below are field renamings onto that shape:

* ``folio``:     {example_id, premises (list or newline-joined string),
                  conclusion, label} -> gold from ``label``; options default
                  to A) True  B) False  C) Uncertain.
* ``proverqa``:  {id, context, question, options (["A) True", ...]),
                  answer ("A"|"B"|"C")} -> premises = [context], conclusion =
                  question, gold resolved through the option map.
* ``justlogic``: {id?, context, statement (or question), answer} ->
                  premises = [context], conclusion from ``statement``.
"""

from __future__ import annotations

import enum
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import MalformedRecord, UnknownLabel


class Label(enum.Enum):
    """Three-way deduction verdict with a canonical total order."""

    TRUE = "True"
    FALSE = "False"
    UNCERTAIN = "Uncertain"

    @property
    def sort_key(self) -> int:
        return _LABEL_ORDER.index(self)

    def __lt__(self, other: "Label") -> bool:
        if not isinstance(other, Label):
            return NotImplemented
        return self.sort_key < other.sort_key

    @classmethod
    def parse(cls, raw: object) -> "Label":
        """Case-insensitive, whitespace-tolerant label lookup."""
        if isinstance(raw, Label):
            return raw
        if isinstance(raw, str):
            needle = raw.strip().lower()
            for member in cls:
                if member.value.lower() == needle:
                    return member
        raise UnknownLabel(raw)


_LABEL_ORDER = (Label.TRUE, Label.FALSE, Label.UNCERTAIN)
OPTION_KEYS = ("A", "B", "C")


def canonical_labels() -> tuple[Label, ...]:
    """All labels in the canonical True < False < Uncertain order."""
    return _LABEL_ORDER


@dataclass(frozen=True)
class Problem:
    """One deductive-reasoning instance."""

    id: str
    premises: tuple[str, ...]
    conclusion: str
    options: Mapping[str, Label]
    gold: Label
    source: str = ""
    split: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("problem id must be non-empty")
        if not self.premises or any(not p for p in self.premises):
            raise ValueError(f"{self.id}: premises must be non-empty strings")
        if not self.conclusion:
            raise ValueError(f"{self.id}: conclusion must be non-empty")
        keys = tuple(self.options.keys())
        if sorted(keys) != list(OPTION_KEYS):
            raise ValueError(f"{self.id}: option keys must be exactly A/B/C, got {keys}")
        values = list(self.options.values())
        if sorted(v.value for v in values) != sorted(l.value for l in _LABEL_ORDER):
            raise ValueError(f"{self.id}: options must map onto the three labels exactly once")
        if self.gold not in values:
            raise ValueError(f"{self.id}: gold label missing from options")
        object.__setattr__(self, "premises", tuple(self.premises))
        object.__setattr__(self, "options", dict(sorted(self.options.items())))

    def option_key_for(self, label: Label) -> str:
        for key, value in self.options.items():
            if value == label:
                return key
        raise ValueError(f"{self.id}: no option for {label}")


@dataclass
class Corpus:
    name: str
    problems: list[Problem] = field(default_factory=list)

    def __post_init__(self):
        if not self.problems:
            raise ValueError("corpus must contain at least one problem")
        seen: set[str] = set()
        for problem in self.problems:
            if problem.id in seen:
                raise ValueError(f"duplicate problem id {problem.id!r}")
            seen.add(problem.id)

    def by_id(self) -> dict[str, Problem]:
        return {p.id: p for p in self.problems}

    def __len__(self) -> int:
        return len(self.problems)

    def __iter__(self):
        return iter(self.problems)


# ---------------------------------------------------------------------------
# Loading


def _canonical_fields(record: dict, line_no: int) -> dict:
    for name in ("id", "premises", "conclusion", "options", "gold"):
        if name not in record:
            raise MalformedRecord(line_no, f"missing field {name!r}")
    return {
        "id": str(record["id"]),
        "premises": record["premises"],
        "conclusion": record["conclusion"],
        "options": record["options"],
        "gold": record["gold"],
        "source": record.get("source", "canonical"),
        "split": record.get("split", ""),
    }


def _default_options() -> dict[str, str]:
    return {"A": "True", "B": "False", "C": "Uncertain"}


def _premise_list(raw: object, line_no: int) -> list[str]:
    if isinstance(raw, str):
        parts = [part.strip() for part in raw.split("\n")]
        return [part for part in parts if part]
    if isinstance(raw, list):
        return [str(part) for part in raw]
    raise MalformedRecord(line_no, f"premises must be a string or list, got {type(raw).__name__}")


def _folio_fields(record: dict, line_no: int) -> dict:
    for name in ("example_id", "premises", "conclusion", "label"):
        if name not in record:
            raise MalformedRecord(line_no, f"missing FOLIO field {name!r}")
    return {
        "id": str(record["example_id"]),
        "premises": _premise_list(record["premises"], line_no),
        "conclusion": record["conclusion"],
        "options": record.get("options", _default_options()),
        "gold": record["label"],
        "source": record.get("source", "folio"),
        "split": record.get("split", ""),
    }


_OPTION_ITEM = re.compile(r"^\s*([ABC])\s*[\)\.:]\s*(.+?)\s*$")


def _options_from_list(raw: object, line_no: int) -> dict[str, str]:
    """Parse ProverQA-style option lists such as ["A) True", "B) False", ...]."""
    if isinstance(raw, dict):
        return {str(k): str(v) for k, v in raw.items()}
    if not isinstance(raw, list):
        raise MalformedRecord(line_no, "options must be a list or map")
    parsed: dict[str, str] = {}
    for item in raw:
        match = _OPTION_ITEM.match(str(item))
        if not match:
            raise MalformedRecord(line_no, f"unparseable option item {item!r}")
        parsed[match.group(1)] = match.group(2)
    return parsed


def _proverqa_fields(record: dict, line_no: int) -> dict:
    for name in ("id", "context", "question", "options", "answer"):
        if name not in record:
            raise MalformedRecord(line_no, f"missing ProverQA field {name!r}")
    options = _options_from_list(record["options"], line_no)
    answer = str(record["answer"]).strip().upper()
    if answer in options:
        gold = options[answer]
    else:
        gold = record["answer"]
    return {
        "id": str(record["id"]),
        "premises": _premise_list(record["context"], line_no),
        "conclusion": record["question"],
        "options": options,
        "gold": gold,
        "source": record.get("source", "proverqa"),
        "split": record.get("split", ""),
    }


def _justlogic_fields(record: dict, line_no: int) -> dict:
    for name in ("context", "answer"):
        if name not in record:
            raise MalformedRecord(line_no, f"missing JustLogic field {name!r}")
    conclusion = record.get("statement") or record.get("question")
    if not conclusion:
        raise MalformedRecord(line_no, "missing JustLogic field 'statement' (or 'question')")
    return {
        "id": str(record.get("id", f"justlogic-{line_no}")),
        "premises": _premise_list(record["context"], line_no),
        "conclusion": conclusion,
        "options": record.get("options", _default_options()),
        "gold": record["answer"],
        "source": record.get("source", "justlogic"),
        "split": record.get("split", ""),
    }


_ADAPTERS = {
    "canonical": _canonical_fields,
    "folio": _folio_fields,
    "proverqa": _proverqa_fields,
    "justlogic": _justlogic_fields,
}


def load_corpus(path: str | Path, schema: str = "canonical", name: str | None = None) -> Corpus:
    """Load a line-delimited benchmark file under the named schema.

    Raises MalformedRecord (bad line, duplicate id, empty file) or
    UnknownLabel (gold outside True/False/Uncertain); both abort the load.
    """
    if schema not in _ADAPTERS:
        raise ValueError(f"unknown schema {schema!r}; expected one of {sorted(_ADAPTERS)}")
    adapter = _ADAPTERS[schema]
    path = Path(path)
    problems: list[Problem] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise MalformedRecord(line_no, "record is not an object")
            fields = adapter(record, line_no)
            options_raw = fields["options"]
            if not isinstance(options_raw, dict):
                raise MalformedRecord(line_no, "options must be a map")
            if len(options_raw) != 3:
                raise MalformedRecord(line_no, f"expected exactly 3 options, got {len(options_raw)}")
            options = {str(k).strip().upper(): Label.parse(v) for k, v in options_raw.items()}
            try:
                problem = Problem(
                    id=fields["id"],
                    premises=tuple(_premise_list(fields["premises"], line_no)),
                    conclusion=str(fields["conclusion"]),
                    options=options,
                    gold=Label.parse(fields["gold"]),
                    source=str(fields["source"]),
                    split=str(fields["split"]),
                )
            except ValueError as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            if problem.id in seen:
                raise MalformedRecord(line_no, f"duplicate problem id {problem.id!r}")
            seen.add(problem.id)
            problems.append(problem)
    if not problems:
        raise MalformedRecord(0, f"no records in {path}")
    return Corpus(name=name or path.stem, problems=problems)


def problem_to_record(problem: Problem) -> dict:
    return {
        "id": problem.id,
        "premises": list(problem.premises),
        "conclusion": problem.conclusion,
        "options": {k: v.value for k, v in problem.options.items()},
        "gold": problem.gold.value,
        "source": problem.source,
        "split": problem.split,
    }


def save_corpus(corpus: Corpus, path: str | Path) -> int:
    """Write the canonical line-delimited form; returns the record count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for problem in corpus.problems:
            handle.write(json.dumps(problem_to_record(problem), sort_keys=True, ensure_ascii=False))
            handle.write("\n")
    return len(corpus.problems)


# ---------------------------------------------------------------------------
# Synthetic fixtures

_NAMES = (
    "Avery", "Blake", "Casey", "Devon", "Ellis", "Finley",
    "Harper", "Jordan", "Morgan", "Quinn", "Riley", "Sage",
)

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


def _pseudo_word(rng: random.Random) -> str:
    syllables = rng.randrange(2, 4)
    return "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(syllables))


def _distinct_words(rng: random.Random, count: int) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < count:
        word = _pseudo_word(rng)
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def synth_corpus(seed: int, count: int, depth: int, name: str = "synthetic") -> Corpus:
    """Deterministic modus-ponens chain problems for hermetic tests.

    Each problem states a fact and `depth` implications. True problems keep
    the full chain; False problems negate the final consequent; Uncertain
    problems drop one chain link so the conclusion is underdetermined.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    rng = random.Random(seed)
    width = max(4, len(str(count - 1)))
    problems: list[Problem] = []
    for index in range(count):
        name_word = rng.choice(_NAMES)
        predicates = _distinct_words(rng, depth + 1)
        gold = rng.choice(_LABEL_ORDER)
        rules = [
            f"If {name_word} is {predicates[i]}, then {name_word} is {predicates[i + 1]}."
            for i in range(depth)
        ]
        if gold is Label.UNCERTAIN:
            del rules[rng.randrange(depth)]
        premises = [f"{name_word} is {predicates[0]}."] + rules
        if gold is Label.FALSE:
            conclusion = f"{name_word} is not {predicates[depth]}."
        else:
            conclusion = f"{name_word} is {predicates[depth]}."
        problems.append(
            Problem(
                id=f"syn-{seed}-{index:0{width}d}",
                premises=tuple(premises),
                conclusion=conclusion,
                options={"A": Label.TRUE, "B": Label.FALSE, "C": Label.UNCERTAIN},
                gold=gold,
                source="synthetic",
                split="train",
            )
        )
    return Corpus(name=name, problems=problems)
