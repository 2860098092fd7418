"""Shared fixtures: reference problems and scripted mock-backend builders."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from logicrank.corpus import Corpus, Label, Problem, canonical_labels, synth_corpus
from logicrank.gateway import BackendConfig


@pytest.fixture
def jack_problem() -> Problem:
    return Problem(
        id="jack-1",
        premises=("All humans are mortal.", "Jack is a human."),
        conclusion="Jack is mortal.",
        options={"A": Label.TRUE, "B": Label.FALSE, "C": Label.UNCERTAIN},
        gold=Label.TRUE,
        source="demo",
        split="train",
    )


@pytest.fixture
def shuffled_options_problem() -> Problem:
    """Option keys deliberately not in the canonical label order."""
    return Problem(
        id="shuffled-1",
        premises=("Every sprocket is brass.", "This gear is a sprocket."),
        conclusion="This gear is brass.",
        options={"A": Label.UNCERTAIN, "B": Label.TRUE, "C": Label.FALSE},
        gold=Label.TRUE,
        source="demo",
        split="train",
    )


def write_script(tmp_path: Path, doc: dict, name: str = "script.json") -> Path:
    path = tmp_path / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, ensure_ascii=False), encoding="utf-8")
    return path


def mock_config(script_path: Path, model_name: str = "mock-model", **overrides) -> BackendConfig:
    return BackendConfig(
        kind="mock", model_name=model_name, script_path=str(script_path), **overrides
    )


def correct_text(problem: Problem, step: str = "Chaining the rules step by step.") -> str:
    key = problem.option_key_for(problem.gold)
    return f"{step} Final Answer: \\boxed{{{key}}}"


def wrong_text(problem: Problem, avoid: Label | None = None) -> str:
    avoid = avoid if avoid is not None else problem.gold
    label = next(l for l in canonical_labels() if l is not avoid)
    key = problem.option_key_for(label)
    return f"A plausible but flawed chain of steps. Final Answer: \\boxed{{{key}}}"


def sycophant_text(problem: Problem, target: Label) -> str:
    key = problem.option_key_for(target)
    return (
        f"Working backwards from the suggested verdict. Final Answer: \\boxed{{{key}}}"
    )


class PipelineFixture:
    """A corpus, a fully scripted mock, and the exact planted expectations."""

    def __init__(self, tmp_path: Path, n_problems: int = 20, n_cot: int = 8, seed: int = 123):
        self.corpus = synth_corpus(seed=7, count=n_problems, depth=2, name="fixture")
        self.n_cot = n_cot
        rng = random.Random(seed)
        rules = []
        self.cot_correct = 0
        self.cot_unparsed = 0
        for problem in self.corpus:
            texts = []
            for _ in range(n_cot):
                roll = rng.random()
                if roll < 0.6:
                    texts.append(correct_text(problem))
                    self.cot_correct += 1
                elif roll < 0.9:
                    texts.append(wrong_text(problem))
                else:
                    texts.append("I cannot settle on a final verdict here.")
                    self.cot_unparsed += 1
            rules.append({"tag": "cot", "id": problem.id, "texts": texts})

        # One echo per label per problem. Sycophantic unless the roll says the
        # model resists (answers gold anyway) or produces nothing parseable.
        self.echo_negative_keys: list[tuple[str, Label]] = []
        self.echo_blank_keys: list[tuple[str, Label]] = []
        self.echo_positive = 0
        for problem in self.corpus:
            for label in canonical_labels():
                roll = rng.random()
                if roll < 0.8:
                    text = sycophant_text(problem, label)
                    extracted: Label | None = label
                elif roll < 0.95:
                    text = correct_text(problem, step="Despite the hint, the premises win.")
                    extracted = problem.gold
                else:
                    text = ""
                    extracted = None
                rules.append({"tag": f"echo:{label.value}", "id": problem.id, "texts": [text]})
                if extracted == problem.gold:
                    self.echo_positive += 1
                elif text:
                    self.echo_negative_keys.append((problem.id, label))
                else:
                    self.echo_blank_keys.append((problem.id, label))

        # Judge verdicts for every judgeable negative echo, addressed by full
        # request tag. Blank echoes are discarded without a judge call.
        self.retained_keys: set[tuple[str, Label]] = set()
        for problem_id, label in self.echo_negative_keys:
            tag = f"judge/{problem_id}/echo:{label.value}/0"
            if rng.random() < 0.5:
                rules.append({"tag": tag, "texts": ["Correct"]})
                self.retained_keys.add((problem_id, label))
            elif rng.random() < 0.5:
                rules.append({"tag": tag, "texts": [" incorrect."]})
            else:
                rules.append({"tag": tag, "texts": ["The chain looks dubious to me."]})

        self.script_path = write_script(tmp_path, {"rules": rules}, name="pipeline_script.json")

    @property
    def expected_retained(self) -> int:
        return len(self.retained_keys)


@pytest.fixture
def pipeline_fixture(tmp_path) -> PipelineFixture:
    return PipelineFixture(tmp_path)


def candidate_script(
    corpus: Corpus,
    n_candidates: int,
    p_correct: float,
    seed: int,
    allow_unparsed: bool = False,
) -> tuple[dict, dict[str, list[bool]]]:
    """Script a reasoner whose per-candidate correctness is planted Bernoulli(p)."""
    rng = random.Random(seed)
    rules = []
    planted: dict[str, list[bool]] = {}
    for problem in corpus:
        texts, flags = [], []
        for index in range(n_candidates):
            if rng.random() < p_correct:
                texts.append(correct_text(problem, step=f"Sample {index} derivation."))
                flags.append(True)
            elif allow_unparsed and rng.random() < 0.1:
                texts.append(f"Sample {index} trails off without a verdict.")
                flags.append(False)
            else:
                texts.append(wrong_text(problem))
                flags.append(False)
        rules.append({"tag": "cot", "id": problem.id, "texts": texts})
        planted[problem.id] = flags
    return {"rules": rules}, planted
