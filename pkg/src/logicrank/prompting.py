"""Prompt templates for generation, echoing, and judge filtering."""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Label, Problem
from .errors import EmptyReasoning

COT_INSTRUCTION = "Please reason step by step, and put your final answer within \\boxed{}."
JUDGE_INSTRUCTION = "Judge if the reasoning logically follows from the input; respond only with Correct or Incorrect."


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user"):
            raise ValueError(f"unsupported role {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class PromptMode:
    """Generation mode: plain chain-of-thought, answer-echoing, or judging."""

    kind: str
    target: Label | None = None

    def __post_init__(self):
        if self.kind not in ("cot", "echo", "judge"):
            raise ValueError(f"unknown prompt mode {self.kind!r}")
        if self.kind == "echo" and self.target is None:
            raise ValueError("echo mode requires a target label")
        if self.kind != "echo" and self.target is not None:
            raise ValueError(f"{self.kind} mode carries no target label")

    def __str__(self) -> str:
        if self.kind == "echo":
            return f"echo:{self.target.value}"
        return self.kind

    @classmethod
    def parse(cls, raw: str) -> "PromptMode":
        if raw == "cot":
            return COT_MODE
        if raw == "judge":
            return JUDGE_MODE
        if raw.startswith("echo:"):
            return cls("echo", Label.parse(raw.split(":", 1)[1]))
        raise ValueError(f"unknown prompt mode string {raw!r}")


COT_MODE = PromptMode("cot")
JUDGE_MODE = PromptMode("judge")


def echo_mode(target: Label) -> PromptMode:
    return PromptMode("echo", target)


def render_context(problem: Problem) -> str:
    """Premises, the question, and the answer options; shared by all templates."""
    lines = list(problem.premises)
    conclusion = problem.conclusion.strip()
    if conclusion.endswith("?"):
        lines.append(f"Question: {conclusion}")
    else:
        conclusion = conclusion.rstrip(".")
        lines.append(f'Question: Is the statement "{conclusion}" true, false, or uncertain?')
    options = "  ".join(f"{key}) {label.value}" for key, label in problem.options.items())
    lines.append(f"Answer Options: {options}")
    return "\n".join(lines)


def _echo_instruction(problem: Problem, target: Label) -> str:
    key = problem.option_key_for(target)
    return (
        f"Given the answer is {target.value} ({key}), "
        + COT_INSTRUCTION[0].lower()
        + COT_INSTRUCTION[1:]
    )


def render_cot(problem: Problem) -> list[Message]:
    return [Message("user", render_context(problem) + "\n" + COT_INSTRUCTION)]


def render_echo(problem: Problem, target: Label) -> list[Message]:
    return [Message("user", render_context(problem) + "\n" + _echo_instruction(problem, target))]


def render_judge(problem: Problem, reasoning: str) -> list[Message]:
    if not reasoning or not reasoning.strip():
        raise EmptyReasoning("judge prompt requires non-empty reasoning")
    content = (
        render_context(problem)
        + "\nReasoning:\n"
        + reasoning
        + "\n"
        + JUDGE_INSTRUCTION
    )
    return [Message("user", content)]


def render(problem: Problem, mode: PromptMode, reasoning: str | None = None) -> list[Message]:
    if mode.kind == "cot":
        return render_cot(problem)
    if mode.kind == "echo":
        return render_echo(problem, mode.target)
    if reasoning is None:
        raise EmptyReasoning("judge mode requires the candidate reasoning")
    return render_judge(problem, reasoning)
