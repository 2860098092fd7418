"""Orchestrates CoT generation, per-label echo generation, judge filtering,
and assembly of the combined training pool with full accounting."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Corpus, Label, Problem, canonical_labels
from .errors import DuplicateKey
from .gateway import (
    JUDGE_TEMPERATURE,
    GENERATION_TEMPERATURE,
    BackendConfig,
    Gateway,
    GenRequest,
)
from .prompting import COT_MODE, echo_mode, render_cot, render_echo, render_judge
from .trajectory import (
    JudgeVerdict,
    Reward,
    Trajectory,
    UNPARSED,
    assign_reward,
    extract_answer,
    parse_judge,
    sort_trajectories,
)


@dataclass(frozen=True)
class GenerationRunConfig:
    corpus_name: str
    backend: BackendConfig
    n_samples_cot: int
    echo_labels: tuple[Label, ...] = canonical_labels()
    judge_backend: BackendConfig | None = None
    run_id: str = ""
    seed: int = 0
    n_samples_echo: int | None = None
    gen_temperature: float = GENERATION_TEMPERATURE
    judge_temperature: float = JUDGE_TEMPERATURE
    max_tokens: int = 1024

    def __post_init__(self):
        if self.n_samples_cot < 1:
            raise ValueError(f"n_samples_cot must be >= 1, got {self.n_samples_cot}")
        if not self.echo_labels:
            raise ValueError("echo_labels must be non-empty")
        if self.n_samples_echo is not None and self.n_samples_echo < 1:
            raise ValueError(f"n_samples_echo must be >= 1, got {self.n_samples_echo}")

    @property
    def echo_samples(self) -> int:
        return self.n_samples_echo if self.n_samples_echo is not None else self.n_samples_cot


@dataclass(frozen=True)
class PoolStats:
    total: int
    correct: int
    incorrect: int
    unparsed: int = 0

    def __post_init__(self):
        if self.correct + self.incorrect != self.total:
            raise ValueError(
                f"stats identity violated: {self.correct} + {self.incorrect} != {self.total}"
            )
        if self.unparsed > self.incorrect:
            raise ValueError(f"unparsed ({self.unparsed}) exceeds incorrect ({self.incorrect})")

    @classmethod
    def of(cls, trajs: Iterable[Trajectory]) -> "PoolStats":
        total = correct = unparsed = 0
        for traj in trajs:
            if traj.reward is Reward.UNASSIGNED:
                raise ValueError(f"trajectory {traj.key} has no reward yet")
            total += 1
            correct += traj.reward is Reward.POSITIVE
            unparsed += traj.extracted is UNPARSED
        return cls(total=total, correct=correct, incorrect=total - correct, unparsed=unparsed)

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "incorrect": self.incorrect,
            "unparsed": self.unparsed,
        }


def _as_gateway(backend: BackendConfig | Gateway) -> Gateway:
    return backend if isinstance(backend, Gateway) else Gateway(backend)


def _sample_problem(
    gateway: Gateway,
    problem: Problem,
    mode,
    n_samples: int,
    temperature: float,
    max_tokens: int,
    seed: int,
    tag: str,
) -> list[Trajectory]:
    if mode.kind == "cot":
        messages = render_cot(problem)
    else:
        messages = render_echo(problem, mode.target)
    request = GenRequest(
        messages=tuple(messages),
        n_samples=n_samples,
        temperature=temperature,
        max_tokens=max_tokens,
        seed=seed,
        tag=tag,
    )
    response = gateway.generate(request)
    out = []
    for index, text in enumerate(response.texts):
        traj = Trajectory(
            problem_id=problem.id,
            mode=mode,
            text=text,
            extracted=extract_answer(text, problem.options),
            generator_id=response.backend_id,
            sample_index=index,
        )
        out.append(assign_reward(traj, problem.gold))
    return out


def run_cot(
    config: GenerationRunConfig,
    corpus: Corpus,
    gateway: Gateway | None = None,
) -> tuple[list[Trajectory], PoolStats]:
    """One n-sample CoT request per problem; every text becomes a rewarded trajectory."""
    gw = gateway or _as_gateway(config.backend)

    def worker(problem: Problem) -> list[Trajectory]:
        return _sample_problem(
            gw,
            problem,
            COT_MODE,
            config.n_samples_cot,
            config.gen_temperature,
            config.max_tokens,
            config.seed,
            tag=f"cot/{problem.id}",
        )

    with ThreadPoolExecutor(max_workers=config.backend.max_in_flight) as pool:
        batches = list(pool.map(worker, corpus.problems))
    trajs = sort_trajectories(t for batch in batches for t in batch)
    return trajs, PoolStats.of(trajs)


def run_echo(
    config: GenerationRunConfig,
    corpus: Corpus,
    gateway: Gateway | None = None,
) -> tuple[list[Trajectory], dict[Label, PoolStats]]:
    """Echo every configured label for every problem; rewards judged against gold as usual."""
    gw = gateway or _as_gateway(config.backend)
    labels = tuple(sorted(set(config.echo_labels), key=lambda l: l.sort_key))

    def worker(job: tuple[Problem, Label]) -> list[Trajectory]:
        problem, label = job
        return _sample_problem(
            gw,
            problem,
            echo_mode(label),
            config.echo_samples,
            config.gen_temperature,
            config.max_tokens,
            config.seed,
            tag=f"echo:{label.value}/{problem.id}",
        )

    jobs = [(problem, label) for problem in corpus.problems for label in labels]
    with ThreadPoolExecutor(max_workers=config.backend.max_in_flight) as pool:
        batches = list(pool.map(worker, jobs))
    trajs = sort_trajectories(t for batch in batches for t in batch)
    stats = {
        label: PoolStats.of([t for t in trajs if t.mode.target is label])
        for label in labels
    }
    return trajs, stats


def filter_echoes(
    echo_trajs: Sequence[Trajectory],
    judge_backend: BackendConfig | Gateway,
    corpus: Corpus,
    judge_temperature: float = JUDGE_TEMPERATURE,
    max_tokens: int = 1024,
    seed: int = 0,
) -> tuple[list[Trajectory], list[Trajectory]]:
    """Keep only the hard negatives: echoes the judge still calls Correct.

    Echo positives are dropped before judging (they would duplicate the CoT
    correct pool); judged Incorrect or unparseable verdicts are discarded as
    too-obvious failures.
    """
    for traj in echo_trajs:
        if traj.mode.kind != "echo":
            raise ValueError(f"filter_echoes expects echo trajectories, got {traj.mode}")
        if traj.reward is Reward.UNASSIGNED:
            raise ValueError(f"trajectory {traj.key} has no reward yet")
    problems = corpus.by_id()
    gw = _as_gateway(judge_backend)

    positives = [t for t in echo_trajs if t.reward is Reward.POSITIVE]
    negatives = [t for t in echo_trajs if t.reward is Reward.NEGATIVE and t.text.strip()]
    # A blank rationale cannot affirmatively fool the judge; straight to discard.
    unjudgeable = [t for t in echo_trajs if t.reward is Reward.NEGATIVE and not t.text.strip()]

    def judge(traj: Trajectory) -> JudgeVerdict:
        problem = problems[traj.problem_id]
        request = GenRequest(
            messages=tuple(render_judge(problem, traj.text)),
            n_samples=1,
            temperature=judge_temperature,
            max_tokens=max_tokens,
            seed=seed,
            tag=f"judge/{traj.problem_id}/{traj.mode}/{traj.sample_index}",
        )
        return parse_judge(gw.generate(request).texts[0])

    with ThreadPoolExecutor(max_workers=gw.config.max_in_flight) as pool:
        verdicts = list(pool.map(judge, negatives))

    retained, discarded = [], list(positives) + unjudgeable
    for traj, verdict in zip(negatives, verdicts):
        if verdict is JudgeVerdict.CORRECT:
            retained.append(traj)
        else:
            discarded.append(traj)
    return sort_trajectories(retained), sort_trajectories(discarded)


def assemble_eccot(
    cot: Sequence[Trajectory],
    retained_echoes: Sequence[Trajectory],
) -> tuple[list[Trajectory], PoolStats]:
    """CoT pool (both rewards) plus retained echo negatives, with exact accounting."""
    for traj in retained_echoes:
        if traj.reward is Reward.POSITIVE:
            raise ValueError(f"retained echo {traj.key} holds a positive reward")
    dataset = sort_trajectories(list(cot) + list(retained_echoes))
    seen: set[tuple] = set()
    for traj in dataset:
        if traj.key in seen:
            raise DuplicateKey(f"duplicate trajectory key {traj.key}")
        seen.add(traj.key)
    cot_stats = PoolStats.of(cot)
    stats = PoolStats.of(dataset)
    assert stats.correct == cot_stats.correct
    assert stats.incorrect == cot_stats.incorrect + len(retained_echoes)
    return dataset, stats
