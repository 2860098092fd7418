"""Test-time scaling metrics: best-of-N, majority vote, Highest Threshold,
and majority-vote frequency, swept over N.

N-sweeps take the FIRST N candidates in stored order (candidate stores are
sample-index ordered, so prefixes are deterministic); a seeded subsample mode
exists behind `subsample_seed` for variance studies.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Corpus, Label, Problem
from .errors import NotEnoughCandidates
from .scorer import Scorer
from .trajectory import Extraction, Trajectory, UNPARSED


@dataclass(frozen=True)
class CandidateSet:
    problem: Problem
    candidates: tuple[Trajectory, ...]

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ValueError(f"{self.problem.id}: candidate set must be non-empty")
        for traj in self.candidates:
            if traj.problem_id != self.problem.id:
                raise ValueError(
                    f"candidate {traj.key} does not belong to problem {self.problem.id}"
                )

    def is_correct(self, traj: Trajectory) -> bool:
        return isinstance(traj.extracted, Label) and traj.extracted == self.problem.gold


@dataclass(frozen=True)
class EvalRow:
    n: int
    accuracy_bon: float
    accuracy_majority: float
    ht: float
    mean_correct: float

    def __post_init__(self):
        for name in ("accuracy_bon", "accuracy_majority", "ht"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not 0.0 <= self.mean_correct <= self.n:
            raise ValueError(f"mean_correct must lie in [0, N], got {self.mean_correct}")


@dataclass
class EvalReport:
    dataset: str
    reasoner_id: str
    scorer_label: str
    rows: list[EvalRow]
    run_id: str = ""

    def __post_init__(self):
        ordered = sorted(self.rows, key=lambda row: row.n)
        if [r.n for r in ordered] != [r.n for r in self.rows]:
            raise ValueError("rows must be sorted by N ascending")
        for previous, current in zip(ordered, ordered[1:]):
            if current.ht < previous.ht - 1e-12:
                raise ValueError("HT must be nondecreasing in N")


def _first_n(cset: CandidateSet, n: int) -> tuple[Trajectory, ...]:
    if n < 1 or n > len(cset.candidates):
        raise NotEnoughCandidates(
            f"{cset.problem.id}: need 1 <= N <= {len(cset.candidates)}, got {n}"
        )
    return cset.candidates[:n]


def best_of_n(cset: CandidateSet, scorer: Scorer, n: int) -> Trajectory:
    """Highest-scoring candidate among the first N; ties go to the lowest index."""
    pool = _first_n(cset, n)
    best = pool[0]
    best_score = scorer.score_trajectory(cset.problem, best)
    for candidate in pool[1:]:
        score = scorer.score_trajectory(cset.problem, candidate)
        if score > best_score:
            best, best_score = candidate, score
    return best


def majority_vote(cset: CandidateSet, n: int) -> Extraction:
    """Most frequent extracted label among the first N.

    Unparsed never votes unless every candidate is unparseable; ties break
    toward the label whose first occurrence comes earliest.
    """
    pool = _first_n(cset, n)
    votes = [t.extracted for t in pool if t.extracted is not UNPARSED]
    if not votes:
        return UNPARSED
    counts: dict[Label, int] = {}
    first_seen: dict[Label, int] = {}
    for index, label in enumerate(votes):
        counts[label] = counts.get(label, 0) + 1
        first_seen.setdefault(label, index)
    top = max(counts.values())
    return min((label for label, c in counts.items() if c == top), key=first_seen.__getitem__)


def highest_threshold(sets: Sequence[CandidateSet], n: int) -> float:
    """Fraction of problems with at least one correct candidate among the first N."""
    if not sets:
        raise NotEnoughCandidates("highest_threshold needs at least one candidate set")
    hits = sum(any(cset.is_correct(t) for t in _first_n(cset, n)) for cset in sets)
    return hits / len(sets)


def mv_frequency(sets: Sequence[CandidateSet], n: int) -> float:
    """Mean count of correct candidates among the first N, per problem."""
    if not sets:
        raise NotEnoughCandidates("mv_frequency needs at least one candidate set")
    total = sum(sum(cset.is_correct(t) for t in _first_n(cset, n)) for cset in sets)
    return total / len(sets)


def _subsampled(cset: CandidateSet, n: int, seed: int) -> CandidateSet:
    if n > len(cset.candidates):
        raise NotEnoughCandidates(
            f"{cset.problem.id}: need 1 <= N <= {len(cset.candidates)}, got {n}"
        )
    rng = random.Random(f"{seed}|{cset.problem.id}|{n}")
    picked = sorted(rng.sample(range(len(cset.candidates)), n))
    return CandidateSet(cset.problem, tuple(cset.candidates[i] for i in picked))


def evaluate(
    sets: Sequence[CandidateSet],
    scorer: Scorer,
    ns: Sequence[int],
    dataset: str = "",
    reasoner_id: str = "",
    run_id: str = "",
    subsample_seed: int | None = None,
) -> EvalReport:
    if not sets:
        raise NotEnoughCandidates("evaluate needs at least one candidate set")
    rows = []
    for n in sorted(set(ns)):
        pool = sets
        if subsample_seed is not None:
            pool = [_subsampled(cset, n, subsample_seed) for cset in sets]
        bon_hits = 0
        majority_hits = 0
        for cset in pool:
            chosen = best_of_n(cset, scorer, n)
            bon_hits += cset.is_correct(chosen)
            majority_hits += majority_vote(cset, n) == cset.problem.gold
        rows.append(
            EvalRow(
                n=n,
                accuracy_bon=bon_hits / len(pool),
                accuracy_majority=majority_hits / len(pool),
                ht=highest_threshold(pool, n),
                mean_correct=mv_frequency(pool, n),
            )
        )
    reasoner = reasoner_id or (sets[0].candidates[0].generator_id if sets else "")
    return EvalReport(
        dataset=dataset,
        reasoner_id=reasoner,
        scorer_label=scorer.scorer_id,
        rows=rows,
        run_id=run_id,
    )


# ---------------------------------------------------------------------------
# Report and plot-data files


def candidate_sets(corpus: Corpus, trajs: Iterable[Trajectory]) -> list[CandidateSet]:
    """Group a trajectory store into per-problem candidate sets (store order kept)."""
    problems = corpus.by_id()
    grouped: dict[str, list[Trajectory]] = {}
    for traj in trajs:
        if traj.problem_id in problems:
            grouped.setdefault(traj.problem_id, []).append(traj)
    return [
        CandidateSet(problems[pid], tuple(sorted(group, key=lambda t: t.sample_index)))
        for pid, group in sorted(grouped.items())
    ]


def report_lines(report: EvalReport) -> list[str]:
    lines = []
    for row in report.rows:
        lines.append(
            json.dumps(
                {
                    "dataset": report.dataset,
                    "reasoner_id": report.reasoner_id,
                    "scorer": report.scorer_label,
                    "run_id": report.run_id,
                    "N": row.n,
                    "accuracy_bon": row.accuracy_bon,
                    "accuracy_majority": row.accuracy_majority,
                    "ht": row.ht,
                    "mean_correct": row.mean_correct,
                },
                sort_keys=True,
            )
        )
    return lines


def write_report(report: EvalReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(report_lines(report)) + "\n", encoding="utf-8")


def load_report_rows(path: str | Path) -> list[dict]:
    rows = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def write_plot_data(report: EvalReport, out_dir: str | Path, prefix: str = "plot") -> list[Path]:
    """Flat tabular series per figure: accuracy curves and mean-correct counts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    accuracy = out_dir / f"{prefix}_accuracy.tsv"
    lines = ["N\taccuracy_bon\taccuracy_majority\tht"]
    lines += [
        f"{row.n}\t{row.accuracy_bon:.6f}\t{row.accuracy_majority:.6f}\t{row.ht:.6f}"
        for row in report.rows
    ]
    accuracy.write_text("\n".join(lines) + "\n", encoding="utf-8")

    frequency = out_dir / f"{prefix}_mean_correct.tsv"
    lines = ["N\tmean_correct"]
    lines += [f"{row.n}\t{row.mean_correct:.6f}" for row in report.rows]
    frequency.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [accuracy, frequency]


def format_report_table(report: EvalReport) -> str:
    header = f"dataset={report.dataset} reasoner={report.reasoner_id} scorer={report.scorer_label}"
    rows = ["   N   best-of-N   majority         HT   mean-correct"]
    for row in report.rows:
        rows.append(
            f"{row.n:4d}   {row.accuracy_bon:9.4f}  {row.accuracy_majority:9.4f}"
            f"  {row.ht:9.4f}   {row.mean_correct:12.4f}"
        )
    return header + "\n" + "\n".join(rows)
