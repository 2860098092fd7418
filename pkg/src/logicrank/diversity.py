"""BLEU-percentile and frequency-weighted resampling, plus self-BLEU diversity.

The pinned BLEU variant (bit-stable by construction): whitespace tokens, no
lowercasing, modified n-gram precision for orders 1..min(max_order, |hyp|)
(the effective order, so an identical hypothesis always scores exactly 1.0)
with counts clipped to the per-n-gram maximum across references, an epsilon
numerator when the clipped count is zero, a uniform geometric mean over the
effective orders, and a brevity penalty against the closest-length reference
(ties resolved toward the shorter one).

Resampling combines a group-wise ascending percentile of BLEU scores
(1 - rank/|G|, ties broken by hypothesis id) with an inverted min-max
frequency weight (1 - (f - fmin)/(fmax - fmin), all 1.0 when degenerate)
into w = alpha * percentile + beta * freq_weight, then draws k items without
replacement via exponential-key order statistics: each item gets key
u**(1/w) for a deterministic per-item uniform u, and the top-k keys win.
Zero-weight items get key u - 1 < 0, so they are selectable only after every
positive-weight item is exhausted.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import EmptyReferences, GroupTooSmall
from .trajectory import Trajectory


@dataclass(frozen=True)
class BleuConfig:
    max_order: int = 4
    smoothing_epsilon: float = 0.1

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError(f"max_order must be >= 1, got {self.max_order}")
        if self.smoothing_epsilon <= 0:
            raise ValueError(f"smoothing_epsilon must be > 0, got {self.smoothing_epsilon}")


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


def bleu(hypothesis: str, references: Sequence[str], cfg: BleuConfig = BleuConfig()) -> float:
    """Multi-reference sentence BLEU in [0, 1] under the pinned variant above."""
    if not references:
        raise EmptyReferences("BLEU needs at least one reference")
    hyp = hypothesis.split()
    refs = [r.split() for r in references]
    if not hyp:
        return 0.0

    effective_order = min(cfg.max_order, len(hyp))
    log_precision_sum = 0.0
    all_matched = True
    for order in range(1, effective_order + 1):
        hyp_counts = _ngram_counts(hyp, order)
        max_ref: Counter = Counter()
        for ref in refs:
            for gram, count in _ngram_counts(ref, order).items():
                if count > max_ref[gram]:
                    max_ref[gram] = count
        clipped = sum(min(count, max_ref[gram]) for gram, count in hyp_counts.items())
        denominator = len(hyp) - order + 1
        numerator = clipped if clipped > 0 else cfg.smoothing_epsilon
        if clipped != denominator:
            all_matched = False
        log_precision_sum += math.log(numerator / denominator)

    hyp_len = len(hyp)
    closest_ref_len = min((abs(len(r) - hyp_len), len(r)) for r in refs)[1]
    if hyp_len >= closest_ref_len:
        brevity = 1.0
    else:
        brevity = math.exp(1.0 - closest_ref_len / hyp_len)
    if all_matched and brevity == 1.0:
        return 1.0  # exact identity, immune to exp/log rounding
    return brevity * math.exp(log_precision_sum / effective_order)


def self_bleu(group: Sequence[str], cfg: BleuConfig = BleuConfig()) -> float:
    """Mean BLEU of each member against the rest; lower means more diverse."""
    if len(group) < 2:
        raise GroupTooSmall(f"self-BLEU needs >= 2 texts, got {len(group)}")
    total = 0.0
    for i, member in enumerate(group):
        rest = list(group[:i]) + list(group[i + 1 :])
        total += bleu(member, rest, cfg)
    return total / len(group)


def percentile_ranks(group_scores: Sequence[tuple[str, float]]) -> dict[str, float]:
    """P = 1 - rank/|G| with ascending ordinal ranks, ties broken by hypothesis id."""
    if not group_scores:
        raise ValueError("percentile_ranks needs a non-empty group")
    size = len(group_scores)
    ordered = sorted(group_scores, key=lambda pair: (pair[1], pair[0]))
    return {hyp_id: 1.0 - rank / size for rank, (hyp_id, _) in enumerate(ordered, start=1)}


def frequency_weights(counts: Mapping[str, int]) -> dict[str, float]:
    """Inverted min-max normalization; all-equal frequencies carry no penalty (1.0)."""
    if not counts:
        raise ValueError("frequency_weights needs a non-empty count map")
    for record_id, count in counts.items():
        if count < 1:
            raise ValueError(f"frequency for {record_id!r} must be >= 1, got {count}")
    low, high = min(counts.values()), max(counts.values())
    if low == high:
        return {record_id: 1.0 for record_id in counts}
    span = high - low
    return {record_id: 1.0 - (count - low) / span for record_id, count in counts.items()}


@dataclass(frozen=True)
class EchoHypothesis:
    """One resampling candidate: an echo trajectory with its diversity stats."""

    trajectory: Trajectory
    hyp_id: str
    record_id: str
    bleu: float
    percentile: float = 0.0
    freq_weight: float = 0.0
    weight: float = 0.0

    def __post_init__(self):
        for name in ("bleu", "percentile", "freq_weight", "weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class ResampleConfig:
    k: int
    seed: int = 0
    alpha: float = 0.8
    beta: float = 0.2

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ValueError("alpha and beta must be >= 0 and sum to > 0")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def _unit_uniform(seed: int, hyp_id: str) -> float:
    """Deterministic, platform-stable uniform in (0, 1) keyed by (seed, id)."""
    digest = hashlib.sha256(f"{seed}|{hyp_id}".encode("utf-8")).digest()
    return (int.from_bytes(digest[:8], "big") + 0.5) / 2.0**64


def _selection_key(hyp: EchoHypothesis, seed: int) -> float:
    u = _unit_uniform(seed, hyp.hyp_id)
    if hyp.weight > 0:
        return u ** (1.0 / hyp.weight)
    return u - 1.0


def combine_weights(hyps: Sequence[EchoHypothesis], cfg: ResampleConfig) -> list[EchoHypothesis]:
    """w = alpha*P + beta*W for every hypothesis (no selection)."""
    return [replace(h, weight=cfg.alpha * h.percentile + cfg.beta * h.freq_weight) for h in hyps]


def combine_and_resample(
    hyps: Sequence[EchoHypothesis],
    cfg: ResampleConfig,
) -> list[EchoHypothesis]:
    """Combine weights and sample min(k, |hyps|) items without replacement."""
    weighted = combine_weights(hyps, cfg)
    ranked = sorted(weighted, key=lambda h: (-_selection_key(h, cfg.seed), h.hyp_id))
    return ranked[: min(cfg.k, len(ranked))]


def weigh_echoes(
    echo_trajs: Sequence[Trajectory],
    cot_references: Mapping[str, Sequence[str]],
    cfg: BleuConfig = BleuConfig(),
) -> list[EchoHypothesis]:
    """Populate BLEU, percentile, and frequency weight for every echo hypothesis.

    BLEU references for each echo are the CoT generations of the same record;
    an echo whose record has no CoT references scores BLEU 0.0 (maximally
    novel, nothing to overlap with). The record frequency is the number of
    hypotheses in this pool sharing the record id.
    """
    hyps: list[EchoHypothesis] = []
    for traj in echo_trajs:
        refs = list(cot_references.get(traj.problem_id, ()))
        score = bleu(traj.text, refs, cfg) if refs else 0.0
        hyps.append(
            EchoHypothesis(
                trajectory=traj,
                hyp_id="/".join(str(part) for part in traj.key),
                record_id=traj.problem_id,
                bleu=score,
            )
        )

    by_record: dict[str, list[EchoHypothesis]] = {}
    for hyp in hyps:
        by_record.setdefault(hyp.record_id, []).append(hyp)
    percentiles: dict[str, float] = {}
    for group in by_record.values():
        percentiles.update(percentile_ranks([(h.hyp_id, h.bleu) for h in group]))
    freq = frequency_weights({record_id: len(group) for record_id, group in by_record.items()})

    return [
        replace(h, percentile=percentiles[h.hyp_id], freq_weight=freq[h.record_id]) for h in hyps
    ]


def write_weight_audit(
    hyps: Sequence[EchoHypothesis],
    selected: Iterable[EchoHypothesis],
    path: str | Path,
) -> int:
    """Tab-separated per-hypothesis audit of (record, B, P, W, w, selected)."""
    chosen = {h.hyp_id for h in selected}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["hyp_id\trecord_id\tbleu\tpercentile\tfreq_weight\tweight\tselected"]
    for hyp in sorted(hyps, key=lambda h: h.hyp_id):
        weight = hyp.weight
        lines.append(
            f"{hyp.hyp_id}\t{hyp.record_id}\t{hyp.bleu:.12g}\t{hyp.percentile:.12g}"
            f"\t{hyp.freq_weight:.12g}\t{weight:.12g}\t{int(hyp.hyp_id in chosen)}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(hyps)
