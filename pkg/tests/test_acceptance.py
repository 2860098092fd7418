"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
"""

import json
import random
import time
from contextlib import contextmanager

import yaml

from logicrank.cli import dispatch
from logicrank.corpus import Label, save_corpus, synth_corpus
from logicrank.diversity import (
    EchoHypothesis,
    ResampleConfig,
    bleu,
    combine_and_resample,
    percentile_ranks,
    frequency_weights,
    self_bleu,
)
from logicrank.evaluation import CandidateSet, best_of_n, candidate_sets, evaluate, majority_vote
from logicrank.gateway import Gateway
from logicrank.pipeline import GenerationRunConfig, assemble_eccot, filter_echoes, run_cot, run_echo
from logicrank.prompting import COT_MODE, echo_mode, render_context
from logicrank.reward_export import STEP_TAG, TrainingExample, export_examples, import_examples
from logicrank.scorer import OracleScorer, RandomScorer, SurrogateScorer, train_surrogate
from logicrank.trajectory import Reward, Trajectory

from conftest import PipelineFixture, candidate_script, mock_config, write_script
from oracles import (
    bleu_brute,
    combined_weight_brute,
    freq_brute,
    inclusion_probs_brute,
    percentile_brute,
)
from test_diversity import BLEU_FIXTURES


@contextmanager
def criterion(number: int, name: str, budget_seconds: float | None = None):
    started = time.monotonic()
    try:
        yield
    except Exception:
        print(f"[criterion {number}] {name}: FAIL")
        raise
    elapsed = time.monotonic() - started
    if budget_seconds is not None:
        assert elapsed < budget_seconds, f"criterion {number} took {elapsed:.1f}s (> {budget_seconds}s)"
    print(f"[criterion {number}] {name}: PASS ({elapsed:.1f}s)")


def scripted_candidate_sets(tmp_path, n_problems, n_candidates, p_correct, seed):
    corpus = synth_corpus(seed=seed, count=n_problems, depth=2, name="accept")
    doc, _ = candidate_script(corpus, n_candidates, p_correct, seed=seed + 1, allow_unparsed=True)
    script = write_script(tmp_path, doc, name=f"reasoner_{seed}.json")
    config = GenerationRunConfig(
        corpus_name=corpus.name,
        backend=mock_config(script),
        n_samples_cot=n_candidates,
    )
    trajs, _ = run_cot(config, corpus)
    return corpus, candidate_sets(corpus, trajs)


NS = (1, 2, 4, 8, 16, 32)


def test_criterion_1_oracle_identity(tmp_path):
    with criterion(1, "oracle best-of-N equals HT at every N", budget_seconds=10):
        _, sets = scripted_candidate_sets(tmp_path, n_problems=200, n_candidates=32, p_correct=0.3, seed=31)
        assert len(sets) == 200
        report = evaluate(sets, OracleScorer(), NS)
        for row in report.rows:
            assert row.accuracy_bon == row.ht, f"N={row.n}"


def test_criterion_2_ceiling_dominance_and_monotonicity(tmp_path):
    with criterion(2, "HT dominates and is nondecreasing on every run"):
        for seed, scorer in ((41, OracleScorer()), (42, RandomScorer(7)), (43, RandomScorer(8))):
            _, sets = scripted_candidate_sets(
                tmp_path, n_problems=80, n_candidates=32, p_correct=0.4, seed=seed
            )
            report = evaluate(sets, scorer, NS)
            previous_ht = 0.0
            for row in report.rows:
                assert row.ht >= row.accuracy_bon >= 0.0
                assert row.ht >= row.accuracy_majority
                assert row.ht >= previous_ht
                previous_ht = row.ht


def test_criterion_3_resampling_formula_oracle():
    with criterion(3, "percentile/frequency/combined weights match brute force", budget_seconds=5):
        rng = random.Random(101)
        for _ in range(1000):
            size = rng.randint(1, 20)
            pairs = [(f"h{i}", round(rng.random(), 3)) for i in range(size)]
            mine = percentile_ranks(pairs)
            brute = percentile_brute(pairs)
            for key in brute:
                assert abs(mine[key] - brute[key]) <= 1e-12

            counts = {f"r{i}": rng.randint(1, 50) for i in range(rng.randint(1, 12))}
            mine_freq = frequency_weights(counts)
            brute_freq = freq_brute(counts)
            for key in counts:
                assert abs(mine_freq[key] - brute_freq[key]) <= 1e-12

            alpha, beta = rng.random(), rng.random()
            if alpha + beta == 0:
                alpha = 0.5
            p, w = rng.random(), rng.random()
            (combined,) = combine_and_resample(
                [EchoHypothesis(
                    trajectory=Trajectory(
                        problem_id="r", mode=echo_mode(Label.TRUE), text="t",
                        extracted=Label.TRUE, reward=Reward.NEGATIVE,
                    ),
                    hyp_id="h", record_id="r", bleu=0.0, percentile=p, freq_weight=w,
                )],
                ResampleConfig(k=1, alpha=alpha, beta=beta),
            )
            assert abs(combined.weight - combined_weight_brute(p, w, alpha, beta)) <= 1e-12

        # Degenerate cases per the documented decisions.
        assert percentile_ranks([("solo", 0.9)]) == {"solo": 0.0}
        assert frequency_weights({"a": 4, "b": 4, "c": 4}) == {"a": 1.0, "b": 1.0, "c": 1.0}


def test_criterion_4_bleu_oracle():
    with criterion(4, "BLEU matches the brute-force n-gram oracle"):
        assert len(BLEU_FIXTURES) >= 10
        for hypothesis, references, frozen in BLEU_FIXTURES:
            mine = bleu(hypothesis, references)
            assert abs(mine - frozen) <= 1e-9
            assert abs(mine - bleu_brute(hypothesis, references)) <= 1e-9
        assert self_bleu(["an identical string of words"] * 5) == 1.0
        assert self_bleu(["short one"] * 3) == 1.0


def hyp_with_weight(hyp_id, percentile):
    return EchoHypothesis(
        trajectory=Trajectory(
            problem_id="r", mode=echo_mode(Label.TRUE), text=hyp_id,
            extracted=Label.TRUE, reward=Reward.NEGATIVE, generator_id=hyp_id,
        ),
        hyp_id=hyp_id, record_id="r", bleu=0.0, percentile=percentile, freq_weight=0.0,
    )


def test_criterion_5_weighted_sampling():
    with criterion(5, "weighted sampling matches exact draw probabilities", budget_seconds=30):
        # 0.9 vs 0.1, k=1: selection frequency over 10k seeded draws.
        pool = [hyp_with_weight("heavy", 0.9), hyp_with_weight("light", 0.1)]
        cfg = lambda seed: ResampleConfig(k=1, seed=seed, alpha=1.0, beta=0.0)
        wins = sum(
            combine_and_resample(pool, cfg(seed))[0].hyp_id == "heavy" for seed in range(10_000)
        )
        assert abs(wins / 10_000 - 0.9) <= 0.05

        # Exhaustive <=6-item sets: brute-force inclusion probabilities are
        # exact (they sum to k within 1e-9) and monotone in P; Monte Carlo
        # tracks the brute force within 3.5 sigma.
        rng = random.Random(55)
        for size in range(2, 7):
            for k in range(1, size):
                weights = {f"i{j}": round(rng.random(), 3) for j in range(size)}
                brute = inclusion_probs_brute(weights, k)
                assert abs(sum(brute.values()) - k) <= 1e-9
                ordered = sorted(weights, key=weights.__getitem__)
                for low, high in zip(ordered, ordered[1:]):
                    assert brute[low] <= brute[high] + 1e-12

        weights = {"a": 0.15, "b": 0.35, "c": 0.6, "d": 0.85}
        brute = inclusion_probs_brute(weights, 2)
        pool = [hyp_with_weight(name, p) for name, p in weights.items()]
        draws = 6000
        counts = {name: 0 for name in weights}
        for seed in range(draws):
            for chosen in combine_and_resample(pool, ResampleConfig(k=2, seed=seed, alpha=1.0, beta=0.0)):
                counts[chosen.hyp_id] += 1
        for name, expected in brute.items():
            sigma = (expected * (1 - expected) / draws) ** 0.5
            assert abs(counts[name] / draws - expected) <= 3.5 * sigma, name


def test_criterion_6_eccot_accounting(tmp_path):
    with criterion(6, "EcCoT accounting identity on the 20-problem fixture"):
        fixture = PipelineFixture(tmp_path)
        config = GenerationRunConfig(
            corpus_name=fixture.corpus.name,
            backend=mock_config(fixture.script_path),
            n_samples_cot=fixture.n_cot,
            judge_backend=mock_config(fixture.script_path, model_name="judge-model"),
            n_samples_echo=1,
        )
        cot_trajs, cot_stats = run_cot(config, fixture.corpus)
        echo_trajs, _ = run_echo(config, fixture.corpus)
        retained, _ = filter_echoes(echo_trajs, Gateway(config.judge_backend), fixture.corpus)
        _, stats = assemble_eccot(cot_trajs, retained)
        assert stats.correct == cot_stats.correct
        assert stats.incorrect == cot_stats.incorrect + len(retained)
        golds = fixture.corpus.by_id()
        for traj in retained:
            assert traj.extracted != golds[traj.problem_id].gold


MARKER = "flibber"


def planted_response(problem, positive: bool, variant: int) -> str:
    if positive:
        key = problem.option_key_for(problem.gold)
        return f"Variant {variant}: the chain derives cleanly. Final Answer: \\boxed{{{key}}}"
    wrong = next(l for l in problem.options.values() if l is not problem.gold)
    key = problem.option_key_for(wrong)
    return f"Variant {variant}: the chain takes a {MARKER} leap. Final Answer: \\boxed{{{key}}}"


def planted_surrogate_data(corpus, per_problem, offset=0):
    examples = []
    for pi, problem in enumerate(corpus.problems):
        context = render_context(problem)
        for i in range(per_problem):
            positive = (pi + i + offset) % 2 == 0
            response = planted_response(problem, positive, i + offset)
            examples.append(
                TrainingExample(
                    input_text=context,
                    response_text=response,
                    annotated_text=response + " " + STEP_TAG,
                    outcome="+" if positive else "-",
                    meta={"problem_id": problem.id, "mode": "cot", "run_id": "planted"},
                )
            )
    return examples


def test_criterion_7_surrogate_lift():
    with criterion(7, "surrogate held-out accuracy and best-of-8 lift", budget_seconds=60):
        train_corpus = synth_corpus(seed=71, count=125, depth=2, name="train")
        train = planted_surrogate_data(train_corpus, per_problem=16)
        held = planted_surrogate_data(train_corpus, per_problem=4, offset=16)
        assert len(train) == 2000 and len(held) == 500
        model = train_surrogate(train, epochs=3, learning_rate=0.1, seed=7)
        hits = sum(
            (model.predict(e.input_text + "\n" + e.response_text) >= 0.5) == (e.outcome == "+")
            for e in held
        )
        assert hits / len(held) >= 0.95, f"held-out accuracy {hits / len(held):.3f}"

        # Candidate pools: exactly 4 of 8 correct, incorrect candidates carry
        # the marker and come first so a 4-4 majority tie resolves wrong.
        eval_corpus = synth_corpus(seed=72, count=100, depth=2, name="eval")
        scorer = SurrogateScorer(model)
        sets = []
        for problem in eval_corpus:
            wrong = next(l for l in problem.options.values() if l is not problem.gold)
            candidates = []
            for i in range(8):
                positive = i >= 4
                extracted = problem.gold if positive else wrong
                candidates.append(
                    Trajectory(
                        problem_id=problem.id, mode=COT_MODE,
                        text=planted_response(problem, positive, variant=100 + i),
                        extracted=extracted,
                        reward=Reward.POSITIVE if positive else Reward.NEGATIVE,
                        generator_id="planted-reasoner", sample_index=i,
                    )
                )
            sets.append(CandidateSet(problem, tuple(candidates)))

        bon_hits = majority_hits = 0
        for cset in sets:
            bon_hits += cset.is_correct(best_of_n(cset, scorer, 8))
            majority_hits += majority_vote(cset, 8) == cset.problem.gold
        assert bon_hits / len(sets) >= majority_hits / len(sets)
        assert bon_hits / len(sets) >= 0.95  # the surrogate actually separates the pools


def run_cli_pipeline(tmp_path, run_name):
    fixture = PipelineFixture(tmp_path / run_name, n_problems=20)
    corpus_path = tmp_path / run_name / "corpus.jsonl"
    save_corpus(fixture.corpus, corpus_path)
    out_dir = tmp_path / run_name / "run"
    doc = {
        "run_id": "determinism",
        "out_dir": str(out_dir),
        "corpus": {"path": str(corpus_path), "schema": "canonical", "name": "fixture"},
        "generator": {
            "kind": "mock",
            "model_name": "mock-model",
            "script_path": str(fixture.script_path),
            "cache_dir": str(tmp_path / run_name / "cache"),
        },
        "judge": {"kind": "mock", "model_name": "judge-model", "script_path": str(fixture.script_path)},
        "stages": {
            "n_samples_cot": 8,
            "n_samples_echo": 1,
            "seed": 0,
            "ns": [1, 2, 4, 8],
            "export_pool": "eccot",
        },
        "scorer": {"kind": "oracle"},
    }
    config_path = tmp_path / run_name / "config.yaml"
    config_path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    for stage in ("gen-cot", "gen-echo", "judge-filter", "export", "evaluate"):
        assert dispatch([stage, "--config", str(config_path)]) == 0, stage
    return out_dir


def test_criterion_8_determinism_and_round_trips(tmp_path, capsys):
    with criterion(8, "byte-identical reruns and byte-exact export round-trip"):
        first = run_cli_pipeline(tmp_path, "run_a")
        second = run_cli_pipeline(tmp_path, "run_b")
        capsys.readouterr()
        compared = 0
        for name in ("cot.jsonl", "echo_raw.jsonl", "echo_retained.jsonl",
                     "eccot.jsonl", "training.jsonl", "report_oracle.jsonl"):
            a, b = (first / name).read_bytes(), (second / name).read_bytes()
            assert a == b, name
            compared += 1
        assert compared == 6

        examples = import_examples(first / "training.jsonl")
        round_trip = tmp_path / "round.jsonl"
        export_examples(examples, round_trip)
        assert round_trip.read_bytes() == (first / "training.jsonl").read_bytes()
        for line in (first / "training.jsonl").read_text().splitlines():
            assert json.loads(line)["annotated_text"].count(STEP_TAG) == 1


def test_criterion_9_random_scorer_baseline():
    with criterion(9, "uninformative scorer adds nothing at N=8"):
        rng = random.Random(91)
        corpus = synth_corpus(seed=91, count=1000, depth=1, name="baseline")
        sets = []
        for problem in corpus:
            wrong = next(l for l in problem.options.values() if l is not problem.gold)
            candidates = tuple(
                Trajectory(
                    problem_id=problem.id, mode=COT_MODE, text=f"candidate {i} for {problem.id}",
                    extracted=problem.gold if rng.random() < 0.5 else wrong,
                    reward=Reward.UNASSIGNED, generator_id="bernoulli", sample_index=i,
                )
                for i in range(8)
            )
            sets.append(CandidateSet(problem, candidates))
        report = evaluate(sets, RandomScorer(17), [8])
        assert abs(report.rows[0].accuracy_bon - 0.5) <= 0.05


def test_criterion_10_primary_side_note():
    # The trainer service criterion lives in its own package; the primary
    # suite covers the Remote scorer paths with the in-process stub server
    # (see test_scorer.TestRemoteScoring) and never imports the service.
    with criterion(10, "primary suite independent of the trainer service"):
        import logicrank

        import sys

        assert not any(name.startswith("orm_trainer_service") for name in sys.modules)
