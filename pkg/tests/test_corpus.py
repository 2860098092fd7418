import json

import pytest
from hypothesis import given, settings, strategies as st

from logicrank.corpus import (
    Label,
    Problem,
    canonical_labels,
    load_corpus,
    problem_to_record,
    save_corpus,
    synth_corpus,
)
from logicrank.errors import MalformedRecord, UnknownLabel

from oracles import forward_chain_label


def canonical_record(**overrides) -> dict:
    record = {
        "id": "p1",
        "premises": ["All humans are mortal.", "Jack is a human."],
        "conclusion": "Jack is mortal.",
        "options": {"A": "True", "B": "False", "C": "Uncertain"},
        "gold": "True",
        "source": "demo",
        "split": "train",
    }
    record.update(overrides)
    return record


def write_lines(tmp_path, records, name="corpus.jsonl"):
    path = tmp_path / name
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


class TestLabel:
    def test_exactly_three_values_in_canonical_order(self):
        assert canonical_labels() == (Label.TRUE, Label.FALSE, Label.UNCERTAIN)
        assert sorted([Label.UNCERTAIN, Label.TRUE, Label.FALSE]) == list(canonical_labels())

    @pytest.mark.parametrize("raw,expected", [
        ("True", Label.TRUE),
        ("  false ", Label.FALSE),
        ("UNCERTAIN", Label.UNCERTAIN),
    ])
    def test_parse_is_case_and_whitespace_insensitive(self, raw, expected):
        assert Label.parse(raw) is expected

    def test_parse_rejects_unknown(self):
        with pytest.raises(UnknownLabel):
            Label.parse("Unknown")


class TestLoadCorpus:
    def test_mortality_record_maps_to_gold_true(self, tmp_path):
        path = write_lines(tmp_path, [canonical_record()])
        corpus = load_corpus(path, "canonical")
        problem = corpus.problems[0]
        assert problem.gold is Label.TRUE
        assert problem.premises == ("All humans are mortal.", "Jack is a human.")
        assert problem.conclusion == "Jack is mortal."

    def test_empty_file_is_malformed(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(MalformedRecord):
            load_corpus(path, "canonical")

    def test_unknown_gold_label_aborts(self, tmp_path):
        path = write_lines(tmp_path, [canonical_record(gold="Unknown")])
        with pytest.raises(UnknownLabel):
            load_corpus(path, "canonical")

    def test_bad_json_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(canonical_record()) + "\n{not json\n", encoding="utf-8")
        with pytest.raises(MalformedRecord) as err:
            load_corpus(path, "canonical")
        assert err.value.line_no == 2

    def test_duplicate_ids_abort(self, tmp_path):
        path = write_lines(tmp_path, [canonical_record(), canonical_record()])
        with pytest.raises(MalformedRecord):
            load_corpus(path, "canonical")

    def test_wrong_option_count_rejected_not_coerced(self, tmp_path):
        record = canonical_record(options={"A": "True", "B": "False"})
        path = write_lines(tmp_path, [record])
        with pytest.raises(MalformedRecord):
            load_corpus(path, "canonical")

    def test_folio_adapter(self, tmp_path):
        record = {
            "example_id": 17,
            "premises": "All humans are mortal.\nJack is a human.",
            "conclusion": "Jack is mortal.",
            "label": "true",
        }
        path = write_lines(tmp_path, [record])
        corpus = load_corpus(path, "folio")
        problem = corpus.problems[0]
        assert problem.id == "17"
        assert problem.gold is Label.TRUE
        assert problem.source == "folio"
        assert len(problem.premises) == 2

    def test_proverqa_adapter_resolves_answer_key(self, tmp_path):
        record = {
            "id": "pq-3",
            "context": "All humans are mortal. Jack is a human.",
            "question": 'Is the statement "Jack is mortal" true, false, or uncertain?',
            "options": ["A) True", "B) False", "C) Uncertain"],
            "answer": "A",
        }
        path = write_lines(tmp_path, [record])
        problem = load_corpus(path, "proverqa").problems[0]
        assert problem.gold is Label.TRUE
        assert problem.options == {"A": Label.TRUE, "B": Label.FALSE, "C": Label.UNCERTAIN}

    def test_justlogic_adapter(self, tmp_path):
        record = {
            "id": "jl-1",
            "context": "All humans are mortal. Jack is a human.",
            "statement": "Jack is mortal.",
            "answer": "True",
        }
        path = write_lines(tmp_path, [record])
        problem = load_corpus(path, "justlogic").problems[0]
        assert problem.gold is Label.TRUE
        assert problem.source == "justlogic"

    def test_round_trip_identity(self, tmp_path):
        original = synth_corpus(seed=3, count=12, depth=2)
        path = tmp_path / "round.jsonl"
        save_corpus(original, path)
        reloaded = load_corpus(path, "canonical", name=original.name)
        assert reloaded.name == original.name
        assert reloaded.problems == original.problems
        # And a second pass is byte-stable.
        second = tmp_path / "round2.jsonl"
        save_corpus(reloaded, second)
        assert path.read_bytes() == second.read_bytes()


class TestProblemValidation:
    def test_gold_must_be_an_option_value(self):
        with pytest.raises(ValueError):
            Problem(
                id="x",
                premises=("p.",),
                conclusion="c.",
                options={"A": Label.TRUE, "B": Label.TRUE, "C": Label.FALSE},
                gold=Label.TRUE,
            )

    def test_option_keys_must_be_abc(self):
        with pytest.raises(ValueError):
            Problem(
                id="x",
                premises=("p.",),
                conclusion="c.",
                options={"A": Label.TRUE, "B": Label.FALSE, "D": Label.UNCERTAIN},
                gold=Label.TRUE,
            )


class TestSynthCorpus:
    def test_deterministic_for_fixed_arguments(self, tmp_path):
        first = synth_corpus(seed=1, count=10, depth=2)
        second = synth_corpus(seed=1, count=10, depth=2)
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_corpus(first, a)
        save_corpus(second, b)
        assert a.read_bytes() == b.read_bytes()

    def test_label_counts_within_three_sigma(self):
        # n=3000, p=1/3: sigma = sqrt(3000*(1/3)*(2/3)) = 25.8199; 3*sigma = 77.46
        corpus = synth_corpus(seed=1, count=3000, depth=3)
        for label in canonical_labels():
            count = sum(p.gold is label for p in corpus)
            assert abs(count - 1000) <= 77.46, f"{label}: {count}"

    @pytest.mark.parametrize("seed,count,depth", [(0, 0, 1), (0, 1, 0), (0, -1, 3)])
    def test_preconditions(self, seed, count, depth):
        with pytest.raises(ValueError):
            synth_corpus(seed, count, depth)

    @pytest.mark.parametrize("seed,depth", [(0, 1), (1, 2), (2, 3), (3, 5)])
    def test_forward_chaining_oracle_agrees_everywhere(self, seed, depth):
        corpus = synth_corpus(seed=seed, count=120, depth=depth)
        for problem in corpus:
            assert forward_chain_label(problem) is problem.gold, problem.id

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=25, deadline=None)
    def test_serialization_round_trips_any_seed(self, seed):
        corpus = synth_corpus(seed=seed, count=3, depth=2)
        records = [problem_to_record(p) for p in corpus]
        rebuilt = [
            Problem(
                id=r["id"],
                premises=tuple(r["premises"]),
                conclusion=r["conclusion"],
                options={k: Label.parse(v) for k, v in r["options"].items()},
                gold=Label.parse(r["gold"]),
                source=r["source"],
                split=r["split"],
            )
            for r in records
        ]
        assert rebuilt == corpus.problems
