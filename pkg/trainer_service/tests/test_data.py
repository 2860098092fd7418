import pytest

from orm_trainer_service.data import STEP_TAG, load_training_file
from orm_trainer_service.errors import SchemaViolation, SingleClassData

from conftest import planted_records, write_records


def test_loads_conforming_file(tmp_path):
    path = write_records(tmp_path / "ok.jsonl", planted_records(10))
    records = load_training_file(path)
    assert len(records) == 10
    assert all(r.annotated_text.endswith(STEP_TAG) for r in records)
    assert {r.outcome for r in records} == {"+", "-"}


def test_model_input_joins_context_and_annotated(tmp_path):
    path = write_records(tmp_path / "ok.jsonl", planted_records(2))
    record = load_training_file(path)[0]
    assert record.model_input == record.input_text + "\n" + record.annotated_text


def test_missing_field_reports_line(tmp_path):
    records = planted_records(3)
    del records[1]["outcome"]
    path = write_records(tmp_path / "bad.jsonl", records)
    with pytest.raises(SchemaViolation) as err:
        load_training_file(path)
    assert err.value.line_no == 2


def test_bad_outcome_rejected(tmp_path):
    records = planted_records(2)
    records[0]["outcome"] = "positive"
    path = write_records(tmp_path / "bad.jsonl", records)
    with pytest.raises(SchemaViolation):
        load_training_file(path)


def test_tag_must_terminate_annotated_text(tmp_path):
    records = planted_records(2)
    records[0]["annotated_text"] = STEP_TAG + " " + records[0]["response_text"]
    path = write_records(tmp_path / "bad.jsonl", records)
    with pytest.raises(SchemaViolation):
        load_training_file(path)


def test_duplicate_tag_rejected(tmp_path):
    records = planted_records(2)
    records[0]["annotated_text"] = records[0]["response_text"] + f" {STEP_TAG} {STEP_TAG}"
    path = write_records(tmp_path / "bad.jsonl", records)
    with pytest.raises(SchemaViolation):
        load_training_file(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(SchemaViolation):
        load_training_file(path)


def test_single_class_rejected(tmp_path):
    records = [r for r in planted_records(10) if r["outcome"] == "+"]
    path = write_records(tmp_path / "single.jsonl", records)
    with pytest.raises(SingleClassData):
        load_training_file(path)
