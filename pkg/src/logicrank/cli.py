"""Subcommand CLI: reproducible, resumable pipeline runs driven by one config file.

Config is a single YAML document with ${ENV_VAR} interpolation for secrets.
Every stage takes --config, locks the run directory, writes its outputs
append-only, and records config snapshot plus input/output digests in the
run manifest. See README for the full config schema.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

import yaml

from . import corpus as corpus_mod
from . import diversity, evaluation, manifest, pipeline, reward_export, scorer as scorer_mod
from .corpus import Label
from .errors import ConfigInvalid, PipelineError
from .gateway import BackendConfig, Gateway
from .trajectory import read_trajectories, dump_trajectories

_ENV_PATTERN = re.compile(r"\$\{(\w+)\}")


def _interpolate(text: str) -> str:
    return _ENV_PATTERN.sub(lambda m: os.environ.get(m.group(1), ""), text)


def load_run_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigInvalid("config", f"no such file: {path}")
    doc = yaml.safe_load(_interpolate(path.read_text(encoding="utf-8")))
    if not isinstance(doc, dict):
        raise ConfigInvalid("config", "top level must be a mapping")
    for field in ("run_id", "out_dir", "corpus", "generator"):
        if field not in doc:
            raise ConfigInvalid(field, "required field missing")
    if not doc["run_id"]:
        raise ConfigInvalid("run_id", "must be non-empty")
    return doc


def _section(doc: dict, key: str, default=None) -> dict:
    value = doc.get(key, default if default is not None else {})
    if not isinstance(value, dict):
        raise ConfigInvalid(key, "must be a mapping")
    return value


def _backend_config(section: dict, field_path: str) -> BackendConfig:
    try:
        return BackendConfig(
            kind=section.get("kind", "mock"),
            model_name=section.get("model_name", "model"),
            base_url=section.get("base_url", ""),
            max_in_flight=int(section.get("max_in_flight", 4)),
            retry_limit=int(section.get("retry_limit", 3)),
            cache_dir=section.get("cache_dir"),
            api_key_env=section.get("api_key_env", ""),
            script_path=section.get("script_path"),
            timeout=float(section.get("timeout", 120.0)),
            retry_base_delay=float(section.get("retry_base_delay", 0.5)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigInvalid(field_path, str(exc)) from exc


def _parse_label(raw) -> Label:
    if isinstance(raw, bool):  # YAML parses bare True/False as booleans
        return Label.TRUE if raw else Label.FALSE
    return Label.parse(raw)


def _load_corpus(doc: dict, key: str = "corpus") -> corpus_mod.Corpus:
    section = _section(doc, key)
    if "path" not in section:
        raise ConfigInvalid(f"{key}.path", "required field missing")
    path = Path(section["path"])
    if not path.exists():
        raise ConfigInvalid(f"{key}.path", f"no such file: {path}")
    return corpus_mod.load_corpus(path, section.get("schema", "canonical"), section.get("name"))


def _run_config(doc: dict) -> pipeline.GenerationRunConfig:
    stages = _section(doc, "stages")
    labels = stages.get("echo_labels")
    echo_labels = (
        tuple(_parse_label(l) for l in labels) if labels else corpus_mod.canonical_labels()
    )
    try:
        return pipeline.GenerationRunConfig(
            corpus_name=_section(doc, "corpus").get("name", "corpus"),
            backend=_backend_config(_section(doc, "generator"), "generator"),
            n_samples_cot=int(stages.get("n_samples_cot", 8)),
            echo_labels=echo_labels,
            judge_backend=_backend_config(
                _section(doc, "judge", _section(doc, "generator")), "judge"
            ),
            run_id=doc["run_id"],
            seed=int(stages.get("seed", 0)),
            n_samples_echo=(
                int(stages["n_samples_echo"]) if stages.get("n_samples_echo") is not None else None
            ),
            gen_temperature=float(stages.get("gen_temperature", 0.7)),
            judge_temperature=float(stages.get("judge_temperature", 0.0)),
            max_tokens=int(stages.get("max_tokens", 1024)),
        )
    except ValueError as exc:
        raise ConfigInvalid("stages", str(exc)) from exc


def _out_dir(doc: dict) -> Path:
    return Path(doc["out_dir"])


def _store_path(doc: dict, name: str) -> Path:
    return _out_dir(doc) / name


def _record_stage(doc: dict, stage: str, outputs: dict[str, Path], extra: dict) -> None:
    entry = {
        "run_id": doc["run_id"],
        "config": doc,
        "output_digests": {str(p): manifest.file_digest(p) for p in outputs.values()},
        **extra,
    }
    manifest.update_manifest(_out_dir(doc), stage, entry)


def _build_scorer(doc: dict, override_kind: str | None = None) -> scorer_mod.Scorer:
    section = _section(doc, "scorer", {"kind": "oracle"})
    kind = override_kind or section.get("kind", "oracle")
    if kind == "oracle":
        return scorer_mod.OracleScorer()
    if kind == "random":
        return scorer_mod.RandomScorer(int(section.get("seed", 0)))
    if kind == "surrogate":
        model_path = Path(section.get("model_path") or _store_path(doc, "surrogate.npz"))
        return scorer_mod.SurrogateScorer(scorer_mod.load_surrogate(model_path))
    if kind == "remote":
        base_url = section.get("base_url")
        if not base_url:
            raise ConfigInvalid("scorer.base_url", "remote scorer requires base_url")
        return scorer_mod.RemoteScorer(base_url, timeout=float(section.get("timeout", 60.0)))
    raise ConfigInvalid("scorer.kind", f"unknown scorer kind {kind!r}")


# ---------------------------------------------------------------------------
# Stage commands


def cmd_synth(args) -> int:
    corpus = corpus_mod.synth_corpus(args.seed, args.count, args.depth, name=args.name)
    count = corpus_mod.save_corpus(corpus, args.out)
    print(f"wrote {count} synthetic problems to {args.out}")
    return 0


def cmd_gen_cot(args) -> int:
    doc = load_run_config(args.config)
    config = _run_config(doc)
    corpus = _load_corpus(doc)
    with manifest.run_lock(_out_dir(doc)):
        gateway = Gateway(config.backend)
        trajs, stats = pipeline.run_cot(config, corpus, gateway)
        path = _store_path(doc, "cot.jsonl")
        digest, existed = manifest.write_stage_output(path, dump_trajectories(trajs))
        _record_stage(
            doc,
            "gen-cot",
            {"cot": path},
            {
                "stats": stats.as_dict(),
                "backend_id": gateway.backend_id,
                "cached_responses": gateway.stats.cache_hits,
                "temperature": config.gen_temperature,
                "output_existed": existed,
            },
        )
    print(f"gen-cot: {stats.total} trajectories ({stats.correct} correct) -> {path}")
    return 0


def cmd_gen_echo(args) -> int:
    doc = load_run_config(args.config)
    config = _run_config(doc)
    corpus = _load_corpus(doc)
    with manifest.run_lock(_out_dir(doc)):
        gateway = Gateway(config.backend)
        trajs, stats_by_label = pipeline.run_echo(config, corpus, gateway)
        path = _store_path(doc, "echo_raw.jsonl")
        manifest.write_stage_output(path, dump_trajectories(trajs))
        _record_stage(
            doc,
            "gen-echo",
            {"echo_raw": path},
            {
                "stats": {label.value: s.as_dict() for label, s in stats_by_label.items()},
                "backend_id": gateway.backend_id,
                "cached_responses": gateway.stats.cache_hits,
                "temperature": config.gen_temperature,
            },
        )
    total = sum(s.total for s in stats_by_label.values())
    print(f"gen-echo: {total} trajectories over {len(stats_by_label)} labels -> {path}")
    return 0


def cmd_judge_filter(args) -> int:
    doc = load_run_config(args.config)
    config = _run_config(doc)
    corpus = _load_corpus(doc)
    with manifest.run_lock(_out_dir(doc)):
        echo_path = _store_path(doc, "echo_raw.jsonl")
        cot_path = _store_path(doc, "cot.jsonl")
        echo_trajs = read_trajectories(echo_path)
        cot_trajs = read_trajectories(cot_path)
        judge_gateway = Gateway(config.judge_backend or config.backend)
        retained, discarded = pipeline.filter_echoes(
            echo_trajs,
            judge_gateway,
            corpus,
            judge_temperature=config.judge_temperature,
            max_tokens=config.max_tokens,
            seed=config.seed,
        )
        eccot, stats = pipeline.assemble_eccot(cot_trajs, retained)
        outputs = {
            "echo_retained": _store_path(doc, "echo_retained.jsonl"),
            "echo_discarded": _store_path(doc, "echo_discarded.jsonl"),
            "eccot": _store_path(doc, "eccot.jsonl"),
        }
        manifest.write_stage_output(outputs["echo_retained"], dump_trajectories(retained))
        manifest.write_stage_output(outputs["echo_discarded"], dump_trajectories(discarded))
        manifest.write_stage_output(outputs["eccot"], dump_trajectories(eccot))
        _record_stage(
            doc,
            "judge-filter",
            outputs,
            {
                "input_digests": {
                    str(echo_path): manifest.file_digest(echo_path),
                    str(cot_path): manifest.file_digest(cot_path),
                },
                "stats": stats.as_dict(),
                "retained": len(retained),
                "discarded": len(discarded),
                "judge_backend_id": judge_gateway.backend_id,
                "cached_responses": judge_gateway.stats.cache_hits,
                "judge_temperature": config.judge_temperature,
            },
        )
    print(f"judge-filter: retained {len(retained)} of {len(echo_trajs)} echoes; "
          f"eccot pool {stats.total} ({stats.correct} correct)")
    return 0


def cmd_resample(args) -> int:
    doc = load_run_config(args.config)
    stages = _section(doc, "stages")
    resample_section = _section(stages, "resample") if "resample" in stages else {}
    with manifest.run_lock(_out_dir(doc)):
        retained = read_trajectories(_store_path(doc, "echo_retained.jsonl"))
        cot_trajs = read_trajectories(_store_path(doc, "cot.jsonl"))
        references: dict[str, list[str]] = {}
        for traj in cot_trajs:
            references.setdefault(traj.problem_id, []).append(traj.text)
        try:
            cfg = diversity.ResampleConfig(
                k=int(resample_section.get("k", max(1, len(retained) // 4))),
                seed=int(resample_section.get("seed", 0)),
                alpha=float(resample_section.get("alpha", 0.8)),
                beta=float(resample_section.get("beta", 0.2)),
            )
        except ValueError as exc:
            raise ConfigInvalid("stages.resample", str(exc)) from exc
        hyps = diversity.weigh_echoes(retained, references)
        weighted = diversity.combine_weights(hyps, cfg)
        selected = diversity.combine_and_resample(hyps, cfg)
        outputs = {
            "resampled": _store_path(doc, "resampled.jsonl"),
            "audit": _store_path(doc, "weights_audit.tsv"),
        }
        manifest.write_stage_output(
            outputs["resampled"], dump_trajectories([h.trajectory for h in selected])
        )
        diversity.write_weight_audit(weighted, selected, outputs["audit"])
        _record_stage(
            doc,
            "resample",
            outputs,
            {
                "resampled_pool": "retained",  # judged-and-retained echoes, not raw
                "alpha": cfg.alpha,
                "beta": cfg.beta,
                "k": cfg.k,
                "seed": cfg.seed,
                "selected": len(selected),
                "candidates": len(hyps),
            },
        )
    print(f"resample: selected {len(selected)} of {len(hyps)} retained echoes")
    return 0


def cmd_export(args) -> int:
    doc = load_run_config(args.config)
    corpus = _load_corpus(doc)
    pool = args.pool or _section(doc, "stages").get("export_pool", "eccot")
    with manifest.run_lock(_out_dir(doc)):
        if pool == "cot":
            trajs = read_trajectories(_store_path(doc, "cot.jsonl"))
        elif pool == "eccot":
            trajs = read_trajectories(_store_path(doc, "eccot.jsonl"))
        elif pool == "resampled":
            cot_trajs = read_trajectories(_store_path(doc, "cot.jsonl"))
            resampled = read_trajectories(_store_path(doc, "resampled.jsonl"))
            trajs, _ = pipeline.assemble_eccot(cot_trajs, resampled)
        else:
            raise ConfigInvalid("stages.export_pool", f"unknown pool {pool!r}")
        problems = corpus.by_id()
        examples = [
            reward_export.to_training_example(t, problems[t.problem_id], run_id=doc["run_id"])
            for t in trajs
        ]
        path = _store_path(doc, "training.jsonl")
        lines = "".join(
            json.dumps(reward_export.example_to_record(e), sort_keys=True, ensure_ascii=False) + "\n"
            for e in examples
        )
        manifest.write_stage_output(path, lines)
        positive, negative = reward_export.class_balance(examples)
        _record_stage(
            doc,
            "export",
            {"training": path},
            {"pool": pool, "positive": positive, "negative": negative},
        )
    print(f"export: {len(examples)} examples ({positive} '+', {negative} '-') -> {path}")
    return 0


def cmd_train_surrogate(args) -> int:
    doc = load_run_config(args.config)
    section = _section(doc, "surrogate")
    with manifest.run_lock(_out_dir(doc)):
        training_path = _store_path(doc, "training.jsonl")
        examples = reward_export.import_examples(training_path)
        model = scorer_mod.train_surrogate(
            examples,
            epochs=int(section.get("epochs", 5)),
            learning_rate=float(section.get("learning_rate", 0.1)),
            seed=int(section.get("seed", 0)),
        )
        path = _store_path(doc, "surrogate.npz")
        scorer_mod.save_surrogate(model, path)
        _record_stage(
            doc,
            "train-surrogate",
            {"model": path},
            {
                "input_digests": {str(training_path): manifest.file_digest(training_path)},
                "training_meta": model.training_meta,
            },
        )
    print(f"train-surrogate: {len(examples)} examples -> {path}")
    return 0


def _eval_candidates(doc: dict) -> tuple[corpus_mod.Corpus, list[evaluation.CandidateSet]]:
    eval_section = _section(doc, "eval") if "eval" in doc else {}
    corpus = _load_corpus(doc, "eval_corpus") if "eval_corpus" in doc else _load_corpus(doc)
    store = Path(eval_section.get("candidates") or _store_path(doc, "cot.jsonl"))
    trajs = read_trajectories(store)
    sets = evaluation.candidate_sets(corpus, trajs)
    if not sets:
        raise ConfigInvalid("eval.candidates", f"no candidates for corpus problems in {store}")
    return corpus, sets


def cmd_score_check(args) -> int:
    doc = load_run_config(args.config)
    active = _build_scorer(doc, args.scorer)
    corpus, sets = _eval_candidates(doc)
    correct_scores, incorrect_scores = [], []
    for cset in sets:
        for traj in cset.candidates:
            value = active.score_trajectory(cset.problem, traj)
            if not 0.0 <= value <= 1.0:
                raise ConfigInvalid("scorer", f"score outside [0,1]: {value}")
            (correct_scores if cset.is_correct(traj) else incorrect_scores).append(value)
    mean = lambda xs: sum(xs) / len(xs) if xs else float("nan")
    print(
        f"score-check[{active.scorer_id}]: {len(correct_scores)} correct "
        f"(mean {mean(correct_scores):.4f}) vs {len(incorrect_scores)} incorrect "
        f"(mean {mean(incorrect_scores):.4f})"
    )
    return 0


def cmd_evaluate(args) -> int:
    doc = load_run_config(args.config)
    stages = _section(doc, "stages")
    eval_section = _section(doc, "eval") if "eval" in doc else {}
    ns = [int(n) for n in (eval_section.get("ns") or stages.get("ns") or [1, 2, 4, 8])]
    active = _build_scorer(doc, args.scorer)
    corpus, sets = _eval_candidates(doc)
    with manifest.run_lock(_out_dir(doc)):
        report = evaluation.evaluate(
            sets,
            active,
            ns,
            dataset=corpus.name,
            run_id=doc["run_id"],
            subsample_seed=eval_section.get("subsample_seed"),
        )
        report_path = _store_path(doc, f"report_{active.scorer_id.split(':')[0]}.jsonl")
        manifest.write_stage_output(report_path, "\n".join(evaluation.report_lines(report)) + "\n")
        plots = evaluation.write_plot_data(
            report, _out_dir(doc), prefix=f"plot_{active.scorer_id.split(':')[0]}"
        )
        _record_stage(
            doc,
            "evaluate",
            {"report": report_path, **{p.name: p for p in plots}},
            {"scorer": active.scorer_id, "ns": ns},
        )
    print(evaluation.format_report_table(report))
    return 0


def cmd_report(args) -> int:
    doc = load_run_config(args.config)
    out_dir = _out_dir(doc)
    found = sorted(out_dir.glob("report_*.jsonl"))
    if not found:
        raise ConfigInvalid("out_dir", f"no report files under {out_dir}")
    for path in found:
        rows = evaluation.load_report_rows(path)
        print(f"# {path.name}")
        for row in rows:
            print(json.dumps(row, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logicrank",
        description="Reward-model training data pipeline and best-of-N evaluation harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="write a synthetic deduction corpus")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--count", type=int, required=True)
    synth.add_argument("--depth", type=int, required=True)
    synth.add_argument("--out", required=True)
    synth.add_argument("--name", default="synthetic")
    synth.set_defaults(func=cmd_synth)

    for name, func, extra in (
        ("gen-cot", cmd_gen_cot, ()),
        ("gen-echo", cmd_gen_echo, ()),
        ("judge-filter", cmd_judge_filter, ()),
        ("resample", cmd_resample, ()),
        ("export", cmd_export, ("pool",)),
        ("train-surrogate", cmd_train_surrogate, ()),
        ("score-check", cmd_score_check, ("scorer",)),
        ("evaluate", cmd_evaluate, ("scorer",)),
        ("report", cmd_report, ()),
    ):
        stage = sub.add_parser(name, help=f"run the {name} stage")
        stage.add_argument("--config", required=True)
        if "pool" in extra:
            stage.add_argument("--pool", choices=("cot", "eccot", "resampled"), default=None)
        if "scorer" in extra:
            stage.add_argument(
                "--scorer", choices=("oracle", "random", "surrogate", "remote"), default=None
            )
        stage.set_defaults(func=func)
    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (PipelineError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: MissingInput: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
