"""Command-line surface: record samples, train the scorer, run, report, sweep.

Subcommands:
  record  draw live samples per question and append them to a JSONL store
  train   fit the sufficiency scorer from a store plus gold answers
  run     execute one stopping policy over a dataset, emitting trace JSONL
  report  summarize trace files into a CSV plus paired comparisons
  sweep   grid accuracy/cost over stopping thresholds and buffer sizes

Per-question failures are logged and the run continues; the process exits
nonzero if anything failed.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from .baselines import run_ac, run_esc, run_sc
from .config import ConfigError, EngineConfig, load_engine_config
from .controller import RunError, run_question
from .datasets import DatasetError, load_dataset
from .evaluation import (
    EvaluationError,
    answer_entropy,
    build_reports,
    compare_methods,
    sweep_T_N,
    write_report_csv,
    write_sweep_csv,
)
from .generation import (
    PROMPT_STYLES,
    Endpoint,
    GenerationError,
    LiveSampler,
    ReplayStore,
    SampleRecord,
    StoreError,
    generate_live,
    record_samples,
)
from .scorer import (
    ModelFileError,
    ScorerConfigError,
    ScorerKind,
    TrainConfig,
    TrainingDataError,
    TrainingError,
    TrainingExample,
    load_model,
    save_model,
    train_with_history,
)
from .features import History, extract_features
from .traces import METHODS, TraceError, TraceRecord, read_traces, require_shared_dataset, write_traces
from .types import Question

log = logging.getLogger("rasc")

_CLI_ERRORS = (
    ConfigError,
    DatasetError,
    StoreError,
    TraceError,
    EvaluationError,
    ModelFileError,
    ScorerConfigError,
    TrainingError,
    TrainingDataError,
    GenerationError,
    RunError,
    ValueError,
    OSError,
)


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML config file")
    common.add_argument("--seed", type=int, default=None, help="seed for training/generation")
    common.add_argument("--workers", type=int, default=1, help="parallel questions")
    common.add_argument("--out", type=Path, default=None, help="output path")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="rasc",
        description="Adaptive early stopping for self-consistency reasoning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("record", parents=[common], help="record live samples to a store")
    p.add_argument("--dataset", type=Path, default=None)
    p.add_argument("--store", type=Path, default=None)
    p.add_argument("-k", "--draws", type=int, default=40, help="draws per question")
    p.add_argument("--model", dest="model_name", default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--prompt-style", choices=PROMPT_STYLES, default=None)
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("train", parents=[common], help="fit the sufficiency scorer")
    p.add_argument("--dataset", type=Path, default=None)
    p.add_argument("--store", type=Path, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", parents=[common], help="run one method over a dataset")
    p.add_argument("method", choices=METHODS)
    p.add_argument("--dataset", type=Path, default=None)
    p.add_argument("--store", type=Path, default=None)
    p.add_argument("--source", choices=("replay", "live"), default="replay")
    p.add_argument("--model-file", type=Path, default=None)
    p.add_argument("--threshold", type=float, default=None, help="admission threshold")
    p.add_argument("--capacity", type=int, default=None, help="buffer size")
    p.add_argument("--max-generations", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="fixed draw budget (sc)")
    p.add_argument("--window", type=int, default=None, help="agreement window (esc)")
    p.add_argument("--esc-max", type=int, default=None)
    p.add_argument("--confidence", type=float, default=None, help="stop confidence (ac)")
    p.add_argument("--ac-max", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", parents=[common], help="summarize trace files")
    p.add_argument("traces", type=Path, nargs="+")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sweep", parents=[common], help="threshold/capacity grid")
    p.add_argument("--dataset", type=Path, default=None)
    p.add_argument("--store", type=Path, default=None)
    p.add_argument("--model-file", type=Path, default=None)
    p.add_argument("--T-grid", dest="t_grid", type=_float_list, default=None)
    p.add_argument("--N-grid", dest="n_grid", type=_int_list, default=None)
    p.add_argument("--max-generations", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    return parser


def _engine_config(args: argparse.Namespace) -> EngineConfig:
    overrides = {
        "rasc": {
            "threshold_T": getattr(args, "threshold", None),
            "capacity_N": getattr(args, "capacity", None),
            "max_generations": getattr(args, "max_generations", None),
        },
        "baselines": {
            "sc_samples": getattr(args, "k", None),
            "esc_window": getattr(args, "window", None),
            "esc_max": getattr(args, "esc_max", None),
            "ac_confidence": getattr(args, "confidence", None),
            "ac_max": getattr(args, "ac_max", None),
        },
        "generation": {
            "model_name": getattr(args, "model_name", None),
            "temperature": getattr(args, "temperature", None),
            "prompt_style": getattr(args, "prompt_style", None),
            "seed": args.seed,
        },
        "paths": {
            "dataset": _opt_str(getattr(args, "dataset", None)),
            "sample_store": _opt_str(getattr(args, "store", None)),
            "model_file": _opt_str(getattr(args, "model_file", None)),
        },
    }
    return load_engine_config(args.config, overrides)


def _opt_str(path: Path | None) -> str | None:
    return str(path) if path is not None else None


def _require_path(value: str, what: str, flag: str) -> Path:
    if not value:
        raise ConfigError(f"no {what} given; pass {flag} or set it in the config file")
    return Path(value)


def _load_exemplars(config: EngineConfig) -> str | None:
    if config.generation.prompt_style == "zero_shot_cot":
        return None
    path = _require_path(
        config.exemplars_file,
        f"exemplar file for {config.generation.prompt_style} prompting",
        "[generation].exemplars_file",
    )
    if not path.exists():
        raise ConfigError(f"exemplar file {path} does not exist")
    return path.read_text(encoding="utf-8").strip()


def _require_gold(questions: Sequence[Question]) -> None:
    missing = [q.id for q in questions if q.gold_answer is None]
    if missing:
        raise DatasetError(
            f"{len(missing)} question(s) lack gold answers (e.g. {missing[:3]}); "
            "evaluation commands need them"
        )


def _parallel(
    questions: Sequence[Question],
    worker: Callable[[Question], object],
    workers: int,
) -> tuple[dict[str, object], list[tuple[str, Exception]]]:
    """Run worker over questions, preserving per-question results and errors."""
    results: dict[str, object] = {}
    failures: list[tuple[str, Exception]] = []
    if workers <= 1:
        for question in questions:
            try:
                results[question.id] = worker(question)
            except _CLI_ERRORS as exc:
                failures.append((question.id, exc))
        return results, failures
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {question.id: pool.submit(worker, question) for question in questions}
        for qid, future in futures.items():
            try:
                results[qid] = future.result()
            except _CLI_ERRORS as exc:
                failures.append((qid, exc))
    return results, failures


# ---------------------------------------------------------------------------
# record
# ---------------------------------------------------------------------------


def cmd_record(args: argparse.Namespace) -> int:
    config = _engine_config(args)
    dataset_path = _require_path(config.paths.dataset, "dataset", "--dataset")
    store_path = _require_path(config.paths.sample_store, "sample store", "--store")
    questions = load_dataset(dataset_path)
    endpoint = Endpoint.from_env(dict(os.environ))
    exemplars = _load_exemplars(config)
    params = config.generation
    if not params.model_name:
        raise ConfigError("no model name given; pass --model or set [generation].model_name")

    existing: dict[str, int] = {}
    if store_path.exists():
        store = ReplayStore.load(store_path)
        existing = {qid: store.draws_for(qid) for qid in store.question_ids()}

    def record_one(question: Question) -> list[SampleRecord]:
        start = existing.get(question.id, 0) + 1
        records: list[SampleRecord] = []
        for index in range(start, args.draws + 1):
            sample = generate_live(
                question, params, endpoint, draw_index=index, exemplars=exemplars
            )
            records.append(
                SampleRecord(
                    question_id=question.id,
                    draw_index=index,
                    raw_text=sample.raw_text,
                    parsed_answer=sample.answer,
                    model_name=params.model_name,
                    prompt_style=params.prompt_style,
                    timestamp=datetime.now(timezone.utc).isoformat(),
                )
            )
        return records

    results, failures = _parallel(questions, record_one, args.workers)
    records = [r for question in questions for r in results.get(question.id, [])]
    written = record_samples(store_path, records)
    log.info("wrote %d new record(s) to %s", written, store_path)
    for qid, exc in failures:
        log.error("question %s: %s", qid, exc)
    if failures:
        log.error("%d question(s) failed", len(failures))
        return 1
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _training_examples(
    questions: Sequence[Question], store: ReplayStore, config: EngineConfig
) -> list[TrainingExample]:
    missing = [q.id for q in questions if store.draws_for(q.id) == 0]
    if missing:
        raise StoreError(
            f"store has no draws for {len(missing)} question(s): {missing[:5]}"
            + (" ..." if len(missing) > 5 else "")
        )
    _require_gold(questions)
    examples: list[TrainingExample] = []
    cursor = store.cursor()
    for question in questions:
        history = History(config.features)
        for _ in range(store.draws_for(question.id)):
            sample = cursor.replay_next(question.id)
            features = extract_features(question, sample, history, config.features)
            history.append(sample)
            label = int(sample.answer.matches(question.gold_answer))
            examples.append(TrainingExample(features=features, label=label))
    return examples


def cmd_train(args: argparse.Namespace) -> int:
    config = _engine_config(args)
    dataset_path = _require_path(config.paths.dataset, "dataset", "--dataset")
    store_path = _require_path(config.paths.sample_store, "sample store", "--store")
    out_path = args.out or (Path(config.paths.model_file) if config.paths.model_file else None)
    if out_path is None:
        raise ConfigError("no model output path; pass --out or set [paths].model_file")

    questions = load_dataset(dataset_path)
    store = ReplayStore.load(store_path)
    examples = _training_examples(questions, store, config)
    train_config = TrainConfig(seed=args.seed if args.seed is not None else 0)
    model, losses = train_with_history(examples, train_config)

    hits = sum(
        1 for ex in examples if (model.score(ex.features) >= 0.5) == bool(ex.label)
    )
    log.info(
        "trained on %d examples from %d questions; final loss %.4f; train accuracy %.3f",
        len(examples),
        len(questions),
        losses[-1],
        hits / len(examples),
    )
    save_model(model, out_path)
    log.info("model written to %s", out_path)
    return 0


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _method_config(method: str, config: EngineConfig) -> dict[str, object]:
    if method == "cot":
        return {"k": 1}
    if method == "sc":
        return {"k": config.baselines.sc_samples}
    if method == "esc":
        return {"window": config.baselines.esc_window, "max_draws": config.baselines.esc_max}
    if method == "ac":
        return {
            "confidence": config.baselines.ac_confidence,
            "max_draws": config.baselines.ac_max,
        }
    return {
        "threshold_T": config.rasc.threshold_T,
        "capacity_N": config.rasc.capacity_N,
        "max_generations": config.rasc.max_generations,
    }


def cmd_run(args: argparse.Namespace) -> int:
    config = _engine_config(args)
    dataset_path = _require_path(config.paths.dataset, "dataset", "--dataset")
    questions = load_dataset(dataset_path)
    _require_gold(questions)
    method = args.method

    store: ReplayStore | None = None
    endpoint: Endpoint | None = None
    exemplars: str | None = None
    if args.source == "replay":
        store_path = _require_path(config.paths.sample_store, "sample store", "--store")
        store = ReplayStore.load(store_path)
    else:
        endpoint = Endpoint.from_env(dict(os.environ))
        exemplars = _load_exemplars(config)

    scorer = None
    workers = args.workers
    if method == "rasc":
        model_path = _require_path(config.paths.model_file, "model file", "--model-file")
        scorer = load_model(model_path)
        if scorer.kind is ScorerKind.RANDOM_BASELINE and workers > 1:
            log.info("random-baseline scorer is sequential; ignoring --workers")
            workers = 1

    method_config = _method_config(method, config)

    def run_one(question: Question) -> TraceRecord:
        if store is not None:
            sampler = store.cursor()
        else:
            assert endpoint is not None
            sampler = LiveSampler(config.generation, endpoint, exemplars=exemplars)
        if method == "cot":
            decision = run_sc(question, sampler, k=1)
        elif method == "sc":
            decision = run_sc(question, sampler, k=config.baselines.sc_samples)
        elif method == "esc":
            decision = run_esc(
                question, sampler, config.baselines.esc_window, config.baselines.esc_max
            )
        elif method == "ac":
            decision = run_ac(
                question, sampler, config.baselines.ac_confidence, config.baselines.ac_max
            )
        else:
            assert scorer is not None
            decision = run_question(question, sampler, scorer, config.rasc, config.features)
        return TraceRecord.from_decision(method, question, decision, method_config)

    results, failures = _parallel(questions, run_one, workers)
    ordered = [results[q.id] for q in questions if q.id in results]

    out_path = args.out or Path(config.paths.report_dir) / f"trace_{method}.jsonl"
    write_traces(out_path, ordered)  # type: ignore[arg-type]
    correct = sum(1 for t in ordered if t.correct)  # type: ignore[union-attr]
    log.info(
        "%s: %d/%d questions traced (%d correct) -> %s",
        method,
        len(ordered),
        len(questions),
        correct,
        out_path,
    )
    for qid, exc in failures:
        log.error("question %s: %s", qid, exc)
    if failures:
        log.error("%d question(s) failed", len(failures))
        return 1
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def _single_method(traces: Sequence[TraceRecord], path: Path) -> str:
    methods = {t.method for t in traces}
    if len(methods) != 1:
        raise TraceError(f"{path} mixes methods {sorted(methods)}; one method per trace file")
    return next(iter(methods))


def cmd_report(args: argparse.Namespace) -> int:
    config = _engine_config(args)
    by_method: dict[str, list[TraceRecord]] = {}
    trace_sets: list[list[TraceRecord]] = []
    for path in args.traces:
        traces = read_traces(path)
        if not traces:
            raise TraceError(f"{path} contains no trace records")
        method = _single_method(traces, path)
        if method in by_method:
            raise TraceError(f"method {method!r} appears in more than one trace file")
        by_method[method] = traces
        trace_sets.append(traces)
    require_shared_dataset(trace_sets)

    reports = build_reports(by_method)
    out_path = args.out or Path(config.paths.report_dir) / "report.csv"
    write_report_csv(out_path, reports)

    lines = [
        f"{'method':<6} {'n':>4} {'accuracy':>9} {'avg_gen':>8} "
        f"{'gain/sample':>12} {'tradeoff':>9}"
    ]
    for report in reports:
        gain = f"{report.gain_per_sample:.4f}" if report.gain_per_sample is not None else "-"
        tradeoff = f"{report.tradeoff:.4f}" if report.tradeoff is not None else "-"
        lines.append(
            f"{report.method:<6} {report.n_questions:>4} {report.accuracy:>9.4f} "
            f"{report.avg_generations:>8.2f} {gain:>12} {tradeoff:>9}"
        )

    if "sc" in by_method and len(by_method) > 1:
        lines.append("")
        lines.append("paired differences vs sc (a - b, 95% CI):")
        sc_by_id = {t.question_id: t for t in by_method["sc"]}
        order = sorted(sc_by_id)
        for method, traces in by_method.items():
            if method == "sc":
                continue
            other_by_id = {t.question_id: t for t in traces}
            corr = compare_methods(
                [float(other_by_id[q].correct) for q in order],
                [float(sc_by_id[q].correct) for q in order],
            )
            gens = compare_methods(
                [float(other_by_id[q].generations_used) for q in order],
                [float(sc_by_id[q].generations_used) for q in order],
            )
            corr_p = f"{corr.p_value:.4g}" if corr.p_value is not None else "n<30"
            gens_p = f"{gens.p_value:.4g}" if gens.p_value is not None else "n<30"
            lines.append(
                f"  {method} vs sc  correctness {corr.mean_diff:+.4f} "
                f"[{corr.ci95_low:+.4f}, {corr.ci95_high:+.4f}] p={corr_p}"
            )
            lines.append(
                f"  {method} vs sc  generations {gens.mean_diff:+.4f} "
                f"[{gens.ci95_low:+.4f}, {gens.ci95_high:+.4f}] p={gens_p}"
            )

    lines.append("")
    lines.append("final-answer entropy (nats):")
    for method, traces in by_method.items():
        counts: dict[str, int] = {}
        for trace in traces:
            key = trace.final_answer.value if not trace.final_answer.is_parse_error else "ERROR"
            counts[key] = counts.get(key, 0) + 1
        lines.append(f"  {method}: {answer_entropy(counts):.4f}")

    print("\n".join(lines))
    log.info("report written to %s", out_path)
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


DEFAULT_T_GRID = [0.1, 0.3, 0.5, 0.7, 0.9]
DEFAULT_N_GRID = [3, 5, 7]


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _engine_config(args)
    dataset_path = _require_path(config.paths.dataset, "dataset", "--dataset")
    store_path = _require_path(config.paths.sample_store, "sample store", "--store")
    model_path = _require_path(config.paths.model_file, "model file", "--model-file")

    questions = load_dataset(dataset_path)
    _require_gold(questions)
    store = ReplayStore.load(store_path)
    scorer = load_model(model_path)
    t_grid = args.t_grid if args.t_grid else DEFAULT_T_GRID
    n_grid = args.n_grid if args.n_grid else DEFAULT_N_GRID
    max_generations = (
        args.max_generations if args.max_generations is not None else config.rasc.max_generations
    )

    cells = sweep_T_N(
        questions, store, scorer, t_grid, n_grid, max_generations, config.features
    )
    out_path = args.out or Path(config.paths.report_dir) / "sweep.csv"
    write_sweep_csv(out_path, cells)
    log.info("%d sweep cell(s) written to %s", len(cells), out_path)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _CLI_ERRORS as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
