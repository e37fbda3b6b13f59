"""Command-line entry points for the full pipeline.

Subcommands mirror the pipeline stages: ingest raw logs, extract features,
derive outcome labels, train a deployment bundle, run the nested cross
validated comparison, generate synthetic cohorts, score sessions, and serve
the live ranking over HTTP. Exit code 0 on success, 2 on any input problem
(unreadable files, malformed records, inconsistent arguments).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import threading
from pathlib import Path

from .classifiers import MODEL_KINDS
from .evaluation import compare_models
from .features import feature_catalog, session_features
from .ingest import (
    EDURANGE,
    KYPO,
    clean_records,
    exercise_meta_doc,
    load_exercise_meta,
    parse_edurange_log,
    parse_kypo_command_log,
    parse_kypo_event_log,
    sessionize,
    to_jsonl,
    truncate_session,
)
from .labeling import label_distribution, label_edurange, label_kypo
from .commands import detect_task_completions
from .risk import ModelBundle, rank_students, score_with_bundle, train_bundle
from .service import LiveStore, RiskServer, replay_sessions
from .synthgen import (
    DEFAULT_MIX,
    GeneratorConfig,
    generate_dataset,
    sessions_to_dataset,
    synthetic_exercise_meta,
)


class InputError(ValueError):
    """User-facing input problem; maps to exit code 2."""


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_meta(path: str):
    try:
        doc = json.loads(_read_text(path))
        return load_exercise_meta(doc)
    except (ValueError, KeyError) as exc:
        raise InputError(f"bad exercise meta {path}: {exc}") from exc


def _load_sessions(paths: list[str], meta, platform: str | None):
    if platform is not None and platform != meta.platform:
        raise InputError(
            f"--platform {platform} contradicts meta platform {meta.platform}"
        )
    try:
        if meta.platform == KYPO:
            if len(paths) != 2:
                raise InputError(
                    "kypo_style needs two log paths: commands.jsonl events.jsonl"
                )
            commands = parse_kypo_command_log(_read_text(paths[0])).entries
            events = parse_kypo_event_log(_read_text(paths[1])).entries
        else:
            if len(paths) != 1:
                raise InputError("edurange_style needs one log path: streams.jsonl")
            commands = parse_edurange_log(_read_text(paths[0])).entries
            events = []
        commands, dropped_c = clean_records(commands)
        events, dropped_e = clean_records(events)
        return sessionize(commands, events, meta), dropped_c + dropped_e
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _label_sessions(sessions, meta):
    labels = []
    for s in sessions:
        if s.platform == KYPO:
            labels.append(label_kypo(s))
        else:
            completions = detect_task_completions(s, meta.solutions or {}, meta.error_patterns)
            labels.append(label_edurange(s, completions))
    return labels


def _write_out(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _cmd_ingest(args) -> int:
    meta = _load_meta(args.meta)
    sessions, dropped = _load_sessions(args.paths, meta, args.platform)
    summary = {
        "platform": meta.platform,
        "exercise_id": meta.exercise_id,
        "students": len(sessions),
        "dropped_duplicates": dropped,
        "sessions": [
            {
                "student_id": s.student_id,
                "commands": len(s.commands),
                "events": len(s.events),
                "span_seconds": s.span_seconds,
            }
            for s in sessions
        ],
    }
    _write_out(json.dumps(summary, indent=2), args.out)
    return 0


def _cmd_featurize(args) -> int:
    meta = _load_meta(args.meta)
    sessions, _ = _load_sessions(args.paths, meta, args.platform)
    names = [d.name for d in feature_catalog(meta.platform)]
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["student_id", *names])
    for s in sessions:
        vector = session_features(s, meta.solutions, meta.error_patterns)
        writer.writerow([s.student_id, *[repr(v) for v in vector.values]])
    _write_out(buffer.getvalue(), args.out)
    return 0


def _cmd_label(args) -> int:
    meta = _load_meta(args.meta)
    sessions, _ = _load_sessions(args.paths, meta, args.platform)
    outcomes = _label_sessions(sessions, meta)
    dist = label_distribution(outcomes)
    doc = {
        "distribution": {
            "positive": dist.positive_count,
            "negative": dist.negative_count,
        },
        "labels": [
            {
                "student_id": o.student_id,
                "label": o.label,
                "completion_ratio": o.completion_ratio,
                "rationale": o.rationale,
            }
            for o in outcomes
        ],
    }
    _write_out(json.dumps(doc, indent=2), args.out)
    return 0


def _dataset_from_args(args, meta):
    sessions, _ = _load_sessions(args.paths, meta, args.platform)
    outcomes = _label_sessions(sessions, meta)
    labels = [o.label for o in outcomes]
    if getattr(args, "truncate", None) is not None:
        if not 0.0 < args.truncate <= 1.0:
            raise InputError(f"--truncate must be in (0, 1], got {args.truncate}")
        sessions = [truncate_session(s, args.truncate) for s in sessions]
    return sessions_to_dataset(sessions, labels, meta), sessions


def _cmd_train(args) -> int:
    if args.model not in MODEL_KINDS:
        raise InputError(f"unknown model kind {args.model!r}; one of {MODEL_KINDS}")
    meta = _load_meta(args.meta)
    dataset, _ = _dataset_from_args(args, meta)
    if len(set(dataset.y.tolist())) < 2 and not args.model.startswith("baseline"):
        raise InputError("training data has a single outcome class")
    bundle = train_bundle(
        dataset, args.model, seed=args.seed, tune=args.grid == "default"
    )
    payload = json.dumps(bundle.to_dict(), indent=2)
    Path(args.out).write_text(payload + "\n")
    summary = {
        "kind": args.model,
        "students": len(dataset.y),
        "selected_features": bundle.selected,
        "hyperparameters": bundle.model.hyperparameters,
        "bundle": args.out,
    }
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return 0


def _cmd_evaluate(args) -> int:
    meta = _load_meta(args.meta)
    dataset, _ = _dataset_from_args(args, meta)
    kinds = None
    if args.models != "all":
        kinds = [k.strip() for k in args.models.split(",") if k.strip()]
        unknown = [k for k in kinds if k not in MODEL_KINDS]
        if unknown:
            raise InputError(f"unknown model kinds: {unknown}")
    try:
        report = compare_models(
            dataset,
            kinds=kinds,
            seed=args.seed,
            outer_k=args.outer,
            inner_k=args.inner,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.format == "json":
        _write_out(json.dumps(report.to_dict(), indent=2), args.out)
    else:
        _write_out(report.to_csv(), args.out)
    return 0


def _cmd_synth(args) -> int:
    overrides = {}
    if args.config is not None:
        try:
            overrides = json.loads(_read_text(args.config))
        except json.JSONDecodeError as exc:
            raise InputError(f"bad generator config: {exc}") from exc
        if not isinstance(overrides, dict):
            raise InputError("generator config must be a JSON object")
    if args.seed is not None:
        overrides["seed"] = args.seed
    defaults = {
        "seed": 42,
        "student_count": 240,
        "mix": dict(DEFAULT_MIX),
        "platform": KYPO,
        "task_count": 6,
    }
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise InputError(f"unknown generator config keys: {sorted(unknown)}")
    merged = {**defaults, **overrides}
    try:
        cfg = GeneratorConfig(**merged)
        sessions, labels = generate_dataset(cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = synthetic_exercise_meta(cfg.platform, cfg.task_count)
    (out_dir / "meta.json").write_text(json.dumps(exercise_meta_doc(meta), indent=2) + "\n")
    if cfg.platform == KYPO:
        commands = [c for s in sessions for c in s.commands]
        events = [e for s in sessions for e in s.events]
        (out_dir / "commands.jsonl").write_text(to_jsonl(commands))
        (out_dir / "events.jsonl").write_text(to_jsonl(events))
        files = ["commands.jsonl", "events.jsonl", "meta.json", "labels.json"]
    else:
        streams = [c for s in sessions for c in s.commands]
        (out_dir / "streams.jsonl").write_text(to_jsonl(streams))
        files = ["streams.jsonl", "meta.json", "labels.json"]
    truth = [
        {"student_id": s.student_id, "label": label}
        for s, label in zip(sessions, labels)
    ]
    (out_dir / "labels.json").write_text(json.dumps(truth, indent=2) + "\n")
    summary = {
        "out_dir": str(out_dir),
        "files": files,
        "students": len(sessions),
        "positive_labels": sum(labels),
    }
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return 0


def _load_bundle(path: str) -> ModelBundle:
    try:
        return ModelBundle.from_dict(json.loads(_read_text(path)))
    except (ValueError, KeyError) as exc:
        raise InputError(f"bad model bundle {path}: {exc}") from exc


def _cmd_score(args) -> int:
    meta = _load_meta(args.meta)
    bundle = _load_bundle(args.bundle)
    sessions, _ = _load_sessions(args.paths, meta, args.platform)
    try:
        assessments = rank_students(
            [
                score_with_bundle(
                    bundle, s, solutions=meta.solutions, error_patterns=meta.error_patterns
                )
                for s in sessions
            ]
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    doc = {"assessments": [a.to_dict() for a in assessments]}
    _write_out(json.dumps(doc, indent=2), args.out)
    return 0


def _cmd_serve(args) -> int:
    meta = _load_meta(args.meta)
    bundle = _load_bundle(args.model_file)
    try:
        store = LiveStore(bundle, meta, state_dir=args.state_dir)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.replay:
        cfg = GeneratorConfig(
            seed=args.seed or 42,
            student_count=12,
            platform=meta.platform,
            task_count=meta.task_count,
        )
        sessions, _ = generate_dataset(cfg)
        stopper = threading.Event()
        thread = threading.Thread(
            target=replay_sessions,
            args=(store, sessions),
            kwargs={"interval_seconds": args.replay_interval, "stop": stopper},
            daemon=True,
        )
        thread.start()
    server = RiskServer((args.host, args.port), store)
    address = f"http://{server.server_address[0]}:{server.server_address[1]}"
    sys.stdout.write(f"serving {meta.platform} rankings on {address}\n")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def _add_log_arguments(parser):
    parser.add_argument("paths", nargs="+", help="log files (kypo: commands events; edurange: streams)")
    parser.add_argument("--meta", required=True, help="exercise meta JSON")
    parser.add_argument("--platform", choices=[KYPO, EDURANGE], help="cross-check against meta")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rangetriage",
        description="Ingest exercise logs, predict at-risk students, serve live rankings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, dedupe and sessionize raw logs")
    _add_log_arguments(p)
    p.add_argument("--out", help="write the summary JSON here instead of stdout")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("featurize", help="extract per-student feature vectors")
    _add_log_arguments(p)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("label", help="derive outcome labels from full sessions")
    _add_log_arguments(p)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("train", help="fit a deployment bundle on all sessions")
    _add_log_arguments(p)
    p.add_argument("--model", required=True, help=f"one of {', '.join(MODEL_KINDS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", choices=["default", "off"], default="default",
                   help="tune over the default grid or fit with default hyperparameters")
    p.add_argument("--truncate", type=float, default=None,
                   help="train on the first fraction of each session")
    p.add_argument("--out", default="model.json", help="bundle output path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="nested cross-validated model comparison")
    _add_log_arguments(p)
    p.add_argument("--models", default="all", help="comma list of kinds, or 'all'")
    p.add_argument("--outer", type=int, default=10)
    p.add_argument("--inner", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truncate", type=float, default=None,
                   help="evaluate on the first fraction of each session (labels stay full)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic cohort as canonical logs")
    p.add_argument("--config", help="generator config JSON (seed, student_count, mix, platform, task_count)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out-dir", required=True, help="directory for the generated files")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("score", help="rank students with a trained bundle")
    _add_log_arguments(p)
    p.add_argument("--bundle", required=True, help="bundle JSON from `train`")
    p.add_argument("--out", help="write assessments JSON here instead of stdout")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("serve", help="serve live rankings over HTTP")
    p.add_argument("--meta", required=True, help="exercise meta JSON")
    p.add_argument("--model-file", required=True, help="bundle JSON from `train`")
    p.add_argument("--state-dir", help="directory for persisted logs and ack state")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--replay", action="store_true",
                   help="drip a synthetic cohort into the store for demos")
    p.add_argument("--replay-interval", type=float, default=2.0)
    p.add_argument("--seed", type=int, help="seed for --replay")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
