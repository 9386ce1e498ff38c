"""Command-line interface: ``fairlens eval|normalize|stats|segment-plan|transcribe``."""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, corpus
from .errors import FairlensError, InputError, NoTestableGroupsError
from .normalize import NormalizerConfig, normalize_text
from .pipeline import EvaluationConfig, PipelineError, render_report, run_pipeline
from .segment import DEFAULT_CAP_S, SpeakerTurn, split_turn
from .semsim import CommandEmbeddings
from .stats import Sample, select_and_test

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNTESTABLE = 3

log = logging.getLogger("fairlens")


def _add_normalizer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--remove-diacritics", action="store_true", help="strip accents after decomposition")
    p.add_argument(
        "--keep-brackets", action="store_true", help="keep [...] and (...) spans instead of deleting them"
    )


def _normalizer_config(args) -> NormalizerConfig:
    return NormalizerConfig(remove_diacritics=args.remove_diacritics, bracket_removal=not args.keep_brackets)


def _read_jsonl(stream, what: str):
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON in {what}: {exc.msg}", line=lineno) from exc
        if not isinstance(rec, dict):
            raise InputError(f"{what} record is not an object", line=lineno)
        yield lineno, rec


def _open_in(path: str | None):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdin)
    return open(path, encoding="utf-8")


def _open_out(path: str | None):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="\n")


def cmd_eval(args) -> int:
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    try:
        config = EvaluationConfig(
            group_attribute=args.group_by,
            epsilon=args.epsilon,
            alpha_assumption=args.alpha,
            min_group_instances=args.min_group,
            metrics=metrics,
            normalizer=_normalizer_config(args),
            embeddings_path=args.embeddings,
            category_attribute=args.category_by,
            levene_center=args.levene_center,
        )
    except ValueError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_INPUT
    provider = CommandEmbeddings(args.embeddings_command) if args.embeddings_command else None
    try:
        report = run_pipeline(config, args.manifest, args.hypotheses, provider=provider)
    except NoTestableGroupsError as exc:
        log.error("%s", exc)
        return EXIT_UNTESTABLE
    except PipelineError as exc:
        log.error("stage '%s' failed: %s", exc.stage, exc.cause)
        return EXIT_INPUT
    except (InputError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    with _open_out(args.out) as fh:
        fh.write(render_report(report, "json"))
    if args.markdown:
        Path(args.markdown).write_text(render_report(report, "markdown"), encoding="utf-8")
    return EXIT_OK


def cmd_normalize(args) -> int:
    config = _normalizer_config(args)
    for line in sys.stdin:
        sys.stdout.write(normalize_text(line.rstrip("\n"), config) + "\n")
    return EXIT_OK


def cmd_stats(args) -> int:
    """Rows ``{group, speaker_id, value[, weight]}``; repeated speakers are weight-averaged."""
    sums: dict[str, dict[str, list[float]]] = {}
    with _open_in(args.input) as fh:
        for lineno, rec in _read_jsonl(fh, "stats"):
            try:
                group, speaker = str(rec["group"]), str(rec["speaker_id"])
                value, weight = float(rec["value"]), float(rec.get("weight", 1.0))
            except (KeyError, TypeError, ValueError) as exc:
                raise InputError(f"malformed stats row: {exc}", line=lineno) from exc
            if weight <= 0:
                raise InputError("weight must be positive", line=lineno)
            acc = sums.setdefault(group, {}).setdefault(speaker, [0.0, 0.0])
            acc[0] += weight * value
            acc[1] += weight
    samples = [Sample(g, [t / w for t, w in sums[g].values()]) for g in sorted(sums)]
    trace = select_and_test(samples, args.alpha, levene_center=args.levene_center)
    with _open_out(args.out) as out:
        out.write(json.dumps(dataclasses.asdict(trace), indent=2, sort_keys=True) + "\n")
    return EXIT_OK if trace.testable else EXIT_UNTESTABLE


def cmd_segment_plan(args) -> int:
    with _open_in(args.input) as fh, _open_out(args.out) as out:
        for turn_index, (lineno, rec) in enumerate(_read_jsonl(fh, "turn")):
            try:
                turn = SpeakerTurn(str(rec["speaker_id"]), float(rec["start_s"]), float(rec["end_s"]), rec.get("text"))
            except (KeyError, TypeError, ValueError) as exc:
                raise InputError(f"malformed speaker turn: {exc}", line=lineno) from exc
            plan = split_turn(turn, args.cap)
            for part_index, (start, end) in enumerate(plan.parts):
                row = {
                    "speaker_id": turn.speaker_id,
                    "turn_index": turn_index,
                    "part_index": part_index,
                    "start_s": start,
                    "end_s": end,
                }
                out.write(json.dumps(row) + "\n")
    return EXIT_OK


def cmd_transcribe(args) -> int:
    instances = corpus.load_manifest(args.manifest)
    paths = {i.instance_id: i.attributes[args.audio_column] for i in instances if args.audio_column in i.attributes}
    if not paths:
        raise InputError(f"manifest has no '{args.audio_column}' values")
    hyps, failed = corpus.run_transcriber(args.command, paths, args.model_id, timeout=args.timeout)
    corpus.dump_hypotheses(hyps, args.out)
    if failed:
        log.warning("%d instance(s) failed to transcribe: %s", len(failed), ", ".join(failed[:10]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairlens", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fairlens {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="score hypotheses and audit group fairness")
    p.add_argument("--manifest", required=True)
    p.add_argument("--hypotheses", required=True)
    p.add_argument("--embeddings", help="sidecar embeddings JSONL for BSS")
    p.add_argument("--embeddings-command", help="command printing one vector per input line")
    p.add_argument("--group-by", default="gender")
    p.add_argument("--category-by", help="manifest column splitting the report (e.g. show_type)")
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--alpha", type=float, default=0.05, help="significance level for assumption checks")
    p.add_argument("--min-group", type=int, default=50)
    p.add_argument("--metrics", default="wer,cer,bss")
    p.add_argument("--levene-center", choices=("mean", "median"), default="mean")
    p.add_argument("--out", default="-", help="JSON report path (default stdout)")
    p.add_argument("--markdown", help="also write a markdown report here")
    _add_normalizer_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("normalize", help="normalize lines from stdin")
    _add_normalizer_flags(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("stats", help="assumption-checked group comparison of per-speaker scores")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--levene-center", choices=("mean", "median"), default="mean")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("segment-plan", help="split speaker turns into equal parts under a cap")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--cap", type=float, default=DEFAULT_CAP_S)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_segment_plan)

    p = sub.add_parser("transcribe", help="produce hypotheses with an external ASR command")
    p.add_argument("--manifest", required=True)
    p.add_argument("--command", required=True, help="invoked as: COMMAND <audio path>")
    p.add_argument("--model-id", required=True)
    p.add_argument("--audio-column", default="audio_path")
    p.add_argument("--timeout", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transcribe)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="fairlens: %(message)s")
    try:
        return args.func(args)
    except (InputError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except FairlensError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
