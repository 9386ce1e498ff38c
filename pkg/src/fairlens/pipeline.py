"""End-to-end evaluation: corpus -> metrics -> per-speaker tests -> parity report."""

from __future__ import annotations

import dataclasses
import itertools
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Sequence

from . import corpus
from .aggregate import BiasDelta, GroupMetrics, InstanceScore, bias_delta, per_speaker_scores, summarize
from .align import edit_distance, tokenize_chars, tokenize_words
from .errors import FairlensError, InputError, NoTestableGroupsError
from .fairness import DEFAULT_EPSILON, UNFAIR_MARKER, ParityVerdict, degenerate_parity
from .normalize import NormalizerConfig, TextNormalizer
from .semsim import EmbeddingProvider, SidecarEmbeddings, bss
from .stats import DecisionTrace, Sample, TestResult, select_and_test

__all__ = [
    "EvaluationConfig",
    "Exclusions",
    "ReportCell",
    "Report",
    "score_units",
    "evaluate",
    "run_pipeline",
    "render_report",
    "report_from_json",
]

logger = logging.getLogger(__name__)

ALL_CATEGORY = "all"
METRICS = ("wer", "cer", "bss")
TEST_GRANULARITY = "per-speaker weighted WER, one test per model and category"


class PipelineError(FairlensError):
    """A stage of the pipeline failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")


@dataclass(frozen=True)
class EvaluationConfig:
    group_attribute: str = "gender"
    epsilon: float = DEFAULT_EPSILON
    alpha_assumption: float = 0.05
    min_group_instances: int = 50
    metrics: tuple[str, ...] = METRICS
    normalizer: NormalizerConfig = NormalizerConfig()
    embeddings_path: str | None = None
    category_attribute: str | None = None
    levene_center: Literal["mean", "median"] = "mean"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.alpha_assumption < 1:
            raise ValueError("alpha_assumption must lie in (0, 1)")
        if self.min_group_instances < 1:
            raise ValueError("min_group_instances must be a positive integer")
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ValueError(f"unknown metric(s): {', '.join(sorted(unknown))}")
        # canonical order so the config echo is stable
        object.__setattr__(self, "metrics", tuple(m for m in METRICS if m in self.metrics))


@dataclass
class Exclusions:
    """Units (instance x model pairs) left out, one bucket per reason."""

    unresolved_hypotheses: int = 0
    unrepresentative_groups: dict[str, int] = field(default_factory=dict)
    empty_references: int = 0
    missing_embeddings: int = 0
    min_group_instances: int = 50


@dataclass
class ReportCell:
    model_id: str
    category: str
    overall: GroupMetrics
    groups: list[GroupMetrics]
    test: DecisionTrace | None
    bias: list[BiasDelta]
    parity: list[ParityVerdict]
    notes: list[str] = field(default_factory=list)


@dataclass
class Report:
    toolkit_version: str
    config: dict[str, Any]
    models: list[str]
    categories: list[str]
    groups: list[str]
    cells: list[ReportCell]
    exclusions: Exclusions
    test_granularity: str = TEST_GRANULARITY
    relative_bias_denominator: str = "smaller group WER"
    notes: list[str] = field(default_factory=list)

    def cell(self, model_id: str, category: str = ALL_CATEGORY) -> ReportCell:
        for c in self.cells:
            if c.model_id == model_id and c.category == category:
                return c
        raise KeyError((model_id, category))

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _thread_count() -> int:
    raw = os.environ.get("FAIRLENS_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("ignoring non-integer FAIRLENS_THREADS=%r", raw)
    return min(32, os.cpu_count() or 1)


def _score_one(
    unit: corpus.EvaluationUnit,
    group: str,
    metrics: Sequence[str],
    provider: EmbeddingProvider | None,
) -> InstanceScore:
    ref_words = tokenize_words(unit.normalized_reference)
    word_errors = edit_distance(ref_words, tokenize_words(unit.normalized_hypothesis))
    char_errors = char_length = None
    if "cer" in metrics:
        ref_chars = tokenize_chars(unit.normalized_reference)
        char_errors = edit_distance(ref_chars, tokenize_chars(unit.normalized_hypothesis))
        char_length = len(ref_chars)
    sim = bss(unit, provider) if ("bss" in metrics and provider is not None) else None
    return InstanceScore(
        instance_id=unit.instance.instance_id,
        speaker_id=unit.instance.speaker_id,
        group=group,
        weight=len(ref_words),
        word_errors=word_errors,
        char_errors=char_errors,
        char_length=char_length,
        bss=sim,
    )


def score_units(
    units: Sequence[corpus.EvaluationUnit],
    group_attribute: str,
    metrics: Sequence[str] = METRICS,
    provider: EmbeddingProvider | None = None,
    threads: int | None = None,
) -> list[InstanceScore]:
    """Per-instance scores, in input order. Units must have nonempty references."""
    threads = threads or _thread_count()
    groups = [corpus.group_value(u.instance, group_attribute) or corpus.UNKNOWN for u in units]
    if threads == 1 or len(units) < 64:
        return [_score_one(u, g, metrics, provider) for u, g in zip(units, groups)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ug: _score_one(ug[0], ug[1], metrics, provider), zip(units, groups), chunksize=64))


def _cell(
    model_id: str,
    category: str,
    scores: Sequence[InstanceScore],
    config: EvaluationConfig,
) -> ReportCell:
    by_group: dict[str, list[InstanceScore]] = {}
    for s in scores:
        by_group.setdefault(s.group, []).append(s)
    names = sorted(by_group)
    overall = summarize(scores, ALL_CATEGORY, model_id)
    summaries = [summarize(by_group[g], g, model_id) for g in names]
    notes: list[str] = []

    speaker_scores = per_speaker_scores(scores, "wer")
    samples = [Sample(g, [s.value for s in speaker_scores if s.group == g]) for g in names]
    trace = select_and_test(samples, config.alpha_assumption, levene_center=config.levene_center)
    if not trace.testable:
        notes.append(f"untestable: {trace.reason}")

    bias: list[BiasDelta] = []
    parity: list[ParityVerdict] = []
    if len(summaries) < 2:
        notes.append("fewer than two groups present; no parity verdict")
    else:
        if len(summaries) > 2:
            notes.append("more than two groups: parity verdicts and bias deltas are pairwise")
        for a, b in itertools.combinations(summaries, 2):
            bias.append(bias_delta(a, b))
            parity.append(degenerate_parity(a.weighted_wer, b.weighted_wer, config.epsilon, a.group, b.group))
    return ReportCell(model_id, category, overall, summaries, trace, bias, parity, notes)


def evaluate(
    config: EvaluationConfig,
    instances: Sequence[corpus.TranscriptInstance],
    hypotheses: Sequence[corpus.Hypothesis],
    provider: EmbeddingProvider | None = None,
    threads: int | None = None,
) -> Report:
    """Run the evaluation on already-loaded data."""
    from . import __version__

    notes: list[str] = []
    exclusions = Exclusions(min_group_instances=config.min_group_instances)
    known = {i.instance_id for i in instances}
    exclusions.unresolved_hypotheses = sum(1 for h in hypotheses if h.instance_id not in known)

    try:
        units = corpus.join_dataset(instances, hypotheses, TextNormalizer(**dataclasses.asdict(config.normalizer)))
    except InputError as exc:
        raise PipelineError("join", exc) from exc

    kept, excluded = corpus.filter_unrepresentative_groups(units, config.group_attribute, config.min_group_instances)
    excluded_set = set(excluded)
    for u in units:
        g = corpus.group_value(u.instance, config.group_attribute) or corpus.UNKNOWN
        if g in excluded_set:
            exclusions.unrepresentative_groups[g] = exclusions.unrepresentative_groups.get(g, 0) + 1

    scorable = [u for u in kept if u.normalized_reference]
    exclusions.empty_references = len(kept) - len(scorable)

    groups = sorted({corpus.group_value(u.instance, config.group_attribute) for u in scorable})
    if len(groups) < 2:
        raise NoTestableGroupsError(
            f"need at least two representative {config.group_attribute} groups with "
            f">= {config.min_group_instances} instances; found {groups or 'none'} "
            f"(excluded: {', '.join(excluded) or 'none'})"
        )

    metrics = config.metrics
    if "bss" in metrics and provider is None:
        if config.embeddings_path:
            provider = SidecarEmbeddings.from_jsonl(config.embeddings_path)
        else:
            notes.append("BSS requested without an embedding source; BSS not computed")
            metrics = tuple(m for m in metrics if m != "bss")

    scores = score_units(scorable, config.group_attribute, metrics, provider, threads)
    if "bss" in metrics:
        exclusions.missing_embeddings = sum(1 for s in scores if s.bss is None)

    models = sorted({u.model_id for u in scorable})
    categories: list[str] = []
    cat_of: list[str | None] = [None] * len(scorable)
    if config.category_attribute:
        cat_of = [corpus.group_value(u.instance, config.category_attribute) for u in scorable]
        categories = sorted({c for c in cat_of if c is not None})
        if any(c is None for c in cat_of):
            notes.append(f"units without a {config.category_attribute} value appear only under '{ALL_CATEGORY}'")
    categories.append(ALL_CATEGORY)

    cells: list[ReportCell] = []
    for model in models:
        idx = [i for i, u in enumerate(scorable) if u.model_id == model]
        for cat in categories:
            sel = [scores[i] for i in idx if cat == ALL_CATEGORY or cat_of[i] == cat]
            if not sel:
                continue
            cells.append(_cell(model, cat, sel, config))

    config_echo = dataclasses.asdict(config)
    config_echo["metrics"] = list(config.metrics)
    return Report(
        toolkit_version=__version__,
        config=config_echo,
        models=models,
        categories=categories,
        groups=groups,
        cells=cells,
        exclusions=exclusions,
        notes=notes,
    )


def run_pipeline(
    config: EvaluationConfig,
    manifest_path: str | Path,
    hypotheses_path: str | Path,
    provider: EmbeddingProvider | None = None,
    threads: int | None = None,
) -> Report:
    try:
        instances = corpus.load_manifest(manifest_path)
    except (InputError, OSError) as exc:
        raise PipelineError("load manifest", exc) from exc
    try:
        hypotheses = corpus.load_hypotheses(hypotheses_path)
    except (InputError, OSError) as exc:
        raise PipelineError("load hypotheses", exc) from exc
    if provider is None and config.embeddings_path and "bss" in config.metrics:
        try:
            provider = SidecarEmbeddings.from_jsonl(config.embeddings_path)
        except (InputError, OSError) as exc:
            raise PipelineError("load embeddings", exc) from exc
    return evaluate(config, instances, hypotheses, provider, threads)


# --------------------------------------------------------------------------
# (de)serialization


def _test_result(d: dict | None) -> TestResult | None:
    if d is None:
        return None
    dof = d.get("degrees_of_freedom")
    return TestResult(
        test_name=d["test_name"],
        statistic=d["statistic"],
        p_value=d["p_value"],
        degrees_of_freedom=None if dof is None else tuple(dof),
        note=d.get("note"),
    )


def _trace(d: dict | None) -> DecisionTrace | None:
    if d is None:
        return None
    d = dict(d)
    d["normality_results"] = {k: _test_result(v) for k, v in d["normality_results"].items()}
    d["variance_result"] = _test_result(d["variance_result"])
    d["final"] = _test_result(d["final"])
    return DecisionTrace(**d)


def report_from_dict(d: dict[str, Any]) -> Report:
    cells = [
        ReportCell(
            model_id=c["model_id"],
            category=c["category"],
            overall=GroupMetrics(**c["overall"]),
            groups=[GroupMetrics(**g) for g in c["groups"]],
            test=_trace(c["test"]),
            bias=[BiasDelta(**b) for b in c["bias"]],
            parity=[ParityVerdict(**p) for p in c["parity"]],
            notes=list(c["notes"]),
        )
        for c in d["cells"]
    ]
    fields = {k: v for k, v in d.items() if k not in ("cells", "exclusions")}
    return Report(cells=cells, exclusions=Exclusions(**d["exclusions"]), **fields)


def report_from_json(text: str) -> Report:
    return report_from_dict(json.loads(text))


# --------------------------------------------------------------------------
# rendering


def _fmt(value: float | None, digits: int = 3) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


def _metric_table(report: Report, metric: str, title: str) -> list[str]:
    attr = {"wer": "weighted_wer", "cer": "weighted_cer", "bss": "weighted_bss"}[metric]
    with_verdict = metric == "wer"
    header = ["Model", "Category", "All", *report.groups]
    if with_verdict:
        header += ["Ratio", "Test", "p"]
    lines = [f"### {title}", "", "| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for c in report.cells:
        by_name = {g.group: g for g in c.groups}
        overall = _fmt(getattr(c.overall, attr))
        row = [c.model_id, c.category]
        if with_verdict:
            stars = c.test.significance_stars if c.test else ""
            unfair = any(not v.fair for v in c.parity)
            row.append(overall + stars + (f" {UNFAIR_MARKER}" if unfair else ""))
        else:
            row.append(overall)
        row += [_fmt(getattr(by_name[g], attr)) if g in by_name else "" for g in report.groups]
        if with_verdict:
            ratios = ", ".join(
                f"{v.ratio:.3f}{' ' + v.marker if v.marker else ''}" for v in c.parity
            )
            test = c.test.chosen_test if c.test and c.test.chosen_test else "untestable"
            p = f"{c.test.final.p_value:.3g}" if c.test and c.test.final else ""
            row += [ratios, test, p]
        lines.append("| " + " | ".join(row) + " |")
    return lines


def render_markdown(report: Report) -> str:
    cfg = report.config
    out = [
        "# ASR fairness report",
        "",
        f"Grouping: `{cfg['group_attribute']}`; parity bound 1 + {cfg['epsilon']}; "
        f"assumption-check alpha {cfg['alpha_assumption']}; minimum group size {cfg['min_group_instances']}.",
        "",
        "Stars mark the per-speaker test result (* p < 0.05, ** p < 0.01, *** p < 0.001); "
        f"{UNFAIR_MARKER} marks a WER Parity violation.",
        "",
    ]
    metrics = cfg.get("metrics", METRICS)
    out += _metric_table(report, "wer", "Weighted mean WER")
    if "cer" in metrics:
        out += [""] + _metric_table(report, "cer", "Weighted mean CER")
    if "bss" in metrics and not any("BSS not computed" in n for n in report.notes):
        out += [""] + _metric_table(report, "bss", "Weighted mean BSS (not used for fairness)")

    out += ["", "### Bias deltas", "", "| Model | Category | Higher | Lower | Absolute | Relative |", "|---|---|---|---|---|---|"]
    for c in report.cells:
        for b in c.bias:
            rel = "undefined" if b.relative is None else f"{b.relative:.1%}"
            out.append(f"| {c.model_id} | {c.category} | {b.high_group} | {b.low_group} | {b.absolute:.3f} | {rel} |")

    ex = report.exclusions
    out += [
        "",
        "### Exclusions",
        "",
        f"- hypotheses without a manifest instance: {ex.unresolved_hypotheses}",
        f"- empty normalized references: {ex.empty_references}",
        f"- missing embeddings (BSS only): {ex.missing_embeddings}",
    ]
    for g, n in sorted(ex.unrepresentative_groups.items()):
        out.append(f"- unrepresentative group `{g}`: {n}")
    notes = list(report.notes) + [f"{c.model_id}/{c.category}: {n}" for c in report.cells for n in c.notes]
    if notes:
        out += ["", "### Notes", ""] + [f"- {n}" for n in notes]
    return "\n".join(out) + "\n"


def render_report(report: Report, format: Literal["json", "markdown"] = "json") -> str:
    if format == "json":
        return report.to_json()
    if format == "markdown":
        return render_markdown(report)
    raise ValueError(f"unknown report format {format!r}")
