"""fairlens: ASR transcription quality and demographic fairness auditing."""

from .aggregate import BiasDelta, GroupMetrics, bias_delta, weighted_mean
from .align import AlignmentCounts, align, cer, wer
from .corpus import EvaluationUnit, Hypothesis, TranscriptInstance, load_hypotheses, load_manifest
from .fairness import ParityVerdict, wer_parity
from .normalize import NormalizerConfig, TextNormalizer, normalize_text
from .pipeline import EvaluationConfig, Report, render_report, run_pipeline
from .segment import plan_parts, split_turn
from .stats import DecisionTrace, select_and_test

__version__ = "0.1.0"

__all__ = [
    "AlignmentCounts",
    "BiasDelta",
    "DecisionTrace",
    "EvaluationConfig",
    "EvaluationUnit",
    "GroupMetrics",
    "Hypothesis",
    "NormalizerConfig",
    "ParityVerdict",
    "Report",
    "TextNormalizer",
    "TranscriptInstance",
    "align",
    "bias_delta",
    "cer",
    "load_hypotheses",
    "load_manifest",
    "normalize_text",
    "plan_parts",
    "render_report",
    "run_pipeline",
    "select_and_test",
    "split_turn",
    "wer",
    "wer_parity",
    "weighted_mean",
]
