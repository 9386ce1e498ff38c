"""Corpus manifests, hypothesis files, joining and group filtering."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import shlex
import subprocess
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Literal, Mapping, Sequence

from .errors import DuplicateIdError, InputError

__all__ = [
    "TranscriptInstance",
    "Hypothesis",
    "EvaluationUnit",
    "load_manifest",
    "dump_manifest",
    "load_hypotheses",
    "dump_hypotheses",
    "join_dataset",
    "group_value",
    "filter_unrepresentative_groups",
    "run_transcriber",
]

logger = logging.getLogger(__name__)

ManifestFormat = Literal["tsv", "jsonl"]

REQUIRED_COLUMNS = ("instance_id", "speaker_id", "reference", "gender", "duration_s")
OPTIONAL_COLUMNS = ("age_band", "accent")
GENDERS = ("male", "female")
UNKNOWN = "unknown"

_GENDER_ALIASES = {
    "male": "male",
    "m": "male",
    "man": "male",
    "male_masculine": "male",
    "female": "female",
    "f": "female",
    "woman": "female",
    "female_feminine": "female",
}


def parse_gender(value: str | None) -> str:
    if value is None:
        return UNKNOWN
    return _GENDER_ALIASES.get(value.strip().lower(), UNKNOWN)


@dataclass(frozen=True)
class TranscriptInstance:
    instance_id: str
    speaker_id: str
    reference_text: str
    gender: str = UNKNOWN
    duration_s: float | None = None
    age_band: str | None = None
    accent: str | None = None
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.gender not in (*GENDERS, UNKNOWN):
            raise ValueError(f"gender must be male, female or unknown, got {self.gender!r}")
        if self.duration_s is not None and not (self.duration_s >= 0 and math.isfinite(self.duration_s)):
            raise ValueError(f"duration_s must be a finite nonnegative number, got {self.duration_s!r}")


@dataclass(frozen=True)
class Hypothesis:
    instance_id: str
    model_id: str
    hypothesis_text: str


@dataclass(frozen=True)
class EvaluationUnit:
    instance: TranscriptInstance
    model_id: str
    hypothesis_text: str
    normalized_reference: str
    normalized_hypothesis: str


def _opt(value) -> str | None:
    if value is None:
        return None
    value = str(value).strip()
    return value or None


def _instance_from_record(rec: Mapping[str, object]) -> TranscriptInstance:
    missing = [c for c in ("instance_id", "speaker_id", "reference") if rec.get(c) is None]
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    instance_id = str(rec["instance_id"]).strip()
    if not instance_id:
        raise ValueError("empty instance_id")
    duration = _opt(rec.get("duration_s"))
    gender = rec.get("gender")
    extras = {
        str(k): str(v)
        for k, v in rec.items()
        if k not in REQUIRED_COLUMNS + OPTIONAL_COLUMNS and v is not None and str(v) != ""
    }
    return TranscriptInstance(
        instance_id=instance_id,
        speaker_id=str(rec["speaker_id"]).strip(),
        reference_text=str(rec["reference"]),
        gender=parse_gender(None if gender is None else str(gender)),
        duration_s=float(duration) if duration is not None else None,
        age_band=_opt(rec.get("age_band")),
        accent=_opt(rec.get("accent")),
        attributes=extras,
    )


def _iter_tsv(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if not lines or not lines[0].strip():
        raise InputError("missing header row", path=str(path), line=1)
    header = lines[0].rstrip("\r").split("\t")
    absent = [c for c in REQUIRED_COLUMNS if c not in header]
    if absent:
        raise InputError(f"header lacks column(s): {', '.join(absent)}", path=str(path), line=1)
    if len(set(header)) != len(header):
        raise InputError("duplicate column names in header", path=str(path), line=1)
    for lineno, line in enumerate(lines[1:], 2):
        line = line.rstrip("\r")
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            raise InputError(
                f"expected {len(header)} tab-separated fields, found {len(cells)}", path=str(path), line=lineno
            )
        yield lineno, dict(zip(header, cells))


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"invalid JSON: {exc.msg}", path=str(path), line=lineno) from exc
            if not isinstance(rec, dict):
                raise InputError("record is not a JSON object", path=str(path), line=lineno)
            yield lineno, rec


def load_manifest(path: str | Path, format: ManifestFormat | None = None) -> list[TranscriptInstance]:
    """Read a corpus manifest in TSV or JSONL form.

    ``format`` defaults to the file suffix (``.jsonl``/``.json`` vs anything
    else). Row order is preserved and unknown demographic values become
    ``unknown``/None. Columns beyond the fixed schema are kept in
    ``TranscriptInstance.attributes``.
    """
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".json") else "tsv"
    rows = _iter_tsv(path) if format == "tsv" else _iter_jsonl(path)
    out: list[TranscriptInstance] = []
    seen: set[str] = set()
    for lineno, rec in rows:
        try:
            inst = _instance_from_record(rec)
        except (ValueError, TypeError) as exc:
            raise InputError(f"malformed row: {exc}", path=str(path), line=lineno) from exc
        if inst.instance_id in seen:
            raise DuplicateIdError(f"duplicate instance_id {inst.instance_id!r}", path=str(path), line=lineno)
        seen.add(inst.instance_id)
        out.append(inst)
    return out


def _instance_record(inst: TranscriptInstance) -> dict[str, str | float | None]:
    rec: dict[str, str | float | None] = {
        "instance_id": inst.instance_id,
        "speaker_id": inst.speaker_id,
        "reference": inst.reference_text,
        "gender": inst.gender,
        "duration_s": inst.duration_s,
        "age_band": inst.age_band,
        "accent": inst.accent,
    }
    rec.update(inst.attributes)
    return rec


def dump_manifest(instances: Sequence[TranscriptInstance], path: str | Path, format: ManifestFormat = "tsv") -> None:
    path = Path(path)
    records = [_instance_record(i) for i in instances]
    if format == "jsonl":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in records:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        return
    extra = sorted({k for i in instances for k in i.attributes})
    header = [*REQUIRED_COLUMNS, *OPTIONAL_COLUMNS, *extra]
    buf = io.StringIO()
    buf.write("\t".join(header) + "\n")
    for rec in records:
        rec = dict(rec)
        rec["gender"] = "" if rec["gender"] == UNKNOWN else rec["gender"]
        cells = ["" if rec.get(c) is None else repr(rec[c]) if c == "duration_s" else str(rec[c]) for c in header]
        for cell in cells:
            if "\t" in cell or "\n" in cell:
                raise InputError(f"value {cell!r} cannot be written to TSV")
        buf.write("\t".join(cells) + "\n")
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def load_hypotheses(path: str | Path) -> list[Hypothesis]:
    """Read hypotheses from JSONL records ``{instance_id, model_id, text}``."""
    out: list[Hypothesis] = []
    seen: set[tuple[str, str]] = set()
    for lineno, rec in _iter_jsonl(Path(path)):
        try:
            iid, mid, text = rec["instance_id"], rec["model_id"], rec["text"]
        except KeyError as exc:
            raise InputError(f"missing field {exc.args[0]!r}", path=str(path), line=lineno) from None
        if text is None:
            text = ""
        if not isinstance(text, str) or iid is None or mid is None:
            raise InputError("instance_id, model_id and text must be strings", path=str(path), line=lineno)
        key = (str(iid), str(mid))
        if key in seen:
            raise DuplicateIdError(f"duplicate hypothesis for {key}", path=str(path), line=lineno)
        seen.add(key)
        out.append(Hypothesis(key[0], key[1], text))
    return out


def dump_hypotheses(hypotheses: Iterable[Hypothesis], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for h in hypotheses:
            rec = {"instance_id": h.instance_id, "model_id": h.model_id, "text": h.hypothesis_text}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def join_dataset(
    instances: Sequence[TranscriptInstance],
    hypotheses: Sequence[Hypothesis],
    normalizer: Callable[[str], str],
) -> list[EvaluationUnit]:
    """Pair each hypothesis with its instance and normalize both texts.

    Hypotheses naming an unknown instance are dropped with a warning.
    """
    by_id = {inst.instance_id: inst for inst in instances}
    ref_cache: dict[str, str] = {}
    units: list[EvaluationUnit] = []
    unresolved = 0
    for hyp in hypotheses:
        inst = by_id.get(hyp.instance_id)
        if inst is None:
            unresolved += 1
            continue
        if inst.instance_id not in ref_cache:
            ref_cache[inst.instance_id] = normalizer(inst.reference_text)
        units.append(
            EvaluationUnit(
                instance=inst,
                model_id=hyp.model_id,
                hypothesis_text=hyp.hypothesis_text,
                normalized_reference=ref_cache[inst.instance_id],
                normalized_hypothesis=normalizer(hyp.hypothesis_text),
            )
        )
    if unresolved:
        logger.warning("dropped %d hypothesis record(s) with unknown instance_id", unresolved)
    if not units:
        raise InputError("no hypothesis resolves to a manifest instance; nothing to evaluate")
    return units


def group_value(instance: TranscriptInstance, attribute: str) -> str | None:
    """Value of a demographic or category attribute, None when unknown."""
    if attribute == "gender":
        return None if instance.gender == UNKNOWN else instance.gender
    if attribute in ("age_band", "accent"):
        return getattr(instance, attribute)
    if attribute in ("speaker_id", "instance_id"):
        return getattr(instance, attribute)
    value = instance.attributes.get(attribute)
    return value if value else None


def filter_unrepresentative_groups(
    units: Sequence[EvaluationUnit],
    group_attribute: str,
    min_instances: int = 50,
) -> tuple[list[EvaluationUnit], list[str]]:
    """Drop units whose group is unknown or has fewer than ``min_instances`` instances.

    Group size counts distinct instances, so several models scoring the same
    utterance do not inflate it. Excluded names are sorted, with ``unknown``
    listed when any unit lacked a value.
    """
    if min_instances < 1:
        raise ValueError("min_instances must be a positive integer")
    members: dict[str, set[str]] = {}
    has_unknown = False
    for unit in units:
        value = group_value(unit.instance, group_attribute)
        if value is None:
            has_unknown = True
            continue
        members.setdefault(value, set()).add(unit.instance.instance_id)
    keep = {g for g, ids in members.items() if len(ids) >= min_instances}
    kept = [u for u in units if group_value(u.instance, group_attribute) in keep]
    excluded = sorted(g for g in members if g not in keep)
    if has_unknown:
        excluded.append(UNKNOWN)
    return kept, excluded


def group_sizes(units: Sequence[EvaluationUnit], group_attribute: str) -> Counter:
    sizes: dict[str, set[str]] = {}
    for unit in units:
        value = group_value(unit.instance, group_attribute) or UNKNOWN
        sizes.setdefault(value, set()).add(unit.instance.instance_id)
    return Counter({g: len(ids) for g, ids in sizes.items()})


def run_transcriber(
    command: str | Sequence[str],
    audio_paths: Mapping[str, str],
    model_id: str,
    timeout: float | None = None,
) -> tuple[list[Hypothesis], list[str]]:
    """Run an external ASR command once per audio file.

    The audio path is appended as the last argument; standard output is the
    hypothesis text. Instances whose command exits nonzero (or times out) are
    returned in the failed list.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    hyps: list[Hypothesis] = []
    failed: list[str] = []
    for instance_id, audio in audio_paths.items():
        try:
            proc = subprocess.run(
                [*argv, str(audio)], capture_output=True, text=True, timeout=timeout, check=False
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            logger.warning("transcriber failed on %s: %s", instance_id, exc)
            failed.append(instance_id)
            continue
        if proc.returncode != 0:
            logger.warning("transcriber exited %d on %s", proc.returncode, instance_id)
            failed.append(instance_id)
            continue
        hyps.append(Hypothesis(instance_id, model_id, proc.stdout.strip()))
    return hyps, failed
