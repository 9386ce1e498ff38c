"""Semantic similarity between reference and hypothesis embeddings.

Embeddings are never computed here. They come from a sidecar JSONL file or
from an external command that prints one vector per input line.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Literal, Protocol, Sequence

from .errors import InputError

if TYPE_CHECKING:
    from .corpus import EvaluationUnit

__all__ = [
    "EmbeddingProvider",
    "SidecarEmbeddings",
    "CommandEmbeddings",
    "cosine_similarity",
    "bss",
]

Role = Literal["reference", "hypothesis"]


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} != {len(b)}")
    if len(a) == 0:
        raise ValueError("empty embedding vector")
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    dot = math.fsum(x * y for x, y in zip(a, b))
    # clamp rounding excursions just outside [-1, 1]
    return max(-1.0, min(1.0, dot / (na * nb)))


class EmbeddingProvider(Protocol):
    def get(self, instance_id: str, role: Role, model_id: str | None, text: str) -> list[float] | None:
        """Return the vector for a key, or None when unavailable."""


class SidecarEmbeddings:
    """Vectors read from JSONL rows ``{instance_id, role, model_id, vector}``.

    Reference vectors are model independent; a reference row may omit
    ``model_id`` (or set it to null) and then serves every model.
    """

    def __init__(self, vectors: dict[tuple[str, str, str | None], list[float]]):
        self._vectors = vectors

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "SidecarEmbeddings":
        vectors: dict[tuple[str, str, str | None], list[float]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    key = (str(row["instance_id"]), str(row["role"]), row.get("model_id"))
                    vec = [float(v) for v in row["vector"]]
                except (ValueError, KeyError, TypeError) as exc:
                    raise InputError(f"malformed embedding record: {exc}", path=str(path), line=lineno) from exc
                if key[1] not in ("reference", "hypothesis"):
                    raise InputError(f"unknown role {key[1]!r}", path=str(path), line=lineno)
                if key in vectors:
                    raise InputError(f"duplicate embedding key {key}", path=str(path), line=lineno)
                vectors[key] = vec
        return cls(vectors)

    def get(self, instance_id, role, model_id, text):
        vec = self._vectors.get((instance_id, role, model_id))
        if vec is None and role == "reference":
            vec = self._vectors.get((instance_id, role, None))
        return vec

    def __len__(self) -> int:
        return len(self._vectors)


class CommandEmbeddings:
    """Embeds texts by piping them, one per line, through an external command.

    The command must print one vector per input line, either as a JSON array
    or as whitespace-separated floats. Results are cached by text.
    """

    def __init__(self, command: str | Sequence[str], timeout: float | None = None):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self._cache: dict[str, list[float]] = {}

    def prefetch(self, texts: Iterable[str]) -> None:
        todo = sorted({t.replace("\n", " ") for t in texts} - self._cache.keys())
        if not todo:
            return
        proc = subprocess.run(
            self.argv,
            input="\n".join(todo) + "\n",
            capture_output=True,
            text=True,
            timeout=self.timeout,
            check=False,
        )
        if proc.returncode != 0:
            raise InputError(f"embedding command failed with exit code {proc.returncode}: {proc.stderr.strip()}")
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if len(lines) != len(todo):
            raise InputError(f"embedding command printed {len(lines)} vectors for {len(todo)} inputs")
        for text, line in zip(todo, lines):
            line = line.strip()
            vec = json.loads(line) if line.startswith("[") else line.split()
            self._cache[text] = [float(v) for v in vec]

    def get(self, instance_id, role, model_id, text):
        key = text.replace("\n", " ")
        if key not in self._cache:
            self.prefetch([key])
        return self._cache.get(key)


def bss(unit: "EvaluationUnit", provider: EmbeddingProvider) -> float | None:
    """Cosine similarity of the unit's reference and hypothesis embeddings.

    Returns None when either embedding is unavailable.
    """
    ref = provider.get(unit.instance.instance_id, "reference", unit.model_id, unit.normalized_reference)
    hyp = provider.get(unit.instance.instance_id, "hypothesis", unit.model_id, unit.normalized_hypothesis)
    if ref is None or hyp is None:
        return None
    return cosine_similarity(ref, hyp)
