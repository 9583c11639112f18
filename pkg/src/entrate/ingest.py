"""Corpus loading: directory trees of plain text, plus generated JSONL.

A manifest pins the exact file set (sorted, with sizes) so that runs are
reproducible; the stream loader concatenates files in manifest order with
a single-space joiner and tokenizes the result as one continuous stream.
"""

from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

from entrate.tokenizer import TokenStream, tokenize_letters, tokenize_words


class RootNotFound(FileNotFoundError):
    pass


class NoFilesMatched(FileNotFoundError):
    pass


class CorpusReadError(OSError):
    pass


class RecordParseError(ValueError):
    """Malformed JSONL record; carries the 1-based line number."""

    def __init__(self, path, line_no, reason):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no


@dataclass
class CorpusManifest:
    root: str
    include: list[str]
    exclude: list[str]
    declared_partition: str  # written | spoken | generated
    files: list[dict] = field(default_factory=list)  # {"path": rel, "bytes": n}
    word_count: int = 0

    def paths(self) -> list[Path]:
        return [Path(self.root) / f["path"] for f in self.files]

    def to_json(self) -> str:
        return json.dumps(
            {
                "root": self.root,
                "include": self.include,
                "exclude": self.exclude,
                "declared_partition": self.declared_partition,
                "files": self.files,
                "word_count": self.word_count,
            },
            sort_keys=True,
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "CorpusManifest":
        d = json.loads(text)
        return cls(
            root=d["root"],
            include=d["include"],
            exclude=d["exclude"],
            declared_partition=d["declared_partition"],
            files=d["files"],
            word_count=d["word_count"],
        )


def _matches(rel: str, patterns) -> bool:
    return any(fnmatch.fnmatch(rel, pat) for pat in patterns)


def _read_file_text(path: Path) -> str:
    """File payload as analyzable text; JSONL files yield their text fields."""
    try:
        raw = path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise CorpusReadError(f"cannot read {path}: {exc}") from exc
    if path.suffix.lower() != ".jsonl":
        return raw
    texts = []
    for line_no, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordParseError(path, line_no, f"bad JSON: {exc}") from exc
        if not isinstance(rec, dict) or "text" not in rec:
            raise RecordParseError(path, line_no, 'missing "text" field')
        if rec["text"]:
            texts.append(rec["text"])
    return " ".join(texts)


def scan_corpus(
    root,
    include=("*.txt",),
    exclude=(),
    partition: str = "written",
    compute_word_count: bool = True,
) -> CorpusManifest:
    """Recursive deterministic scan; file order is sorted posix-relative paths."""
    rootp = Path(root)
    if not rootp.is_dir():
        raise RootNotFound(f"corpus root not found: {root}")
    include = list(include)
    exclude = list(exclude)
    entries = []
    for p in rootp.rglob("*"):
        if not p.is_file():
            continue
        rel = str(PurePosixPath(p.relative_to(rootp)))
        if not _matches(rel, include) or _matches(rel, exclude):
            continue
        entries.append((rel, p.stat().st_size))
    entries.sort()
    if not entries:
        raise NoFilesMatched(f"no files under {root} match {include}")
    manifest = CorpusManifest(
        root=str(rootp),
        include=include,
        exclude=exclude,
        declared_partition=partition,
        files=[{"path": rel, "bytes": size} for rel, size in entries],
    )
    if compute_word_count:
        manifest.word_count = sum(
            len(tokenize_words(_read_file_text(p))) for p in manifest.paths()
        )
    return manifest


def load_stream(manifest: CorpusManifest, granularity: str = "word",
                extra_meta: dict | None = None) -> TokenStream:
    """Concatenate manifest files (single-space joiner) and tokenize."""
    if not manifest.files:
        raise NoFilesMatched("manifest is empty")
    text = " ".join(_read_file_text(p) for p in manifest.paths())
    meta = {
        "corpus": Path(manifest.root).name,
        "partition": manifest.declared_partition,
        "files": len(manifest.files),
    }
    if extra_meta:
        meta.update(extra_meta)
    if granularity == "word":
        return tokenize_words(text, meta)
    if granularity == "letter":
        return tokenize_letters(text, meta)
    raise ValueError(f"unknown granularity: {granularity}")
